"""Closed-form determinants and the network coupling matrix bound.

The stability proof leans on two structured determinants and on a bound
for the largest eigenvalue of the small (n+1)x(n+1) coupling matrix

    G = [[c, -b^T], [-b, I]],  b_i = gamma_i / sqrt(gamma_v_i * gamma),
                               c   = gamma_u / gamma.

Here each closed form is checked against a dense LU determinant or a dense
symmetric eigensolver, over random inputs. A failed G-matrix bound raises
`LemmaViolation` with the full parameter dump: it would be a
counterexample, not a tolerance problem.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from mpet_lab.domain.parameters import (
    DerivedCoefficients,
    MpetParameters,
    derive_coefficients,
)

logger = logging.getLogger(__name__)

BOUND_TOLERANCE = 1e-12
DETERMINANT_TOLERANCE = 1e-10


class LemmaViolation(AssertionError):
    """A closed form or bound failed against its dense oracle."""


def lemma3_matrix(a: float, b: np.ndarray) -> np.ndarray:
    """First row -b, `a` on the subdiagonal, zero elsewhere."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = len(b)
    matrix = np.zeros((n, n))
    matrix[0] = -b
    matrix[np.arange(1, n), np.arange(n - 1)] = a
    return matrix


def lemma3_det(a: float, b: np.ndarray) -> float:
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = len(b)
    return float((-1) ** n * a ** (n - 1) * b[-1])


def lemma4_matrix(c: float, a: float, b: np.ndarray) -> np.ndarray:
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = len(b)
    matrix = np.zeros((n + 1, n + 1))
    matrix[0, 0] = c
    matrix[0, 1:] = -b
    matrix[1:, 0] = -b
    matrix[1:, 1:] = a * np.eye(n)
    return matrix


def lemma4_det(c: float, a: float, b: np.ndarray) -> float:
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = len(b)
    return float(a ** (n - 1) * (a * c - b @ b))


@dataclass(frozen=True)
class GMatrixCheck:
    sum_b2: float
    lambda_max: float
    eigenvalues: np.ndarray
    closed_form: np.ndarray


def coupling_matrix(
    derived: DerivedCoefficients,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Return (G, b, c)."""
    b = derived.gamma / np.sqrt(derived.gamma_v * derived.gamma_max)
    c = derived.gamma_u / derived.gamma_max
    n = len(b)
    g = np.eye(n + 1)
    g[0, 0] = c
    g[0, 1:] = -b
    g[1:, 0] = -b
    return g, b, c


def g_matrix_checks(
    params: MpetParameters, derived: DerivedCoefficients | None = None
) -> GMatrixCheck:
    derived = derived or derive_coefficients(params)
    g, b, c = coupling_matrix(derived)
    sum_b2 = float(b @ b)
    eigenvalues = np.linalg.eigvalsh(g)
    root = np.sqrt((1.0 - c) ** 2 + 4.0 * sum_b2)
    closed = np.sort(
        np.concatenate(
            [np.ones(params.n - 1), [(1.0 + c - root) / 2.0, (1.0 + c + root) / 2.0]]
        )
    )
    lambda_max = float(eigenvalues[-1])

    problems = []
    if sum_b2 > 1.0 + BOUND_TOLERANCE:
        problems.append(f"sum b_i^2 = {sum_b2!r} > 1")
    if lambda_max > 2.0 + BOUND_TOLERANCE:
        problems.append(f"lambda_max(G) = {lambda_max!r} > 2")
    if not np.allclose(eigenvalues, closed, rtol=0.0, atol=1e-10 * max(1.0, c)):
        problems.append(f"eigenvalues {eigenvalues} != closed form {closed}")
    if problems:
        dump = json.dumps(params.as_dict(), sort_keys=True)
        raise LemmaViolation("; ".join(problems) + f" for parameters {dump}")
    return GMatrixCheck(sum_b2, lambda_max, eigenvalues, closed)


def _log_uniform(rng: np.random.Generator, low: float, high: float) -> float:
    return float(10.0 ** rng.uniform(np.log10(low), np.log10(high)))


def draw_parameters(rng: np.random.Generator, n: int) -> MpetParameters:
    """A random admissible parameter set spanning the degenerate limits
    (c_p = 0, beta_tilde = 0, alpha_i = 0) as well as extreme ratios."""
    total = rng.uniform(0.05, 0.95)
    phi = total * rng.dirichlet(np.ones(n))
    phi = np.clip(phi, 1e-6, None)
    phi *= total / phi.sum()
    alpha_tilde = phi + rng.uniform(0.0, 1.0, n) * (1.0 - phi)
    if rng.random() < 0.2:
        alpha_tilde = phi.copy()
    rho = np.array([_log_uniform(rng, 1e-3, 1e3) for _ in range(n)])
    rho_m = rho / phi * (1.0 + rng.uniform(0.0, 2.0, n))
    storage = [
        0.0 if rng.random() < 0.3 else _log_uniform(rng, 1e-6, 1e2) for _ in range(n)
    ]
    transfer = np.zeros((n, n))
    if rng.random() >= 0.3:
        scale = _log_uniform(rng, 1e-4, 1e4)
        upper = np.triu(rng.uniform(0.0, 1.0, (n, n)) * scale, 1)
        transfer = upper + upper.T
    tau = _log_uniform(rng, 1e-3, 1.0)
    return MpetParameters.create(
        n,
        mu=_log_uniform(rng, 1e-2, 1e4),
        lam=0.0 if rng.random() < 0.1 else _log_uniform(rng, 1e-2, 1e8),
        rho_s=float(rng.uniform(0.0, 10.0)),
        phi=phi,
        rho=rho,
        rho_m=rho_m,
        K=[_log_uniform(rng, 1e-8, 1e2) for _ in range(n)],
        alpha_tilde=np.minimum(alpha_tilde, 1.0),
        c_p=storage,
        beta_tilde=transfer,
        tau=tau,
        T=10.0 * tau,
    )


@dataclass
class LemmaSuiteResult:
    total: int = 0
    passed: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def _close(closed: float, dense: float, scale: float) -> bool:
    return abs(closed - dense) <= DETERMINANT_TOLERANCE * max(abs(dense), scale)


def run_lemma_suite(
    draws: int, seed: int, max_networks: int = 8
) -> dict[str, LemmaSuiteResult]:
    """Randomized comparison of every closed form with its dense oracle."""
    rng = np.random.default_rng(seed)
    results = {
        "lemma3": LemmaSuiteResult(),
        "lemma4": LemmaSuiteResult(),
        "g_matrix": LemmaSuiteResult(),
    }

    for draw in range(draws):
        n = int(rng.integers(1, max_networks + 1))
        a = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0))
        b = rng.standard_normal(n)
        c = float(rng.standard_normal())

        result = results["lemma3"]
        result.total += 1
        closed = lemma3_det(a, b)
        dense = float(np.linalg.det(lemma3_matrix(a, b)))
        if _close(closed, dense, abs(a) ** (n - 1) * np.abs(b).max()):
            result.passed += 1
        else:
            result.failures.append(f"draw {draw}: lemma3 {closed!r} vs {dense!r}")

        result = results["lemma4"]
        result.total += 1
        closed = lemma4_det(c, a, b)
        dense = float(np.linalg.det(lemma4_matrix(c, a, b)))
        if _close(closed, dense, abs(a) ** (n - 1) * (abs(a * c) + b @ b)):
            result.passed += 1
        else:
            result.failures.append(f"draw {draw}: lemma4 {closed!r} vs {dense!r}")

        result = results["g_matrix"]
        result.total += 1
        try:
            g_matrix_checks(draw_parameters(rng, n))
            result.passed += 1
        except LemmaViolation as error:
            result.failures.append(f"draw {draw}: {error}")

    for name, result in results.items():
        logger.info("%s: %d/%d passed", name, result.passed, result.total)
    return results

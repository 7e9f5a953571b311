"""Physical and scheme parameters, the coefficients the time-step operator
is built from, and the network weight matrices of the stability norm.

Pure domain: numpy only, no I/O. Everything is nondimensional. The
parameter record validates itself on construction, so every downstream
function may assume an admissible set; a violated constraint is reported
by name, with the network index, and never silently corrected.

The identity shifts of the time-step operator (the "+1" in gamma_u and
gamma_v) mix densities with pure numbers; they are taken as written, in
nondimensional form.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

SINGULAR_CONDITION = 1e15
DENSITY_SLACK = 1e-12
"""Relative slack of the rho_m >= rho/phi check; gamma_i within it of zero
is rounding."""
PER_NETWORK = ("phi", "rho", "rho_m", "K", "alpha_tilde", "c_p")
SCALARS = ("mu", "lam", "rho_s", "tau", "T")


class ParameterError(ValueError):
    """A parameter set violates one of the admissibility constraints."""


class SingularWeightsError(ValueError):
    """The network weight matrix is numerically singular."""


def _tuple(values: float | Sequence[float], n: int, name: str) -> tuple[float, ...]:
    if np.isscalar(values):
        return (float(values),) * n
    out = tuple(float(v) for v in values)
    if len(out) != n:
        raise ParameterError(f"{name} has {len(out)} entries, expected n = {n}")
    return out


def _transfer_matrix(beta_tilde, n: int) -> tuple[tuple[float, ...], ...]:
    if np.isscalar(beta_tilde):
        full = np.full((n, n), float(beta_tilde))
    else:
        full = np.array(beta_tilde, dtype=float)
        if full.shape != (n, n):
            raise ParameterError(
                f"beta_tilde has shape {full.shape}, expected ({n}, {n})"
            )
    np.fill_diagonal(full, 0.0)
    return tuple(tuple(float(v) for v in row) for row in full)


@dataclass(frozen=True)
class MpetParameters:
    n: int
    mu: float
    lam: float
    rho_s: float
    phi: tuple[float, ...]
    rho: tuple[float, ...]
    rho_m: tuple[float, ...]
    K: tuple[float, ...]
    alpha_tilde: tuple[float, ...]
    c_p: tuple[float, ...]
    beta_tilde: tuple[tuple[float, ...], ...]
    tau: float
    T: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError(f"network count n must be >= 1, got {self.n}")
        for name in PER_NETWORK:
            if len(getattr(self, name)) != self.n:
                raise ParameterError(f"{name} must have n = {self.n} entries")
        if len(self.beta_tilde) != self.n or any(
            len(row) != self.n for row in self.beta_tilde
        ):
            raise ParameterError(f"beta_tilde must be {self.n}x{self.n}")
        if not self.mu > 0:
            raise ParameterError(f"mu must be > 0, got {self.mu}")
        if not self.lam >= 0:
            raise ParameterError(f"lam must be >= 0, got {self.lam}")
        if not self.rho_s >= 0:
            raise ParameterError(f"rho_s must be >= 0, got {self.rho_s}")
        if not self.tau > 0:
            raise ParameterError(f"tau must be > 0, got {self.tau}")
        if not self.T > 0:
            raise ParameterError(f"T must be > 0, got {self.T}")

        total = sum(self.phi)
        if not 0.0 < total < 1.0:
            raise ParameterError(f"sum of phi_i must lie in (0, 1), got {total}")
        for i in range(self.n):
            phi, rho, rho_m = self.phi[i], self.rho[i], self.rho_m[i]
            if not 0.0 < phi < 1.0:
                raise ParameterError(f"network {i}: phi must lie in (0, 1), got {phi}")
            if not phi <= self.alpha_tilde[i] <= 1.0:
                raise ParameterError(
                    f"network {i}: need phi <= alpha_tilde <= 1, got "
                    f"phi={phi}, alpha_tilde={self.alpha_tilde[i]}"
                )
            if not rho >= 0:
                raise ParameterError(f"network {i}: rho must be >= 0, got {rho}")
            if rho_m * phi < rho * (1.0 - DENSITY_SLACK):
                raise ParameterError(
                    f"network {i}: need rho_m >= rho/phi, got rho_m={rho_m}, "
                    f"rho/phi={rho / phi}"
                )
            if not self.K[i] > 0:
                raise ParameterError(f"network {i}: K must be > 0, got {self.K[i]}")
            if not self.c_p[i] >= 0:
                raise ParameterError(
                    f"network {i}: c_p must be >= 0, got {self.c_p[i]}"
                )

        transfer = np.array(self.beta_tilde)
        if not np.array_equal(transfer, transfer.T):
            raise ParameterError("beta_tilde must be symmetric")
        if np.any(transfer < 0):
            raise ParameterError("beta_tilde entries must be >= 0")

    @classmethod
    def create(
        cls,
        n: int,
        *,
        mu: float = 1.0,
        lam: float = 1.0,
        rho_s: float = 1.0,
        phi: float | Sequence[float] = 0.2,
        rho: float | Sequence[float] = 1.0,
        rho_m: float | Sequence[float] | None = None,
        K: float | Sequence[float] = 1.0,  # noqa: N803
        alpha_tilde: float | Sequence[float] | None = None,
        c_p: float | Sequence[float] = 1.0,
        beta_tilde: float | Sequence[Sequence[float]] = 0.0,
        tau: float = 0.1,
        T: float = 1.0,  # noqa: N803
    ) -> MpetParameters:
        """Broadcast scalars to every network. Defaults keep the set
        admissible for any n <= 4: phi_i = 0.2, rho_m = 2 rho/phi and
        alpha_tilde halfway between phi and 1."""
        phis = _tuple(phi, n, "phi")
        rhos = _tuple(rho, n, "rho")
        if rho_m is None:
            rho_m = tuple(2.0 * r / p for r, p in zip(rhos, phis, strict=True))
        if alpha_tilde is None:
            alpha_tilde = tuple(0.5 * (1.0 + p) for p in phis)
        return cls(
            n=n,
            mu=float(mu),
            lam=float(lam),
            rho_s=float(rho_s),
            phi=phis,
            rho=rhos,
            rho_m=_tuple(rho_m, n, "rho_m"),
            K=_tuple(K, n, "K"),
            alpha_tilde=_tuple(alpha_tilde, n, "alpha_tilde"),
            c_p=_tuple(c_p, n, "c_p"),
            beta_tilde=_transfer_matrix(beta_tilde, n),
            tau=float(tau),
            T=float(T),
        )

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class DerivedCoefficients:
    alpha: np.ndarray
    gamma: np.ndarray
    gamma_u: float
    gamma_v: np.ndarray
    beta: np.ndarray
    gamma_max: float
    inertia_uu: float
    """Solid-row inertia (1 - phi) rho_s - sum phi_i (rho_i - phi_i rho_m_i)."""
    inertia_uv: np.ndarray
    """Solid/network inertia coupling rho_i - phi_i rho_m_i (<= 0)."""
    inertia_vv: np.ndarray


def derive_coefficients(params: MpetParameters) -> DerivedCoefficients:
    tau = params.tau
    phi = np.array(params.phi)
    rho = np.array(params.rho)
    rho_m = np.array(params.rho_m)
    conductivity = np.array(params.K)
    storage = np.array(params.c_p)
    transfer = np.array(params.beta_tilde)

    alpha = np.array(params.alpha_tilde) - phi
    inertia_uv = rho - phi * rho_m
    gamma = tau * phi / (2.0 * conductivity) - inertia_uv
    rounding = DENSITY_SLACK * np.maximum(rho, phi * rho_m)
    gamma[np.abs(gamma) <= rounding] = 0.0
    if np.any(gamma < 0.0):
        logger.warning("negative drag coefficient gamma = %s", gamma)
    gamma_u = (1.0 - phi.sum()) * params.rho_s + 1.0 + float(phi @ gamma)
    gamma_v = rho_m + tau / (2.0 * conductivity) + 1.0

    beta = tau**3 / 8.0 * transfer
    np.fill_diagonal(beta, beta.sum(axis=1) + tau**2 / 4.0 * storage)
    gamma_max = max(tau**2 * params.mu / 2.0, tau**2 * params.lam / 4.0, gamma_u)

    return DerivedCoefficients(
        alpha=alpha,
        gamma=gamma,
        gamma_u=gamma_u,
        gamma_v=gamma_v,
        beta=beta,
        gamma_max=gamma_max,
        inertia_uu=(1.0 - phi.sum()) * params.rho_s - float(phi @ inertia_uv),
        inertia_uv=inertia_uv,
        inertia_vv=rho_m,
    )


def transfer_laplacian(params: MpetParameters) -> np.ndarray:
    """Graph Laplacian of the transfer coefficients: row sums on the
    diagonal, -beta_tilde_ij off it."""
    transfer = np.array(params.beta_tilde)
    return np.diag(transfer.sum(axis=1)) - transfer


@dataclass(frozen=True, eq=False)
class NormWeights:
    lambda1: np.ndarray
    lambda2: np.ndarray
    lambda3: np.ndarray
    lambda4: np.ndarray
    lam: np.ndarray
    lambda_uv: np.ndarray
    condition: float

    def lam_inverse(self) -> np.ndarray:
        if self.condition > SINGULAR_CONDITION:
            raise SingularWeightsError(
                f"network weight matrix is numerically singular "
                f"(condition {self.condition:.3e})"
            )
        return np.linalg.inv(self.lam)


def build_norm_weights(
    params: MpetParameters, derived: DerivedCoefficients
) -> NormWeights:
    n, tau = params.n, params.tau
    lambda1 = tau / 2.0 * transfer_laplacian(params) + np.diag(params.c_p)
    lambda2 = np.diag(tau**2 / 4.0 / derived.gamma_v)
    alpha = derived.alpha
    lambda3 = tau**2 / (4.0 * derived.gamma_max) * np.outer(alpha, alpha)
    lam = lambda1 + lambda2 + lambda3
    condition = float(np.linalg.cond(lam))
    if condition > SINGULAR_CONDITION:
        logger.warning("network weight matrix has condition %.3e", condition)

    size = 2 * n + 2
    lambda_uv = np.zeros((size, size))
    lambda_uv[0, 0] = derived.gamma_u
    lambda_uv[0, 1 : n + 1] = -derived.gamma
    lambda_uv[1 : n + 1, 0] = -derived.gamma
    lambda_uv[1 : n + 1, 1 : n + 1] = np.diag(derived.gamma_v)
    for k in range(n + 1):
        lambda_uv[k, n + 1 + k] = lambda_uv[n + 1 + k, k] = -tau / 2.0
        lambda_uv[n + 1 + k, n + 1 + k] = tau**2 / 4.0

    return NormWeights(
        lambda1=lambda1,
        lambda2=lambda2,
        lambda3=lambda3,
        lambda4=np.ones((n, n)),
        lam=lam,
        lambda_uv=lambda_uv,
        condition=condition,
    )


@dataclass
class StabilityReport:
    """Measured analogues of the constants the stability theory proves
    exist. Every field is optional: a report collects whatever one
    experiment measured."""

    nx: int | None = None
    c0: float | None = None
    c1: float | None = None
    c2: float | None = None
    c3: float | None = None
    alpha_a: float | None = None
    beta_s: float | None = None
    beta_v: float | None = None
    kappa: float | None = None
    xi_min: float | None = None
    xi_max: float | None = None
    iterations: list[int] = field(default_factory=list)

    def positive_where_claimed(self) -> bool:
        values = [
            self.c0,
            self.c1,
            self.c2,
            self.c3,
            self.alpha_a,
            self.beta_s,
            self.beta_v,
            self.kappa,
            self.xi_min,
            self.xi_max,
        ]
        measured = [v for v in values if v is not None]
        return all(np.isfinite(v) and v > 0 for v in measured)

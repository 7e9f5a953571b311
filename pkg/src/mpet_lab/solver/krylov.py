"""Preconditioned MINRES on the deflated block system, and the direct
solve used as its oracle.

The preconditioner is the block-diagonal B = diag(B_uv, B_p) applied
exactly through two sparse LU factorizations. The recurrence is the
standard Lanczos/Givens form of MINRES in the B^-1 inner product, so
`residual` is the relative preconditioned residual phibar / beta1.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, splu

from mpet_lab.assembly.operator import BlockSystem
from mpet_lab.solver.deflation import (
    BorderedSolver,
    SolverBreakdownError,
    deflated_inverse,
    deflated_operator,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 500


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    residual: float
    wall_time: float
    converged: bool = True


class BlockPreconditioner:
    """Exact application of diag(B_uv, B_p)^-1."""

    def __init__(self, system: BlockSystem) -> None:
        self.split = system.layout.mechanics.stop
        self._mechanics = splu(sp.csc_matrix(system.b_uv))
        self._pressure = splu(sp.csc_matrix(system.b_p))

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.ravel(x)
        return np.concatenate(
            [
                self._mechanics.solve(x[: self.split]),
                self._pressure.solve(x[self.split :]),
            ]
        )


def minres(
    system: BlockSystem,
    rhs: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    preconditioner: BlockPreconditioner | None = None,
    matrix: sp.spmatrix | None = None,
) -> tuple[np.ndarray, SolveStats]:
    """Solve P A P x = P rhs for zero-mean x.

    `matrix` swaps in another symmetric operator on the same layout.
    Hitting max_iter is not an error: the last iterate comes back with
    converged=False.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    started = time.perf_counter()
    preconditioner = preconditioner or BlockPreconditioner(system)
    operator: LinearOperator = deflated_operator(
        system, system.matrix if matrix is None else matrix
    )
    precond = deflated_inverse(system, preconditioner.apply)

    b = system.projector.project(np.asarray(rhs, dtype=float))
    size = len(b)
    x = np.zeros(size)
    r1 = b.copy()
    y = precond.matvec(r1)
    beta1 = float(r1 @ y)
    if beta1 < 0.0:
        raise SolverBreakdownError("preconditioner is not positive definite")
    if beta1 == 0.0:
        return x, SolveStats(0, 0.0, time.perf_counter() - started, True)
    beta1 = np.sqrt(beta1)

    eps = np.finfo(float).eps
    oldb, beta, dbar, epsln = 0.0, beta1, 0.0, 0.0
    phibar = beta1
    cs, sn = -1.0, 0.0
    w = np.zeros(size)
    w2 = np.zeros(size)
    r2 = r1
    iterations, converged = 0, False

    while iterations < max_iter:
        iterations += 1
        v = y / beta
        y = operator.matvec(v)
        if iterations >= 2:
            y = y - (beta / oldb) * r1
        alpha = float(v @ y)
        y = y - (alpha / beta) * r2
        r1, r2 = r2, y
        y = precond.matvec(r2)
        oldb = beta
        beta_sq = float(r2 @ y)
        if beta_sq < -eps * beta1**2:
            raise SolverBreakdownError(
                f"indefinite preconditioner at iteration {iterations}"
            )
        beta = np.sqrt(max(beta_sq, 0.0))

        oldeps = epsln
        delta = cs * dbar + sn * alpha
        gbar = sn * dbar - cs * alpha
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(np.hypot(gbar, beta), eps)
        cs, sn = gbar / gamma, beta / gamma
        phi = cs * phibar
        phibar = sn * phibar

        w1, w2 = w2, w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w
        if not np.all(np.isfinite(x)):
            raise SolverBreakdownError(f"non-finite iterate at iteration {iterations}")

        # beta == 0: the Krylov space is invariant and x is exact
        if phibar <= tol * beta1 or beta == 0.0:
            converged = True
            break

    residual = float(phibar / beta1)
    if not converged:
        logger.warning(
            "MINRES stopped at max_iter=%d with relative residual %.3e",
            max_iter,
            residual,
        )
    stats = SolveStats(
        iterations=iterations,
        residual=residual,
        wall_time=time.perf_counter() - started,
        converged=converged,
    )
    logger.debug("MINRES: %d iterations, residual %.3e", iterations, residual)
    return system.projector.project(x), stats


def relative_residual(
    system: BlockSystem,
    x: np.ndarray,
    rhs: np.ndarray,
    matrix: sp.spmatrix | None = None,
) -> float:
    """||P (A x - rhs)|| / ||P rhs||, zero for a zero right-hand side."""
    operator = system.matrix if matrix is None else matrix
    projector = system.projector
    scale = float(np.linalg.norm(projector.project(rhs)))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(projector.project(operator @ x - rhs))) / scale


def direct_solve(
    system: BlockSystem, rhs: np.ndarray, matrix: sp.spmatrix | None = None
) -> np.ndarray:
    """Sparse LU on the bordered (deflated) system."""
    return BorderedSolver(system, matrix).solve(np.asarray(rhs, dtype=float))

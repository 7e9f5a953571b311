"""Removal of the constant-pressure directions.

Every network pressure is fixed up to a constant unless storage or
transfer pins its mean. Solves and eigen-analysis therefore run on the
zero-mean subspace, range(P) with P = I - U U^T and U the unit constraint
normals of `PressureProjector`:

  * dense analysis restricts to an orthonormal basis Q of range(P),
  * direct solves border A with U, [[A, U], [U^T, 0]],
  * Krylov solves use P A P + U U^T with the preconditioner
    P B^-1 P + U U^T, which is SPD and leaves range(P) invariant.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
from scipy.linalg import null_space
from scipy.sparse.linalg import LinearOperator, splu

from mpet_lab.assembly.operator import BlockSystem

logger = logging.getLogger(__name__)


class SolverBreakdownError(RuntimeError):
    """Krylov breakdown, or a singular system left after deflation."""


def complement_basis(system: BlockSystem) -> np.ndarray:
    """Orthonormal basis (N, N - n) of the zero-mean subspace."""
    constraints = system.projector.constraints.toarray()
    return null_space(constraints.T)


def _diagnostic(system: BlockSystem) -> str:
    params = system.params
    return (
        f"n={params.n}, mu={params.mu}, lam={params.lam}, K={params.K}, "
        f"c_p={params.c_p}, tau={params.tau}, weight condition="
        f"{system.weights.condition:.3e}"
    )


class BorderedSolver:
    """Sparse LU of [[A, U], [U^T, 0]]; solve() returns the zero-mean part."""

    def __init__(self, system: BlockSystem, matrix: sp.spmatrix | None = None):
        self.system = system
        operator = system.matrix if matrix is None else matrix
        constraints = system.projector.constraints
        bordered = sp.bmat(
            [[operator, constraints], [constraints.T, None]], format="csc"
        )
        try:
            self._lu = splu(bordered)
        except RuntimeError as exc:
            raise SolverBreakdownError(
                f"operator is singular after deflation ({_diagnostic(system)})"
            ) from exc
        self._size = system.dofs

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        extended = np.concatenate([rhs, np.zeros(self.system.params.n)])
        solution = self._lu.solve(extended)
        if not np.all(np.isfinite(solution)):
            raise SolverBreakdownError(
                f"non-finite solution after deflation ({_diagnostic(self.system)})"
            )
        return solution[: self._size]


def deflated_operator(system: BlockSystem, matrix: sp.spmatrix) -> LinearOperator:
    """P M P + U U^T as a LinearOperator."""
    projector = system.projector
    constraints = projector.constraints

    def matvec(x: np.ndarray) -> np.ndarray:
        x = np.ravel(x)
        return projector.project(matrix @ projector.project(x)) + constraints @ (
            constraints.T @ x
        )

    size = system.dofs
    return LinearOperator((size, size), matvec=matvec, dtype=float)


def deflated_inverse(system: BlockSystem, apply_inverse) -> LinearOperator:
    """P B^-1 P + U U^T for a callable applying B^-1."""
    projector = system.projector
    constraints = projector.constraints

    def matvec(x: np.ndarray) -> np.ndarray:
        x = np.ravel(x)
        return projector.project(apply_inverse(projector.project(x))) + (
            constraints @ (constraints.T @ x)
        )

    size = system.dofs
    return LinearOperator((size, size), matvec=matvec, dtype=float)

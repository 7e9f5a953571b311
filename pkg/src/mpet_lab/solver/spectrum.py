"""Dense generalized eigenvalues of the pencil A x = xi W x on the zero-mean
subspace. min |xi| measures discrete inf-sup stability, max |xi|
boundedness, and their ratio the condition number of the preconditioned
operator."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh

from mpet_lab.assembly.operator import BlockSystem
from mpet_lab.fem.dg import DENSE_LIMIT
from mpet_lab.solver.deflation import complement_basis

logger = logging.getLogger(__name__)


class SpectrumTooLargeError(ValueError):
    """Dense pencil requested above the DOF limit."""


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray

    @property
    def xi_min(self) -> float:
        return float(np.min(np.abs(self.eigenvalues)))

    @property
    def xi_max(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    @property
    def kappa(self) -> float:
        return self.xi_max / self.xi_min

    @property
    def negative(self) -> int:
        return int(np.sum(self.eigenvalues < 0.0))


def restricted(matrix: sp.spmatrix, basis: np.ndarray) -> np.ndarray:
    dense = basis.T @ (matrix @ basis)
    return 0.5 * (dense + dense.T)


def spectrum(
    system: BlockSystem,
    max_dofs: int = DENSE_LIMIT,
    matrix: sp.spmatrix | None = None,
    norm_matrix: sp.spmatrix | None = None,
) -> Spectrum:
    if system.dofs > max_dofs:
        raise SpectrumTooLargeError(
            f"{system.dofs} dofs exceed the dense limit of {max_dofs}"
        )
    basis = complement_basis(system)
    a = restricted(system.matrix if matrix is None else matrix, basis)
    w = restricted(system.norm_matrix if norm_matrix is None else norm_matrix, basis)
    eigenvalues = eigh(a, w, eigvals_only=True)
    result = Spectrum(eigenvalues)
    logger.info(
        "pencil on %d dofs: xi in [%.4g, %.4g] by modulus, kappa %.4g, %d negative",
        basis.shape[1],
        result.xi_min,
        result.xi_max,
        result.kappa,
        result.negative,
    )
    return result

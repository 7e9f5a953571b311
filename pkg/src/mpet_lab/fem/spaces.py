"""Lowest-order H(div) and piecewise-constant spaces on a triangulation.

BDM1 is all linear vector fields on a triangle with two degrees of freedom
per edge: the normal flux and its first Legendre moment along the edge,
both taken against the global edge normal and the global low-to-high edge
parametrization. RT0 keeps only the flux. Since an RT0 field has constant
normal flux on every edge, its first moments vanish, so each RT0 basis
function is exactly the BDM1 basis function of the same flux DOF.

Local bases are the dual bases of those functionals, computed per triangle
by inverting the small DOF-by-monomial matrix. Both triangles sharing an
edge see the same functionals there, which is all the normal-continuity
argument needs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from mpet_lab.domain.mesh import Mesh
from mpet_lab.fem.quadrature import edge_rule

logger = logging.getLogger(__name__)

SQRT3 = np.sqrt(3.0)


class SpaceError(ValueError):
    """Spaces on different meshes, or a space kind an operator cannot use."""


class SpaceKind(StrEnum):
    BDM1 = "BDM1"
    RT0 = "RT0"
    P0 = "P0"

    @property
    def dofs_per_edge(self) -> int:
        return {SpaceKind.BDM1: 2, SpaceKind.RT0: 1, SpaceKind.P0: 0}[self]

    @property
    def is_vector(self) -> bool:
        return self is not SpaceKind.P0


# Vector monomials in local coordinates (xi, eta) = x - centroid.
# BDM1: (1,0) (xi,0) (eta,0) (0,1) (0,xi) (0,eta); RT0: (1,0) (0,1) (xi,eta).
_BDM1_GRADIENTS = np.zeros((6, 2, 2))
_BDM1_GRADIENTS[1, 0, 0] = _BDM1_GRADIENTS[2, 0, 1] = 1.0
_BDM1_GRADIENTS[4, 1, 0] = _BDM1_GRADIENTS[5, 1, 1] = 1.0
_RT0_GRADIENTS = np.zeros((3, 2, 2))
_RT0_GRADIENTS[2] = np.eye(2)


def _monomial_values(kind: SpaceKind, local: np.ndarray) -> np.ndarray:
    """(..., 2) local coordinates -> (..., n_monomials, 2) values."""
    xi, eta = local[..., 0], local[..., 1]
    one, zero = np.ones_like(xi), np.zeros_like(xi)
    if kind is SpaceKind.BDM1:
        columns = [
            (one, zero),
            (xi, zero),
            (eta, zero),
            (zero, one),
            (zero, xi),
            (zero, eta),
        ]
    else:
        columns = [(one, zero), (zero, one), (xi, eta)]
    return np.stack([np.stack(pair, axis=-1) for pair in columns], axis=-2)


@dataclass(frozen=True, eq=False)
class LocalBasis:
    """Per-triangle basis: phi_j(x) = sum_c m_c(x - x_T) coefficients[T, c, j]."""

    kind: SpaceKind
    coefficients: np.ndarray  # (T, n_monomials, n_local)
    centroids: np.ndarray  # (T, 2)

    @property
    def n_local(self) -> int:
        return self.coefficients.shape[-1]

    def values(self, triangles: np.ndarray, points: np.ndarray) -> np.ndarray:
        """points (N, q, 2) in triangles (N,) -> (N, q, n_local, 2)."""
        local = points - self.centroids[triangles][:, None, :]
        monomials = _monomial_values(self.kind, local)
        return np.einsum("nqcd,ncj->nqjd", monomials, self.coefficients[triangles])

    def gradients(self) -> np.ndarray:
        """(T, n_local, 2, 2) constant gradients; [component, derivative]."""
        table = _BDM1_GRADIENTS if self.kind is SpaceKind.BDM1 else _RT0_GRADIENTS
        return np.einsum("cde,tcj->tjde", table, self.coefficients)

    def divergences(self) -> np.ndarray:
        """(T, n_local) constant divergences."""
        return np.trace(self.gradients(), axis1=-2, axis2=-1)


def _local_basis(mesh: Mesh, kind: SpaceKind) -> LocalBasis:
    rule = edge_rule(3)
    centroids = mesh.centroids
    per_edge = kind.dofs_per_edge
    n_local = 3 * per_edge
    n_monomials = 6 if kind is SpaceKind.BDM1 else 3
    vandermonde = np.zeros((mesh.n_triangles, n_local, n_monomials))

    for k in range(3):
        edge = mesh.triangle_edges[:, k]
        low, high = mesh.edges[edge, 0], mesh.edges[edge, 1]
        start, end = mesh.vertices[low], mesh.vertices[high]
        points = start[:, None, :] + rule.points[None, :, None] * (end - start)[
            :, None, :
        ]
        monomials = _monomial_values(kind, points - centroids[:, None, :])
        flux = np.einsum("tqcd,td->tqc", monomials, mesh.unit_normals[edge])
        length = mesh.edge_lengths[edge][:, None]
        weighted = rule.weights[None, :, None] * flux
        vandermonde[:, per_edge * k] = length * weighted.sum(axis=1)
        if per_edge == 2:
            legendre = SQRT3 * (2.0 * rule.points - 1.0)
            vandermonde[:, per_edge * k + 1] = length * np.einsum(
                "tqc,q->tc", weighted, legendre
            )

    return LocalBasis(kind, np.linalg.inv(vandermonde), centroids)


@dataclass(frozen=True, eq=False)
class DofMap:
    """Global numbering of one space.

    `cell_dofs[t, j]` is the global index of local DOF j on triangle t, or
    -1 where the DOF was eliminated by the boundary constraint. Local DOF
    j of a vector space lives on local edge j // dofs_per_edge.
    `boundary_flags` and `full_to_reduced` index the unconstrained
    numbering (2e + m for BDM1, e for RT0, t for P0).
    """

    kind: SpaceKind
    mesh: Mesh
    constrained: bool
    ndofs: int
    cell_dofs: np.ndarray
    boundary_flags: np.ndarray
    full_to_reduced: np.ndarray
    edge_signs: np.ndarray
    basis: LocalBasis | None

    def same_mesh(self, other: DofMap) -> bool:
        return self.mesh is other.mesh


def build_dofmap(
    mesh: Mesh, kind: SpaceKind | str, constrain_boundary: bool = True
) -> DofMap:
    kind = SpaceKind(kind)
    if kind is SpaceKind.P0:
        n = mesh.n_triangles
        return DofMap(
            kind=kind,
            mesh=mesh,
            constrained=False,
            ndofs=n,
            cell_dofs=np.arange(n)[:, None],
            boundary_flags=np.zeros(n, dtype=bool),
            full_to_reduced=np.arange(n),
            edge_signs=mesh.triangle_edge_signs,
            basis=None,
        )

    per_edge = kind.dofs_per_edge
    boundary = np.repeat(mesh.boundary_flags, per_edge)
    full_to_reduced = np.arange(len(boundary))
    if constrain_boundary:
        full_to_reduced = np.where(boundary, -1, np.cumsum(~boundary) - 1)
    full = (
        per_edge * mesh.triangle_edges[:, :, None] + np.arange(per_edge)[None, None, :]
    ).reshape(mesh.n_triangles, -1)
    dofmap = DofMap(
        kind=kind,
        mesh=mesh,
        constrained=constrain_boundary,
        ndofs=int((full_to_reduced >= 0).sum()),
        cell_dofs=full_to_reduced[full],
        boundary_flags=boundary,
        full_to_reduced=full_to_reduced,
        edge_signs=mesh.triangle_edge_signs,
        basis=_local_basis(mesh, kind),
    )
    logger.debug(
        "%s dofmap (%s): %d dofs",
        kind,
        "constrained" if constrain_boundary else "free",
        dofmap.ndofs,
    )
    return dofmap

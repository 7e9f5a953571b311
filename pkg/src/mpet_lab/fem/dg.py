"""Symmetric interior-penalty form for the elasticity block, and its norms.

    a_h(u, w) = sum_T (eps u, eps w)_T
              - sum_e <{eps u}, [w_t]>_e - sum_e <{eps w}, [u_t]>_e
              + eta sum_e h_e^-1 <[u_t], [w_t]>_e

with {tau} = (tau_plus + tau_minus)/2 n_e and [w] = w_plus - w_minus on
interior edges, {tau} = tau n and [w] = w on boundary edges. Only the
tangential jump enters: BDM1 fields already have continuous normal
components, and the constrained space has zero normal trace on the
boundary, so the tangential boundary jump imposes the no-slip condition
weakly.

Everything is assembled from four pieces (strain Gram, gradient Gram,
jump Gram, consistency), so the operator and the mesh-dependent norms
share one quadrature path.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigvalsh
from scipy.sparse.linalg import splu

from mpet_lab.domain.mesh import Mesh
from mpet_lab.fem.operators import scatter
from mpet_lab.fem.quadrature import edge_rule
from mpet_lab.fem.spaces import DofMap, SpaceError, SpaceKind

logger = logging.getLogger(__name__)

DENSE_LIMIT = 4000


class DgConfigError(ValueError):
    """Invalid penalty or quadrature setting."""


class CoercivityError(ValueError):
    """The penalized form is not positive definite for the chosen penalty."""


@dataclass(frozen=True)
class DgConfig:
    penalty: float = 10.0
    quadrature_degree: int = 4

    def __post_init__(self) -> None:
        if not self.penalty > 0:
            raise DgConfigError(f"penalty must be > 0, got {self.penalty}")
        if self.quadrature_degree < 2:
            raise DgConfigError(
                f"quadrature degree must be >= 2, got {self.quadrature_degree}"
            )


@dataclass(frozen=True, eq=False)
class DgForms:
    strain: sp.csr_matrix
    gradient: sp.csr_matrix
    jump: sp.csr_matrix
    consistency: sp.csr_matrix

    def elasticity(self, penalty: float) -> sp.csr_matrix:
        c = self.consistency
        return (self.strain - c - c.T + penalty * self.jump).tocsr()

    @property
    def h_gram(self) -> sp.csr_matrix:
        """Gram matrix of ||u||_h^2 = sum ||eps u||^2 + sum h_e^-1 ||[u_t]||^2."""
        return (self.strain + self.jump).tocsr()

    @property
    def dg_gram(self) -> sp.csr_matrix:
        """Gram matrix of ||u||_{1,h}^2, which equals ||u||_DG^2 for linear
        fields (the second-derivative term vanishes elementwise)."""
        return (self.gradient + self.jump).tocsr()


@dataclass(frozen=True)
class DgNorms:
    h: float
    one_h: float
    dg: float


def _edge_points(mesh: Mesh, s: np.ndarray) -> np.ndarray:
    start = mesh.vertices[mesh.edges[:, 0]]
    end = mesh.vertices[mesh.edges[:, 1]]
    return start[:, None, :] + s[None, :, None] * (end - start)[:, None, :]


def dg_forms(dofmap: DofMap, config: DgConfig | None = None) -> DgForms:
    config = config or DgConfig()
    if dofmap.kind is not SpaceKind.BDM1:
        raise SpaceError(f"the DG elasticity form lives on BDM1, got {dofmap.kind}")
    mesh, basis = dofmap.mesh, dofmap.basis
    shape = (dofmap.ndofs, dofmap.ndofs)

    grad = basis.gradients()
    strain = 0.5 * (grad + grad.swapaxes(-1, -2))
    areas = mesh.triangle_areas
    strain_gram = scatter(
        np.einsum("t,tiab,tjab->tij", areas, strain, strain),
        dofmap.cell_dofs,
        dofmap.cell_dofs,
        shape,
    )
    gradient_gram = scatter(
        np.einsum("t,tiab,tjab->tij", areas, grad, grad),
        dofmap.cell_dofs,
        dofmap.cell_dofs,
        shape,
    )

    rule = edge_rule(config.quadrature_degree)
    points = _edge_points(mesh, rule.points)
    normals = mesh.unit_normals
    tangents = np.column_stack([-normals[:, 1], normals[:, 0]])
    omega = np.where(mesh.boundary_flags, 1.0, 0.5)

    jumps, averages, dofs = [], [], []
    for side, sign in ((0, 1.0), (1, -1.0)):
        owner = mesh.edge_to_triangles[:, side]
        valid = owner >= 0
        safe = np.where(valid, owner, 0)
        values = basis.values(safe, points)
        jump = sign * np.einsum("eqjd,ed->eqj", values, tangents)
        average = omega[:, None] * np.einsum(
            "ejab,ea,eb->ej", strain[safe], tangents, normals
        )
        jumps.append(jump * valid[:, None, None])
        averages.append(average * valid[:, None])
        dofs.append(np.where(valid[:, None], dofmap.cell_dofs[safe], -1))
    jump = np.concatenate(jumps, axis=-1)
    average = np.concatenate(averages, axis=-1)
    edge_dofs = np.concatenate(dofs, axis=-1)

    consistency = scatter(
        np.einsum("e,q,eqi,ej->eij", mesh.edge_lengths, rule.weights, jump, average),
        edge_dofs,
        edge_dofs,
        shape,
    )
    # |e| * h_e^-1 == 1 with h_e the edge length
    jump_gram = scatter(
        np.einsum("q,eqi,eqj->eij", rule.weights, jump, jump),
        edge_dofs,
        edge_dofs,
        shape,
    )
    return DgForms(strain_gram, gradient_gram, jump_gram, consistency)


def smallest_eigenvalue(matrix: sp.spmatrix) -> float:
    return float(eigvalsh(matrix.toarray(), subset_by_index=[0, 0])[0])


def is_positive_definite(matrix: sp.spmatrix) -> bool:
    if matrix.shape[0] <= DENSE_LIMIT:
        return smallest_eigenvalue(matrix) > 0.0
    # LDL^T inertia through an unpivoted symmetric factorization
    lu = splu(
        sp.csc_matrix(matrix),
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options={"SymmetricMode": True},
    )
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return smallest_eigenvalue(matrix) > 0.0
    return bool(np.all(lu.U.diagonal() > 0.0))


def assemble_dg_elasticity(
    mesh: Mesh,
    dofmap: DofMap,
    config: DgConfig | None = None,
    require_coercive: bool = False,
) -> sp.csr_matrix:
    config = config or DgConfig()
    if dofmap.mesh is not mesh:
        raise SpaceError("BDM1 dofmap was built on a different mesh")
    matrix = dg_forms(dofmap, config).elasticity(config.penalty)
    if require_coercive and not is_positive_definite(matrix):
        raise CoercivityError(
            f"a_h is not positive definite with penalty {config.penalty} on the "
            f"{mesh.nx}x{mesh.ny} mesh; increase the penalty"
        )
    return matrix


def dg_norms(
    mesh: Mesh,
    dofmap: DofMap,
    coefficients: np.ndarray,
    config: DgConfig | None = None,
) -> DgNorms:
    if dofmap.mesh is not mesh:
        raise SpaceError("BDM1 dofmap was built on a different mesh")
    forms = dg_forms(dofmap, config)
    x = np.asarray(coefficients, dtype=float)
    h = float(np.sqrt(max(x @ (forms.h_gram @ x), 0.0)))
    one_h = float(np.sqrt(max(x @ (forms.dg_gram @ x), 0.0)))
    return DgNorms(h=h, one_h=one_h, dg=one_h)


def _edge_barycentric(
    mesh: Mesh, triangles: np.ndarray, edges: np.ndarray, s: np.ndarray
) -> np.ndarray:
    """Barycentric coordinates (N, q, 3) of the points low + s (high - low)
    of `edges` inside `triangles`."""
    corners = mesh.triangles[triangles]
    low = (corners == mesh.edges[edges, 0][:, None])[:, None, :]
    high = (corners == mesh.edges[edges, 1][:, None])[:, None, :]
    return low * (1.0 - s)[None, :, None] + high * s[None, :, None]


def trace_pairing(
    mesh: Mesh, tau_vertex: np.ndarray, v_nodal: np.ndarray
) -> tuple[float, float]:
    """Both sides of sum_T <tau n_T, v>_{dT} = sum_e <{tau}, [v]>_e.

    tau_vertex (V, 2, 2) are nodal values of a continuous piecewise-linear
    tensor field; v_nodal (T, 3, 2) are per-triangle vertex values of a
    discontinuous piecewise-linear vector field.
    """
    rule = edge_rule(3)
    s, w = rule.points, rule.weights

    def tau_on(edges: np.ndarray) -> np.ndarray:
        low = tau_vertex[mesh.edges[edges, 0]]
        high = tau_vertex[mesh.edges[edges, 1]]
        return low[:, None] * (1.0 - s)[None, :, None, None] + high[:, None] * s[
            None, :, None, None
        ]

    def v_on(triangles: np.ndarray, edges: np.ndarray) -> np.ndarray:
        lam = _edge_barycentric(mesh, triangles, edges, s)
        return np.einsum("nqa,nad->nqd", lam, v_nodal[triangles])

    lhs = 0.0
    all_triangles = np.arange(mesh.n_triangles)
    for k in range(3):
        edges = mesh.triangle_edges[:, k]
        outward = mesh.triangle_edge_signs[:, k, None] * mesh.unit_normals[edges]
        flux = np.einsum("nqab,nb->nqa", tau_on(edges), outward)
        integrand = np.einsum("nqa,nqa->nq", flux, v_on(all_triangles, edges))
        lhs += float(mesh.edge_lengths[edges] @ (integrand @ w))

    rhs = 0.0
    all_edges = np.arange(mesh.n_edges)
    average = np.einsum("nqab,nb->nqa", tau_on(all_edges), mesh.unit_normals)
    for side, sign in ((0, 1.0), (1, -1.0)):
        owner = mesh.edge_to_triangles[:, side]
        present = owner >= 0
        jump = sign * v_on(owner[present], all_edges[present])
        integrand = np.einsum("nqa,nqa->nq", average[present], jump)
        rhs += float(mesh.edge_lengths[present] @ (integrand @ w))
    return lhs, rhs

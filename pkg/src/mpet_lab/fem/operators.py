"""Assembled L2 pairings, the divergence pairing, and interpolation.

Element matrices are computed for all triangles at once and scattered
with a COO -> CSR conversion, which sums duplicates; the result does not
depend on the element order. DOFs eliminated by the boundary constraint
(index -1) are dropped at the scatter.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import scipy.sparse as sp

from mpet_lab.domain.mesh import Mesh
from mpet_lab.fem.quadrature import edge_rule, triangle_rule
from mpet_lab.fem.spaces import SQRT3, DofMap, SpaceError, SpaceKind

Field = Callable[[np.ndarray], np.ndarray]
"""Maps points (..., 2) to values (..., 2) for vector fields, (...) for scalars."""

DEFAULT_DEGREE = 4


def constant_field(value: float | tuple[float, float]) -> Field:
    target = np.asarray(value, dtype=float)

    def field(points: np.ndarray) -> np.ndarray:
        return np.broadcast_to(target, points.shape[:-1] + target.shape).copy()

    return field


def _check_mesh(mesh: Mesh, *dofmaps: DofMap) -> None:
    for dofmap in dofmaps:
        if dofmap.mesh is not mesh:
            raise SpaceError(f"{dofmap.kind} dofmap was built on a different mesh")


def physical_points(mesh: Mesh, barycentric: np.ndarray) -> np.ndarray:
    """(q, 3) barycentric coordinates -> (T, q, 2) points in every triangle."""
    return np.einsum("qa,tad->tqd", barycentric, mesh.vertices[mesh.triangles])


def scatter(
    local: np.ndarray, rows: np.ndarray, cols: np.ndarray, shape: tuple[int, int]
) -> sp.csr_matrix:
    """Sum element matrices local (N, a, b) into a global sparse matrix."""
    r = np.broadcast_to(rows[:, :, None], local.shape)
    c = np.broadcast_to(cols[:, None, :], local.shape)
    keep = (r >= 0) & (c >= 0)
    return sp.coo_matrix((local[keep], (r[keep], c[keep])), shape=shape).tocsr()


def _values(dofmap: DofMap, points: np.ndarray) -> np.ndarray:
    triangles = np.arange(dofmap.mesh.n_triangles)
    return dofmap.basis.values(triangles, points)


def evaluate(dofmap: DofMap, coefficients: np.ndarray, barycentric: np.ndarray):
    """Values of a discrete function at barycentric points of every triangle:
    (T, q, 2) for vector spaces, (T, q) for P0."""
    mesh = dofmap.mesh
    padded = np.append(np.asarray(coefficients, dtype=float), 0.0)
    local = padded[dofmap.cell_dofs]  # -1 picks the appended zero
    if dofmap.kind is SpaceKind.P0:
        return np.repeat(local, len(barycentric), axis=1)
    values = _values(dofmap, physical_points(mesh, barycentric))
    return np.einsum("tqjd,tj->tqd", values, local)


def assemble_mass(
    mesh: Mesh, row: DofMap, col: DofMap, degree: int = DEFAULT_DEGREE
) -> sp.csr_matrix:
    _check_mesh(mesh, row, col)
    if row.kind is SpaceKind.P0 and col.kind is SpaceKind.P0:
        return sp.diags(mesh.triangle_areas).tocsr()
    if not (row.kind.is_vector and col.kind.is_vector):
        raise SpaceError(f"no L2 pairing between {row.kind} and {col.kind}")

    rule = triangle_rule(degree)
    points = physical_points(mesh, rule.barycentric)
    phi = _values(row, points)
    psi = _values(col, points)
    local = np.einsum(
        "t,q,tqid,tqjd->tij", mesh.triangle_areas, rule.weights, phi, psi
    )
    return scatter(local, row.cell_dofs, col.cell_dofs, (row.ndofs, col.ndofs))


def assemble_div(mesh: Mesh, vector: DofMap, scalar: DofMap) -> sp.csr_matrix:
    """Rows: P0 DOFs; columns: vector DOFs; entries (div phi_j, q_i)."""
    _check_mesh(mesh, vector, scalar)
    if not vector.kind.is_vector or scalar.kind is not SpaceKind.P0:
        raise SpaceError(f"div pairing needs (BDM1|RT0, P0), got {vector.kind}")
    local = (mesh.triangle_areas[:, None] * vector.basis.divergences())[:, None, :]
    shape = (scalar.ndofs, vector.ndofs)
    return scatter(local, scalar.cell_dofs, vector.cell_dofs, shape)


def interpolate(
    mesh: Mesh, dofmap: DofMap, field: Field, degree: int = DEFAULT_DEGREE
) -> np.ndarray:
    """Edge-moment interpolation for BDM1/RT0, cell averages for P0."""
    _check_mesh(mesh, dofmap)
    if dofmap.kind is SpaceKind.P0:
        rule = triangle_rule(degree)
        values = field(physical_points(mesh, rule.barycentric))
        return values @ rule.weights

    rule = edge_rule(degree)
    start = mesh.vertices[mesh.edges[:, 0]]
    end = mesh.vertices[mesh.edges[:, 1]]
    points = start[:, None, :] + rule.points[None, :, None] * (end - start)[:, None, :]
    flux = np.einsum("eqd,ed->eq", field(points), mesh.unit_normals)
    weighted = mesh.edge_lengths[:, None] * rule.weights[None, :] * flux
    moments = [weighted.sum(axis=1)]
    if dofmap.kind is SpaceKind.BDM1:
        moments.append(weighted @ (SQRT3 * (2.0 * rule.points - 1.0)))
    full = np.column_stack(moments).ravel()

    out = np.zeros(dofmap.ndofs)
    kept = dofmap.full_to_reduced >= 0
    out[dofmap.full_to_reduced[kept]] = full[kept]
    return out


def load_moments(
    dofmap: DofMap, field: Field, degree: int = DEFAULT_DEGREE
) -> np.ndarray:
    """Vector of (field, phi_i) over the whole domain."""
    mesh = dofmap.mesh
    rule = triangle_rule(degree)
    points = physical_points(mesh, rule.barycentric)
    values = field(points)
    if dofmap.kind is SpaceKind.P0:
        local = (mesh.triangle_areas * (values @ rule.weights))[:, None]
    else:
        local = np.einsum(
            "t,q,tqd,tqjd->tj",
            mesh.triangle_areas,
            rule.weights,
            values,
            _values(dofmap, points),
        )
    rows = dofmap.cell_dofs.ravel()
    keep = rows >= 0
    return np.bincount(rows[keep], weights=local.ravel()[keep], minlength=dofmap.ndofs)

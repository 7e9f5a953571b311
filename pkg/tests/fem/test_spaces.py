"""DOF numbering and normal continuity of the H(div) spaces."""

import numpy as np
import pytest

from mpet_lab.domain.mesh import build_structured_mesh
from mpet_lab.fem.spaces import SpaceKind, build_dofmap


@pytest.mark.parametrize(
    ("kind", "constrained", "expected"),
    [
        (SpaceKind.RT0, False, 5),
        (SpaceKind.RT0, True, 1),
        (SpaceKind.BDM1, False, 10),
        (SpaceKind.BDM1, True, 2),
        (SpaceKind.P0, False, 2),
        (SpaceKind.P0, True, 2),
    ],
)
def test_dof_counts_on_single_cell(kind, constrained, expected):
    mesh = build_structured_mesh(1, 1)

    assert build_dofmap(mesh, kind, constrain_boundary=constrained).ndofs == expected


def test_kind_accepts_plain_strings():
    mesh = build_structured_mesh(1, 1)

    assert build_dofmap(mesh, "RT0").kind is SpaceKind.RT0


def test_interior_dofs_are_shared_with_opposite_signs():
    mesh = build_structured_mesh(3, 2)
    dofmap = build_dofmap(mesh, SpaceKind.RT0, constrain_boundary=True)

    for dof in range(dofmap.ndofs):
        triangles, local = np.nonzero(dofmap.cell_dofs == dof)
        assert len(triangles) == 2
        signs = dofmap.edge_signs[triangles, local]
        assert signs.sum() == 0


def _normal_trace(dofmap, x, triangle, point, normal):
    values = dofmap.basis.values(np.array([triangle]), point[None, None, :])
    local = np.append(x, 0.0)[dofmap.cell_dofs[triangle]]
    return float(np.einsum("jd,j,d->", values[0, 0], local, normal))


@pytest.mark.parametrize("kind", [SpaceKind.BDM1, SpaceKind.RT0])
def test_normal_component_is_continuous(kind):
    mesh = build_structured_mesh(2, 2)
    dofmap = build_dofmap(mesh, kind, constrain_boundary=False)
    x = np.random.default_rng(5).standard_normal(dofmap.ndofs)

    for edge in mesh.interior_edges:
        plus, minus = mesh.edge_to_triangles[edge]
        normal = mesh.unit_normals[edge]
        low, high = mesh.vertices[mesh.edges[edge]]
        for s in (0.2, 0.5, 0.9):
            point = low + s * (high - low)
            assert _normal_trace(dofmap, x, plus, point, normal) == pytest.approx(
                _normal_trace(dofmap, x, minus, point, normal), abs=1e-12
            )


def test_constrained_space_has_no_boundary_flux():
    mesh = build_structured_mesh(2, 2)
    dofmap = build_dofmap(mesh, SpaceKind.BDM1, constrain_boundary=True)
    x = np.random.default_rng(2).standard_normal(dofmap.ndofs)

    for edge in np.flatnonzero(mesh.boundary_flags):
        owner = max(mesh.edge_to_triangles[edge])
        low, high = mesh.vertices[mesh.edges[edge]]
        point = 0.3 * low + 0.7 * high
        flux = _normal_trace(dofmap, x, owner, point, mesh.unit_normals[edge])
        assert flux == pytest.approx(0.0, abs=1e-12)


def test_divergence_is_constant_per_triangle():
    mesh = build_structured_mesh(2, 2)
    dofmap = build_dofmap(mesh, SpaceKind.BDM1)

    gradients = dofmap.basis.gradients()
    assert gradients.shape == (mesh.n_triangles, 6, 2, 2)
    np.testing.assert_allclose(
        dofmap.basis.divergences(), np.trace(gradients, axis1=-2, axis2=-1)
    )

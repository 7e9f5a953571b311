"""Structured mesh tests: counts, orientation and the edge trace lookup."""

import numpy as np
import pytest

from mpet_lab.domain.mesh import (
    MeshError,
    build_structured_mesh,
    dump_mesh,
    edge_trace_data,
)
from mpet_lab.fem.dg import trace_pairing


def test_counts_on_four_by_four():
    mesh = build_structured_mesh(4, 4)

    assert mesh.n_vertices == 25
    assert mesh.n_triangles == 32
    assert mesh.n_edges == 56
    assert mesh.boundary_flags.sum() == 16
    assert mesh.euler_characteristic == 1


def test_rejects_empty_mesh():
    with pytest.raises(MeshError):
        build_structured_mesh(0, 3)


def test_areas_sum_to_one_and_triangles_are_counter_clockwise():
    mesh = build_structured_mesh(3, 2)

    assert mesh.triangle_areas.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(mesh.triangle_areas > 0)


def test_edges_run_from_low_to_high_vertex():
    mesh = build_structured_mesh(3, 3)

    assert np.all(mesh.edges[:, 0] < mesh.edges[:, 1])


def test_boundary_normals_point_outward():
    mesh = build_structured_mesh(3, 3)

    for edge in np.flatnonzero(mesh.boundary_flags):
        trace = edge_trace_data(mesh, int(edge))
        midpoint = mesh.vertices[mesh.edges[edge]].mean(axis=0)
        inside = mesh.centroids[trace.triangles[0]]
        assert (midpoint - inside) @ trace.normals[0] > 0


def test_interior_edges_have_opposite_normals():
    mesh = build_structured_mesh(2, 2)

    for edge in mesh.interior_edges:
        trace = edge_trace_data(mesh, int(edge))
        assert len(trace.triangles) == 2
        np.testing.assert_allclose(trace.normals[0], -trace.normals[1], atol=1e-14)


def test_single_cell_traces():
    mesh = build_structured_mesh(1, 1)
    bottom = edge_trace_data(mesh, 0)
    diagonal = edge_trace_data(mesh, 2)

    assert bottom.boundary is True
    assert bottom.triangles == (0,)
    np.testing.assert_allclose(bottom.normals[0], [0.0, -1.0])
    assert diagonal.boundary is False
    assert len(diagonal.triangles) == 2
    assert diagonal.length == pytest.approx(np.sqrt(2.0))


def test_edge_length_is_endpoint_distance():
    mesh = build_structured_mesh(3, 2)

    for edge in range(mesh.n_edges):
        a, b = mesh.vertices[mesh.edges[edge]]
        assert edge_trace_data(mesh, edge).length == pytest.approx(
            float(np.linalg.norm(b - a)), abs=1e-15
        )


def test_edge_lookup_rejects_bad_index():
    mesh = build_structured_mesh(1, 1)

    with pytest.raises(MeshError):
        edge_trace_data(mesh, 5)


def test_refinement_halves_diameter():
    coarse = build_structured_mesh(2, 2)
    fine = build_structured_mesh(4, 4)

    assert coarse.h / fine.h == pytest.approx(2.0, abs=1e-14)


def test_boundary_integral_equals_average_jump_sum():
    mesh = build_structured_mesh(3, 3)
    rng = np.random.default_rng(3)
    tau = rng.standard_normal((mesh.n_vertices, 2, 2))
    v = rng.standard_normal((mesh.n_triangles, 3, 2))

    lhs, rhs = trace_pairing(mesh, tau, v)

    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_dump_lists_vertices_then_triangles():
    text = dump_mesh(build_structured_mesh(1, 1))
    lines = text.splitlines()

    assert lines[0] == "# mesh 1x1"
    assert sum(line.startswith("v ") for line in lines) == 4
    assert lines[-1] == "t 0 3 2"

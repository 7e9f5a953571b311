"""Structured triangulations of the unit square and their edge bookkeeping.

A mesh is a value: vertex coordinates, counter-clockwise triangles and the
edge tables every H(div) and interior-penalty operator needs. Edges are
oriented from the lower to the higher vertex index, and each edge's unit
normal is that direction rotated clockwise. The orientation decides every
jump and average sign downstream, so assembly is reproducible bit for bit.

`edge_to_triangles[e]` holds (plus, minus): the plus triangle is the one
for which the stored normal points outward. A boundary edge has exactly one
of the two slots filled; the other is -1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


class MeshError(ValueError):
    """Invalid mesh construction argument or edge lookup."""


@dataclass(frozen=True, eq=False)
class Mesh:
    nx: int
    ny: int
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_to_triangles: np.ndarray
    boundary_flags: np.ndarray
    edge_lengths: np.ndarray
    triangle_diameters: np.ndarray
    triangle_areas: np.ndarray
    unit_normals: np.ndarray
    triangle_edges: np.ndarray
    """(T, 3): global edge of local edge k, which is opposite local vertex k."""
    triangle_edge_signs: np.ndarray
    """(T, 3): +1 where the stored edge normal is outward for the triangle."""

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def h(self) -> float:
        """Largest triangle diameter."""
        return float(self.triangle_diameters.max())

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_flags)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles


@dataclass(frozen=True)
class EdgeTrace:
    """What the average/jump definitions need to know about one edge.

    `normals[k]` is the outward normal of `triangles[k]` on this edge; for
    an interior edge the first triangle is the plus side of the stored
    normal, so `normals == (n_e, -n_e)`.
    """

    triangles: tuple[int, ...]
    normals: tuple[np.ndarray, ...]
    length: float
    boundary: bool


def build_structured_mesh(nx: int, ny: int) -> Mesh:
    """Split each of nx*ny cells of the unit square into two right triangles
    along the diagonal from its lower-left to its upper-right corner."""
    if nx < 1 or ny < 1:
        raise MeshError(f"mesh needs nx >= 1 and ny >= 1, got ({nx}, {ny})")

    xs, ys = np.meshgrid(
        np.linspace(0.0, 1.0, nx + 1), np.linspace(0.0, 1.0, ny + 1), indexing="xy"
    )
    vertices = np.column_stack([xs.ravel(), ys.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    v00 = (j * (nx + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)

    return _finish_mesh(nx, ny, vertices, triangles)


def _finish_mesh(nx: int, ny: int, vertices: np.ndarray, triangles: np.ndarray) -> Mesh:
    corners = vertices[triangles]
    d1 = corners[:, 1] - corners[:, 0]
    d2 = corners[:, 2] - corners[:, 0]
    areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    if np.any(areas <= 0.0):
        raise MeshError("triangles must be counter-clockwise with positive area")

    # local edge k joins local vertices k+1 and k+2
    starts = triangles[:, [1, 2, 0]]
    ends = triangles[:, [2, 0, 1]]
    pairs = np.stack([np.minimum(starts, ends), np.maximum(starts, ends)], axis=-1)
    edges, inverse, counts = np.unique(
        pairs.reshape(-1, 2), axis=0, return_inverse=True, return_counts=True
    )
    triangle_edges = inverse.reshape(-1, 3)
    signs = np.where(starts < ends, 1, -1)

    n_edges = len(edges)
    edge_to_triangles = np.full((n_edges, 2), -1, dtype=np.int64)
    owners = np.repeat(np.arange(len(triangles)), 3)
    slots = np.where(signs.ravel() > 0, 0, 1)
    edge_to_triangles[triangle_edges.ravel(), slots] = owners
    boundary = counts == 1

    tangents = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    lengths = np.hypot(tangents[:, 0], tangents[:, 1])
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]]) / lengths[:, None]

    diameters = lengths[triangle_edges].max(axis=1)

    mesh = Mesh(
        nx=nx,
        ny=ny,
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        edge_to_triangles=edge_to_triangles,
        boundary_flags=boundary,
        edge_lengths=lengths,
        triangle_diameters=diameters,
        triangle_areas=areas,
        unit_normals=normals,
        triangle_edges=triangle_edges,
        triangle_edge_signs=signs,
    )
    logger.debug(
        "mesh %dx%d: %d vertices, %d edges, %d triangles",
        nx,
        ny,
        mesh.n_vertices,
        n_edges,
        mesh.n_triangles,
    )
    return mesh


def edge_trace_data(mesh: Mesh, edge_index: int) -> EdgeTrace:
    if not 0 <= edge_index < mesh.n_edges:
        raise MeshError(f"edge index {edge_index} outside [0, {mesh.n_edges})")
    plus, minus = (int(t) for t in mesh.edge_to_triangles[edge_index])
    normal = mesh.unit_normals[edge_index]
    length = float(mesh.edge_lengths[edge_index])
    if plus >= 0 and minus >= 0:
        return EdgeTrace((plus, minus), (normal, -normal), length, boundary=False)
    if plus >= 0:
        return EdgeTrace((plus,), (normal,), length, boundary=True)
    return EdgeTrace((minus,), (-normal,), length, boundary=True)


def dump_mesh(mesh: Mesh) -> str:
    """Plain-text node and element lists, one record per line."""
    lines = [f"# mesh {mesh.nx}x{mesh.ny}"]
    lines.extend(f"v {float(x)!r} {float(y)!r}" for x, y in mesh.vertices)
    lines.extend(f"t {a} {b} {c}" for a, b, c in mesh.triangles)
    return "\n".join(lines) + "\n"

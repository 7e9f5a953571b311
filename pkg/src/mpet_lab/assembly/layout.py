"""Block layout of the five-field unknown y = (u, v, u_dot, v_dot, p).

Blocks in order: u, v1..vn (displacement space), ud, vd1..vdn (velocity
space), p1..pn (P0). The same layout indexes the operator, the norm
matrix, the right-hand side and the state vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class BlockLayout:
    n: int
    displacement_size: int
    velocity_size: int
    pressure_size: int

    @cached_property
    def names(self) -> tuple[str, ...]:
        nets = range(1, self.n + 1)
        return (
            ("u",)
            + tuple(f"v{i}" for i in nets)
            + ("ud",)
            + tuple(f"vd{i}" for i in nets)
            + tuple(f"p{i}" for i in nets)
        )

    @cached_property
    def sizes(self) -> tuple[int, ...]:
        n = self.n
        return (
            (self.displacement_size,) * (n + 1)
            + (self.velocity_size,) * (n + 1)
            + (self.pressure_size,) * n
        )

    @cached_property
    def offsets(self) -> dict[str, int]:
        starts = np.concatenate([[0], np.cumsum(self.sizes)[:-1]])
        pairs = zip(self.names, starts, strict=True)
        return {name: int(start) for name, start in pairs}

    @property
    def total(self) -> int:
        return int(sum(self.sizes))

    def slice(self, name: str) -> slice:
        start = self.offsets[name]
        return slice(start, start + self.sizes[self.names.index(name)])

    @property
    def mechanics(self) -> slice:
        """Everything before the pressures: (u, v, ud, vd)."""
        return slice(0, self.offsets["p1"])

    @property
    def pressures(self) -> slice:
        return slice(self.offsets["p1"], self.total)

    def pressure_slices(self) -> list[slice]:
        return [self.slice(f"p{i}") for i in range(1, self.n + 1)]

    def describe(self) -> list[dict]:
        return [
            {"name": name, "offset": self.offsets[name], "size": size}
            for name, size in zip(self.names, self.sizes, strict=True)
        ]


class PressureProjector:
    """Orthogonal projector onto zero-mean pressures, one constraint per
    network: the pressure block p_i must satisfy (areas, p_i) = 0.

    `constraints` is the N x n matrix of unit constraint normals U, and
    project(x) = x - U U^T x. Nothing outside the pressure blocks moves.
    """

    def __init__(self, layout: BlockLayout, areas: np.ndarray) -> None:
        self.layout = layout
        self.areas = np.asarray(areas, dtype=float)
        unit = self.areas / np.linalg.norm(self.areas)
        rows, cols, vals = [], [], []
        for i, block in enumerate(layout.pressure_slices()):
            rows.append(np.arange(block.start, block.stop))
            cols.append(np.full(len(unit), i))
            vals.append(unit)
        self.constraints = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(layout.total, layout.n),
        )

    def project(self, x: np.ndarray) -> np.ndarray:
        u = self.constraints
        return x - u @ (u.T @ x)

    def means(self, x: np.ndarray) -> np.ndarray:
        """Area-weighted mean of every pressure block."""
        total = self.areas.sum()
        return np.array(
            [self.areas @ x[block] / total for block in self.layout.pressure_slices()]
        )

    def remove_means(self, x: np.ndarray) -> np.ndarray:
        out = np.array(x, dtype=float, copy=True)
        blocks = self.layout.pressure_slices()
        for block, mean in zip(blocks, self.means(x), strict=True):
            out[block] -= mean
        return out

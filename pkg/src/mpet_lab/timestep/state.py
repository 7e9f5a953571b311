"""The five-field state y = (u, v, u_dot, v_dot, p) at one time level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mpet_lab.assembly.layout import BlockLayout
from mpet_lab.solver.krylov import SolveStats


@dataclass(frozen=True, eq=False)
class State:
    t: float
    y: np.ndarray
    layout: BlockLayout
    step: int = 0
    stats: SolveStats | None = None
    mass_residual_max: float | None = None
    velocity_residual_max: float | None = None

    def __post_init__(self) -> None:
        if self.y.shape != (self.layout.total,):
            raise ValueError(
                f"state vector has shape {self.y.shape}, layout needs "
                f"({self.layout.total},)"
            )

    def block(self, name: str) -> np.ndarray:
        return self.y[self.layout.slice(name)]

    @property
    def displacement(self) -> np.ndarray:
        return self.block("u")

    def network(self, i: int) -> np.ndarray:
        """Network displacement v_i, 1-based like the block names."""
        return self.block(f"v{i}")

    def pressure(self, i: int) -> np.ndarray:
        return self.block(f"p{i}")

    @classmethod
    def zeros(cls, layout: BlockLayout, t: float = 0.0) -> State:
        return cls(t=t, y=np.zeros(layout.total), layout=layout)

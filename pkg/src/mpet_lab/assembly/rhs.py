"""Loads and the right-hand side of one Crank-Nicolson step.

Given y^k = (u, v, u_dot, v_dot, p) at t_k, the step t_k -> t_k + tau
solves A y^{k+1} = G with

    u row     tau^2/4 (F^k + F^k+1) + gamma_u M u - sum gamma_i M v_i
              - tau^2/4 E u + tau^2/4 sum alpha_i D^T p_i
              + tau ((m_uu + 1/2) M u_dot + sum m_uv,i M v_dot_i)
    v_i row   tau^2/4 (G_i^k + G_i^k+1) - gamma_i M u + gamma_v,i M v_i
              + tau^2/4 D^T p_i + tau (m_uv,i M u_dot + (rho_m,i + 1/2) M v_dot_i)
    u_dot row -tau/2 M u - tau^2/4 M u_dot       (and v_dot_i alike)
    p_i row   -tau^2/4 [alpha_i D u + D v_i + ((C_p - tau/2 L_beta) (x) M_P) p]

where M is the mass pairing between the spaces of the row and of the
unknown, D the divergence pairing and L_beta the transfer Laplacian.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from mpet_lab.assembly.operator import BlockSystem
from mpet_lab.domain.parameters import transfer_laplacian
from mpet_lab.fem.operators import load_moments

if TYPE_CHECKING:
    from mpet_lab.timestep.state import State

logger = logging.getLogger(__name__)

TimeField = Callable[[np.ndarray, float], np.ndarray]
"""Maps points (..., 2) and a time to vector values (..., 2)."""

_TIME_SLACK = 1e-9


class LoadError(ValueError):
    """Loads requested outside [0, T] or with the wrong network count."""


def _zero_field(points: np.ndarray, t: float) -> np.ndarray:
    return np.zeros(points.shape)


@dataclass(frozen=True)
class LoadSpec:
    body_force: TimeField
    network_forces: tuple[TimeField, ...]

    @classmethod
    def zero(cls, n: int) -> LoadSpec:
        return cls(_zero_field, (_zero_field,) * n)

    @classmethod
    def from_network_forces(
        cls,
        f_solid: TimeField,
        f_networks: Sequence[TimeField],
        phi: Sequence[float],
    ) -> LoadSpec:
        """Symmetrized loads f = f_s + sum phi_i f_i and g_i = -f_i from the
        body forces acting on the solid and on each fluid network."""
        if len(f_networks) != len(phi):
            raise LoadError(
                f"{len(f_networks)} network forces for {len(phi)} networks"
            )
        forces = tuple(f_networks)
        weights = tuple(float(p) for p in phi)

        def body(points: np.ndarray, t: float) -> np.ndarray:
            total = np.asarray(f_solid(points, t), dtype=float).copy()
            for weight, force in zip(weights, forces, strict=True):
                total += weight * np.asarray(force(points, t), dtype=float)
            return total

        def negated(force: TimeField) -> TimeField:
            return lambda points, t: -np.asarray(force(points, t), dtype=float)

        return cls(body, tuple(negated(force) for force in forces))


def _moments(system: BlockSystem, force: TimeField, t: float) -> np.ndarray:
    dofmap = system.pieces.displacement
    return load_moments(
        dofmap, lambda points: force(points, t), system.dg.quadrature_degree
    )


def check_time(system: BlockSystem, t: float) -> None:
    """The step starting at t must end inside [0, T]."""
    tau, horizon = system.params.tau, system.params.T
    slack = _TIME_SLACK * max(tau, 1.0)
    if t < -slack or t + tau > horizon + slack:
        raise LoadError(
            f"step [{t}, {t + tau}] leaves the time interval [0, {horizon}]"
        )


def assemble_rhs(system: BlockSystem, state: State, loads: LoadSpec) -> np.ndarray:
    params, derived, pieces = system.params, system.derived, system.pieces
    layout = system.layout
    n, tau = params.n, params.tau
    quarter = tau**2 / 4.0
    if len(loads.network_forces) != n:
        raise LoadError(
            f"{len(loads.network_forces)} network loads for n = {n} networks"
        )
    check_time(system, state.t)
    t0, t1 = state.t, state.t + tau

    y = np.asarray(state.y, dtype=float)
    u = y[layout.slice("u")]
    ud = y[layout.slice("ud")]
    v = [y[layout.slice(f"v{i}")] for i in range(1, n + 1)]
    vd = [y[layout.slice(f"vd{i}")] for i in range(1, n + 1)]
    p = [y[block] for block in layout.pressure_slices()]

    mass_dd, mass_dv, mass_vv = pieces.mass_dd, pieces.mass_dv, pieces.mass_vv
    mass_vd = mass_dv.T
    div, mass_p = pieces.div, pieces.mass_p
    out = np.zeros(layout.total)

    row = quarter * (
        _moments(system, loads.body_force, t0) + _moments(system, loads.body_force, t1)
    )
    row += derived.gamma_u * (mass_dd @ u) - quarter * (pieces.elasticity(params) @ u)
    row += tau * (derived.inertia_uu + 0.5) * (mass_dv @ ud)
    for i in range(n):
        row -= derived.gamma[i] * (mass_dd @ v[i])
        row += quarter * derived.alpha[i] * (div.T @ p[i])
        row += tau * derived.inertia_uv[i] * (mass_dv @ vd[i])
    out[layout.slice("u")] = row

    for i in range(n):
        force = loads.network_forces[i]
        row = quarter * (_moments(system, force, t0) + _moments(system, force, t1))
        row += derived.gamma_v[i] * (mass_dd @ v[i]) - derived.gamma[i] * (mass_dd @ u)
        row += quarter * (div.T @ p[i])
        row += tau * derived.inertia_uv[i] * (mass_dv @ ud)
        row += tau * (derived.inertia_vv[i] + 0.5) * (mass_dv @ vd[i])
        out[layout.slice(f"v{i + 1}")] = row

    out[layout.slice("ud")] = -tau / 2.0 * (mass_vd @ u) - quarter * (mass_vv @ ud)
    for i in range(n):
        name = f"vd{i + 1}"
        out[layout.slice(name)] = -tau / 2.0 * (mass_vd @ v[i]) - quarter * (
            mass_vv @ vd[i]
        )

    storage = np.diag(params.c_p) - tau / 2.0 * transfer_laplacian(params)
    div_u = div @ u
    for i, block in enumerate(layout.pressure_slices()):
        mixed = sum(storage[i, j] * p[j] for j in range(n))
        out[block] = -quarter * (
            derived.alpha[i] * div_u + div @ v[i] + mass_p @ mixed
        )
    logger.debug("rhs at t=%.6g: norm %.3e", t0, float(np.linalg.norm(out)))
    return out


def _gravity(points: np.ndarray, t: float) -> np.ndarray:
    out = np.zeros(points.shape)
    out[..., 1] = -1.0
    return out


def _pulse(points: np.ndarray, t: float) -> np.ndarray:
    """Smooth in time and space, switched on gently from rest."""
    x, y = points[..., 0], points[..., 1]
    ramp = np.sin(np.pi * t) ** 4
    return ramp * np.stack([np.sin(np.pi * y), np.sin(np.pi * x)], axis=-1)


def _network_pulse(points: np.ndarray, t: float) -> np.ndarray:
    return 0.5 * _pulse(points, t)[..., ::-1]


LOAD_PRESETS = ("zero", "gravity", "pulse")


def preset_loads(name: str, n: int) -> LoadSpec:
    """zero; gravity: constant downward body force, no network loads;
    pulse: smooth time-dependent body and network loads."""
    if name == "zero":
        return LoadSpec.zero(n)
    if name == "gravity":
        return LoadSpec(_gravity, (_zero_field,) * n)
    if name == "pulse":
        return LoadSpec(_pulse, (_network_pulse,) * n)
    raise LoadError(f"unknown load preset {name!r}; choose from {LOAD_PRESETS}")

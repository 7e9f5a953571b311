"""Crank-Nicolson time stepping of the block system.

Each step assembles the right-hand side from y^k and solves
A y^{k+1} = G on the zero-mean subspace, either by the bordered direct
solve (factorized once per stepper) or by preconditioned MINRES (the
preconditioner is factorized once per stepper). Both A and the
preconditioner depend on tau, so one stepper serves one step size.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, replace
from enum import StrEnum

import numpy as np
from scipy.sparse.linalg import splu

from mpet_lab.assembly.operator import BlockSystem, assemble_operator
from mpet_lab.assembly.rhs import LoadError, LoadSpec, assemble_rhs, check_time
from mpet_lab.domain.mesh import Mesh
from mpet_lab.domain.parameters import MpetParameters, transfer_laplacian
from mpet_lab.fem.dg import DgConfig
from mpet_lab.fem.operators import Field, interpolate, load_moments
from mpet_lab.fem.spaces import SpaceKind
from mpet_lab.ledger import events
from mpet_lab.ledger.port import RunLedger
from mpet_lab.solver.deflation import BorderedSolver, SolverBreakdownError
from mpet_lab.solver.krylov import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    BlockPreconditioner,
    SolveStats,
    minres,
    relative_residual,
)
from mpet_lab.timestep.state import State
from mpet_lab.verify.support import append_event

logger = logging.getLogger(__name__)

ERRATIC_SPREAD = 0.5
MACHINE_DIFFERENCE = 1e-10
DIRECT_CONSISTENCY = 1e-8
CONSISTENCY_FACTOR = 100.0


class StepError(RuntimeError):
    """A solve failed inside the time loop."""

    def __init__(self, step: int, t: float, cause: Exception) -> None:
        super().__init__(f"step {step} (t={t:.6g}) failed: {cause}")
        self.step = step
        self.t = t


class ConsistencyError(RuntimeError):
    """A solved step violates the velocity update rows."""


class SolveMethod(StrEnum):
    DIRECT = "direct"
    MINRES = "minres"


@dataclass(frozen=True)
class InitialData:
    """Initial displacements, velocities and pressures; None means zero.
    Network entries are one field per network."""

    u0: Field | None = None
    v0: tuple[Field, ...] | None = None
    u1: Field | None = None
    v1: tuple[Field, ...] | None = None
    p0: tuple[Field, ...] | None = None


def _per_network(fields, n: int, name: str) -> tuple:
    if fields is None:
        return (None,) * n
    if len(fields) != n:
        raise ValueError(f"{name} has {len(fields)} fields for n = {n} networks")
    return tuple(fields)


def initial_state(system: BlockSystem, data: InitialData | None = None) -> State:
    data = data or InitialData()
    mesh, pieces, layout = system.mesh, system.pieces, system.layout
    n, degree = system.params.n, system.dg.quadrature_degree
    y = np.zeros(layout.total)

    def put(name: str, dofmap, field: Field | None) -> None:
        if field is not None:
            y[layout.slice(name)] = interpolate(mesh, dofmap, field, degree)

    put("u", pieces.displacement, data.u0)
    put("ud", pieces.velocity, data.u1)
    networks = zip(
        _per_network(data.v0, n, "v0"),
        _per_network(data.v1, n, "v1"),
        _per_network(data.p0, n, "p0"),
        strict=True,
    )
    for i, (v0, v1, p0) in enumerate(networks, start=1):
        put(f"v{i}", pieces.displacement, v0)
        put(f"vd{i}", pieces.velocity, v1)
        put(f"p{i}", pieces.pressure, p0)
    return State(t=0.0, y=system.projector.remove_means(y), layout=layout)


def mass_residual(state_k: State, state_k1: State, system: BlockSystem) -> np.ndarray:
    """Per-network, per-element residual (n, T) of the discrete mass
    balance between two consecutive states, in the scaling of the solved
    pressure rows."""
    params, derived, pieces = system.params, system.derived, system.pieces
    n, tau = params.n, params.tau
    quarter = tau**2 / 4.0
    div, areas = pieces.div, system.mesh.triangle_areas
    laplacian = transfer_laplacian(params)
    implicit = system.weights.lambda1
    explicit = np.diag(params.c_p) - tau / 2.0 * laplacian

    def balance(state: State, weights: np.ndarray) -> np.ndarray:
        u = state.displacement
        pressures = np.array([state.pressure(j) for j in range(1, n + 1)])
        mixed = weights @ pressures * areas
        return np.array(
            [
                derived.alpha[i] * (div @ u) + div @ state.network(i + 1) + mixed[i]
                for i in range(n)
            ]
        )

    return -quarter * (balance(state_k1, implicit) - balance(state_k, explicit))


def _velocity_rows(
    state_k: State, state_k1: State, system: BlockSystem
) -> tuple[float, float]:
    """(largest residual, largest single term) of the velocity update rows."""
    pieces, half = system.pieces, system.params.tau / 2.0
    names = [("u", "ud")] + [
        (f"v{i}", f"vd{i}") for i in range(1, system.params.n + 1)
    ]
    worst, scale = 0.0, 0.0
    for position, velocity in names:
        terms = (
            half * (pieces.mass_vv @ state_k1.block(velocity)),
            half * (pieces.mass_vv @ state_k.block(velocity)),
            -(pieces.mass_dv.T @ state_k1.block(position)),
            pieces.mass_dv.T @ state_k.block(position),
        )
        worst = max(worst, float(np.max(np.abs(sum(terms)))))
        scale = max(scale, *(float(np.max(np.abs(term))) for term in terms))
    return worst, scale


def velocity_consistency(state_k: State, state_k1: State, system: BlockSystem) -> float:
    """Largest residual of tau/2 M (x_dot^k+1 + x_dot^k) = M (x^k+1 - x^k)
    over u and every v_i, tested against the velocity space."""
    return _velocity_rows(state_k, state_k1, system)[0]


def w_norm(system: BlockSystem, y: np.ndarray) -> float:
    return float(np.sqrt(max(y @ (system.norm_matrix @ y), 0.0)))


class Stepper:
    def __init__(
        self,
        system: BlockSystem,
        method: SolveMethod | str = SolveMethod.DIRECT,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
    ) -> None:
        self.system = system
        self.method = SolveMethod(method)
        self.tol = tol
        self.max_iter = max_iter
        self._direct: BorderedSolver | None = None
        self._preconditioner: BlockPreconditioner | None = None
        try:
            if self.method is SolveMethod.DIRECT:
                self._direct = BorderedSolver(system)
            else:
                self._preconditioner = BlockPreconditioner(system)
        except RuntimeError as exc:
            raise StepError(0, 0.0, exc) from exc

    def _solve(self, rhs: np.ndarray) -> tuple[np.ndarray, SolveStats]:
        if self._direct is not None:
            y = self._direct.solve(rhs)
            residual = relative_residual(self.system, y, rhs)
            return y, SolveStats(0, residual, 0.0, True)
        return minres(
            self.system,
            rhs,
            tol=self.tol,
            max_iter=self.max_iter,
            preconditioner=self._preconditioner,
        )

    def step(self, state: State, loads: LoadSpec) -> State:
        index = state.step + 1
        rhs = assemble_rhs(self.system, state, loads)
        try:
            y, stats = self._solve(rhs)
        except SolverBreakdownError as exc:
            raise StepError(index, state.t, exc) from exc
        new = State(
            t=state.t + self.system.params.tau,
            y=y,
            layout=state.layout,
            step=index,
            stats=stats,
        )
        consistency = self._check_velocity_rows(state, new)
        worst = float(np.max(np.abs(mass_residual(state, new, self.system))))
        return replace(
            new, mass_residual_max=worst, velocity_residual_max=consistency
        )

    def _check_velocity_rows(self, state: State, new: State) -> float:
        """The direct solve must satisfy the velocity updates to rounding;
        MINRES only to its tolerance in the preconditioned norm, so there a
        violation is logged, not raised."""
        consistency, scale = _velocity_rows(state, new, self.system)
        if self.method is SolveMethod.DIRECT:
            limit = DIRECT_CONSISTENCY * scale
        else:
            limit = CONSISTENCY_FACTOR * self.tol * scale
        if consistency <= limit:
            return consistency
        message = (
            f"velocity update residual {consistency:.3e} exceeds {limit:.3e}"
        )
        if self.method is SolveMethod.DIRECT:
            raise StepError(new.step, state.t, ConsistencyError(message))
        logger.warning("step %d: %s", new.step, message)
        return consistency


def step(
    state: State,
    system: BlockSystem,
    loads: LoadSpec,
    method: SolveMethod | str = SolveMethod.DIRECT,
    tol: float = DEFAULT_TOL,
) -> State:
    return Stepper(system, method, tol).step(state, loads)


@dataclass(frozen=True)
class TrajectoryRow:
    step: int
    t: float
    iterations: int
    residual: float
    mass_residual_max: float
    velocity_residual_max: float
    w_norm: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    initial: State
    final: State
    rows: tuple[TrajectoryRow, ...]

    @property
    def iterations(self) -> list[int]:
        return [row.iterations for row in self.rows]


def default_steps(params: MpetParameters) -> int:
    return int(round(params.T / params.tau))


def run(
    system: BlockSystem,
    loads: LoadSpec,
    initial: State | InitialData | None = None,
    n_steps: int | None = None,
    method: SolveMethod | str = SolveMethod.DIRECT,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    ledger: RunLedger | None = None,
) -> Trajectory:
    """March n_steps (default T / tau) from the initial state."""
    state = initial if isinstance(initial, State) else initial_state(system, initial)
    n_steps = default_steps(system.params) if n_steps is None else n_steps
    if n_steps < 0:
        raise ValueError(f"n_steps must be >= 0, got {n_steps}")
    if n_steps:
        check_time(system, state.t + (n_steps - 1) * system.params.tau)

    append_event(ledger, events.run_started("trajectory", n_steps))
    start = state
    rows: list[TrajectoryRow] = []
    try:
        stepper = Stepper(system, method, tol, max_iter) if n_steps else None
        for _ in range(n_steps):
            state = stepper.step(state, loads)
            stats = state.stats
            rows.append(
                TrajectoryRow(
                    step=state.step,
                    t=state.t,
                    iterations=stats.iterations,
                    residual=stats.residual,
                    mass_residual_max=state.mass_residual_max,
                    velocity_residual_max=state.velocity_residual_max,
                    w_norm=w_norm(system, state.y),
                )
            )
            append_event(ledger, events.step_taken(state.step, stats.iterations))
    except (StepError, LoadError) as exc:
        append_event(ledger, events.run_failed("step", type(exc).__name__))
        raise
    append_event(ledger, events.run_completed(steps=n_steps, final_t=state.t))
    if rows:
        logger.info(
            "trajectory: %d steps to t=%.6g, max mass residual %.3e",
            n_steps,
            state.t,
            max(row.mass_residual_max for row in rows),
        )
    return Trajectory(initial=start, final=state, rows=tuple(rows))


def equilibrium_state(
    system: BlockSystem,
    loads: LoadSpec,
    t: float = 0.0,
    networks: tuple[Field, ...] | None = None,
) -> State:
    """Stationary state for time-independent loads: E u = F(t) with zero
    velocities and pressures. The network displacements are free in the
    stationary limit and default to zero; the network loads must vanish."""
    pieces, layout = system.pieces, system.layout
    force = loads.body_force
    rhs = load_moments(
        pieces.displacement,
        lambda points: force(points, t),
        system.dg.quadrature_degree,
    )
    elasticity = pieces.elasticity(system.params).tocsc()
    y = np.zeros(layout.total)
    y[layout.slice("u")] = splu(elasticity).solve(rhs)
    for i, field in enumerate(_per_network(networks, system.params.n, "v"), start=1):
        if field is not None:
            y[layout.slice(f"v{i}")] = interpolate(
                system.mesh, pieces.displacement, field, system.dg.quadrature_degree
            )
    return State(t=t, y=y, layout=layout)


@dataclass(frozen=True)
class ConvergenceRow:
    tau: float
    difference: float | None
    rate: float | None


@dataclass(frozen=True)
class ConvergenceResult:
    rows: tuple[ConvergenceRow, ...]
    fitted_order: float | None
    exact: bool

    @property
    def order(self) -> float | None:
        """Rate from the two finest differences."""
        rates = [row.rate for row in self.rows if row.rate is not None]
        return rates[-1] if rates else None


def observed_rates(taus: list[float], differences: list[float]) -> list[float]:
    logs_d = np.log(differences)
    logs_t = np.log(taus)
    return [
        float((logs_d[k] - logs_d[k + 1]) / (logs_t[k] - logs_t[k + 1]))
        for k in range(len(differences) - 1)
    ]


def fitted_order(taus: list[float], differences: list[float]) -> float:
    slope, _ = np.polyfit(np.log(taus), np.log(differences), 1)
    return float(slope)


def rate_summary(
    taus: list[float], differences: list[float], scale: float = 1.0
) -> tuple[list[float], float | None, bool]:
    """(rates, fitted order, exact) for successive differences. All
    differences at rounding level means the scheme is exact for the data;
    any single one at rounding level leaves the rates undefined."""
    threshold = MACHINE_DIFFERENCE * scale
    if max(differences) <= threshold:
        logger.warning("differences at machine precision; the rate is meaningless")
        return [], None, True
    if min(differences) <= threshold:
        logger.warning(
            "difference at machine precision in %s; rates are undefined",
            differences,
        )
        return [], None, False
    rates = observed_rates(taus, differences)
    fitted = fitted_order(taus[: len(differences)], differences)
    if len(rates) > 1 and max(rates) - min(rates) > ERRATIC_SPREAD:
        logger.warning("erratic convergence rates %s; is the data smooth?", rates)
    return rates, fitted, False


def run_convergence(
    mesh: Mesh,
    params: MpetParameters,
    loads: LoadSpec,
    data: InitialData | Callable[[BlockSystem], State] | None,
    taus: list[float] | tuple[float, ...],
    dg: DgConfig | None = None,
    velocity_space: SpaceKind | str = SpaceKind.BDM1,
    method: SolveMethod | str = SolveMethod.DIRECT,
) -> ConvergenceResult:
    """Self-convergence in time: final states for each tau, differences of
    successive resolutions in the stability norm of the finest one, and
    the observed order. data may build the initial state from each
    resolution's system."""
    taus = [float(tau) for tau in taus]
    if len(taus) < 3:
        raise ValueError(f"need at least three step sizes, got {len(taus)}")
    if any(b >= a for a, b in zip(taus, taus[1:], strict=False)):
        raise ValueError(f"step sizes must decrease, got {taus}")
    finals: list[np.ndarray] = []
    finest: BlockSystem | None = None
    for tau in taus:
        steps = params.T / tau
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ValueError(f"tau={tau} does not divide T={params.T}")
        system = assemble_operator(mesh, replace(params, tau=tau), dg, velocity_space)
        initial = data(system) if callable(data) else data
        trajectory = run(system, loads, initial, int(round(steps)), method)
        finals.append(trajectory.final.y)
        finest = system
        logger.info("tau=%.6g: %d steps done", tau, int(round(steps)))

    differences = [
        w_norm(finest, finals[k] - finals[k + 1]) for k in range(len(taus) - 1)
    ]
    scale = max(w_norm(finest, finals[-1]), 1.0)
    rates, fitted, exact = rate_summary(taus, differences, scale)

    rows = [ConvergenceRow(taus[0], None, None)]
    for k in range(1, len(taus)):
        rate = rates[k - 2] if k >= 2 and rates else None
        rows.append(ConvergenceRow(taus[k], differences[k - 1], rate))
    return ConvergenceResult(rows=tuple(rows), fitted_order=fitted, exact=exact)

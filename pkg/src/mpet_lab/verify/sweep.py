"""Parameter-robustness sweep.

Every point assembles the block system on its mesh, measures the
deflated pencil spectrum (when dense analysis is on and the system is
small enough) and runs preconditioned MINRES on a seeded random
right-hand side. A failing point becomes a row with status "failed" and
the exception class name; the sweep goes on. Points may run in worker
processes; rows are collected in point order, so the table does not
depend on the number of workers.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from mpet_lab.assembly.operator import assemble_operator
from mpet_lab.domain.mesh import build_structured_mesh
from mpet_lab.domain.parameters import MpetParameters, StabilityReport
from mpet_lab.ledger import events
from mpet_lab.ledger.port import RunLedger
from mpet_lab.solver.krylov import minres
from mpet_lab.solver.spectrum import spectrum
from mpet_lab.sources.config import SweepConfig, SweepPoint
from mpet_lab.verify.support import append_event

logger = logging.getLogger(__name__)

POINT_ERRORS = (ValueError, RuntimeError, ArithmeticError)


@dataclass(frozen=True)
class SweepRow:
    point: int
    n: int | None
    nx: int
    mu: float | None
    lam: float | None
    K: float | list | None
    c_p: float | list | None
    beta_tilde: float | list | None
    tau: float | None
    dofs: int | None = None
    xi_min: float | None = None
    xi_max: float | None = None
    kappa: float | None = None
    iterations: int | None = None
    residual: float | None = None
    converged: bool | None = None
    status: str = "ok"
    error: str = ""

    @property
    def failed(self) -> bool:
        return self.status != "ok"

    def report(self) -> StabilityReport:
        return StabilityReport(
            nx=self.nx,
            kappa=self.kappa,
            xi_min=self.xi_min,
            xi_max=self.xi_max,
            iterations=[] if self.iterations is None else [self.iterations],
        )


def _network_value(point: SweepPoint, params: MpetParameters | None, key: str):
    if key in point.values:
        return point.values[key]
    if params is None:
        return None
    if key == "beta_tilde":
        return 0.0
    return getattr(params, key)[0]


def _row(point: SweepPoint, params: MpetParameters | None, **measured) -> SweepRow:
    def scalar(key: str):
        if params is not None:
            return getattr(params, key)
        return point.values.get(key)

    return SweepRow(
        point=point.index,
        n=scalar("n"),
        nx=point.nx,
        mu=scalar("mu"),
        lam=scalar("lam"),
        K=_network_value(point, params, "K"),
        c_p=_network_value(point, params, "c_p"),
        beta_tilde=_network_value(point, params, "beta_tilde"),
        tau=scalar("tau"),
        **measured,
    )


def measure_point(
    point: SweepPoint, config: SweepConfig, sanity: bool = False
) -> SweepRow:
    """One sweep row. With sanity=True the operator is replaced by the
    norm matrix, for which kappa = 1 and MINRES needs one iteration."""
    params = None
    try:
        params = point.parameters()
        mesh = build_structured_mesh(point.nx, point.nx)
        system = assemble_operator(mesh, params, config.dg)
        matrix = system.norm_matrix if sanity else None
        measured: dict = {"dofs": system.dofs}
        if config.dense and system.dofs <= config.max_dofs:
            result = spectrum(system, config.max_dofs, matrix=matrix)
            measured.update(
                xi_min=result.xi_min, xi_max=result.xi_max, kappa=result.kappa
            )
        elif config.dense:
            logger.info(
                "point %d: %d dofs above the dense limit, spectrum skipped",
                point.index,
                system.dofs,
            )
        rhs = np.random.default_rng(config.seed).standard_normal(system.dofs)
        _, stats = minres(
            system, rhs, tol=config.tol, max_iter=config.max_iter, matrix=matrix
        )
        measured.update(
            iterations=stats.iterations,
            residual=stats.residual,
            converged=stats.converged,
        )
        return _row(point, params, **measured)
    except POINT_ERRORS as exc:
        logger.warning("point %d failed: %s", point.index, exc)
        return _row(point, params, status="failed", error=type(exc).__name__)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    @property
    def failures(self) -> list[SweepRow]:
        return [row for row in self.rows if row.failed]

    def kappa_spread(self) -> float | None:
        """max kappa / min kappa over the measured rows."""
        kappas = [row.kappa for row in self.rows if row.kappa is not None]
        if not kappas:
            return None
        return max(kappas) / min(kappas)

    def iteration_spread(self) -> float | None:
        counts = [row.iterations for row in self.rows if row.iterations]
        if not counts:
            return None
        return max(counts) / min(counts)

    def by_mesh(self) -> dict[int, SweepResult]:
        groups: dict[int, list[SweepRow]] = {}
        for row in self.rows:
            groups.setdefault(row.nx, []).append(row)
        return {nx: SweepResult(tuple(rows)) for nx, rows in groups.items()}

    def failed_checks(self, config: SweepConfig) -> list[str]:
        """Acceptance problems as "check: detail" lines; empty when the
        sweep passes. Spreads are compared within one mesh size."""
        problems = [
            f"failed: point {row.point} raised {row.error}" for row in self.failures
        ]
        for row in self.rows:
            if row.converged is False:
                problems.append(
                    f"converged: point {row.point} stopped at {row.iterations} "
                    f"iterations, residual {row.residual:.3e}"
                )
            if row.xi_min is not None and row.xi_min <= 0.0:
                problems.append(f"xi_min: point {row.point} has {row.xi_min:.3e}")
            if row.iterations is not None and row.iterations > config.max_iterations:
                problems.append(
                    f"iterations: point {row.point} needed {row.iterations} "
                    f"> {config.max_iterations}"
                )
        for nx, group in sorted(self.by_mesh().items()):
            spread = group.kappa_spread()
            if spread is not None and spread > config.max_kappa_spread:
                problems.append(
                    f"kappa_spread: nx={nx} spread {spread:.4g} "
                    f"> {config.max_kappa_spread:.4g}"
                )
            spread = group.iteration_spread()
            if spread is not None and spread > config.max_iteration_spread:
                problems.append(
                    f"iteration_spread: nx={nx} spread {spread:.4g} "
                    f"> {config.max_iteration_spread:.4g}"
                )
        return problems


def sweep(
    config: SweepConfig,
    jobs: int = 1,
    ledger: RunLedger | None = None,
    sanity: bool = False,
) -> SweepResult:
    points = config.points()
    append_event(ledger, events.run_started("sweep", len(points)))
    logger.info("sweep: %d points, %d worker(s)", len(points), jobs)

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(
                pool.map(
                    measure_point,
                    points,
                    [config] * len(points),
                    [sanity] * len(points),
                )
            )
    else:
        rows = [measure_point(point, config, sanity) for point in points]

    for row in rows:
        if row.failed:
            append_event(ledger, events.point_failed(row.point, row.error))
        else:
            append_event(
                ledger,
                events.point_measured(row.point, row.kappa, row.iterations or 0),
            )
    result = SweepResult(tuple(rows))
    append_event(
        ledger,
        events.run_completed(points=len(rows), failed=len(result.failures)),
    )
    return result


"""Robustness sweep: per-point measurement, failures and the ledger."""

import pytest

from mpet_lab.ledger.memory import InMemoryRunLedger
from mpet_lab.sources.config import SweepConfig
from mpet_lab.verify.sweep import SweepResult, SweepRow, measure_point, sweep


def small_config(**grid):
    return SweepConfig(
        base={"n": 1, "tau": 0.1},
        grid=grid or {"lam": [1.0, 1e4]},
        nx=2,
        tol=1e-8,
        max_iter=200,
        seed=3,
    )


def test_sanity_point_has_unit_condition_number():
    config = small_config()
    row = measure_point(config.points()[0], config, sanity=True)

    assert row.status == "ok"
    assert row.kappa == pytest.approx(1.0, rel=1e-8)
    assert row.iterations <= 2
    assert row.converged is True


def test_points_record_the_swept_values():
    config = small_config()
    result = sweep(config)

    assert [row.point for row in result.rows] == [0, 1]
    assert [row.lam for row in result.rows] == [1.0, 1e4]
    for row in result.rows:
        assert row.status == "ok"
        assert row.dofs == 2 * 16 + 2 * 8 + 8
        assert row.kappa >= 1.0
        assert row.converged
        assert row.K == 1.0
        assert row.beta_tilde == 0.0
    assert result.kappa_spread() >= 1.0
    assert result.failed_checks(config) == []


def test_inadmissible_point_fails_alone():
    ledger = InMemoryRunLedger()
    result = sweep(small_config(phi=[0.2, 1.5]), ledger=ledger)

    good, bad = result.rows
    assert good.status == "ok"
    assert bad.status == "failed"
    assert bad.error == "ParameterError"
    assert bad.kappa is None
    assert result.failures == [bad]
    assert ledger.event_types() == [
        "RunStarted",
        "PointMeasured",
        "PointFailed",
        "RunCompleted",
    ]
    assert ledger.events[-1]["data"] == {"points": 2, "failed": 1}


def test_dense_analysis_can_be_skipped():
    config = SweepConfig(base={"n": 1}, grid={"mu": [1.0]}, nx=2, dense=False)
    row = measure_point(config.points()[0], config)

    assert row.kappa is None
    assert row.iterations > 0


@pytest.mark.slow
def test_worker_count_does_not_change_the_table():
    config = small_config(lam=[1.0, 1e4, 1e8])

    serial = sweep(config, jobs=1)
    parallel = sweep(config, jobs=2)

    assert [row.iterations for row in serial.rows] == [
        row.iterations for row in parallel.rows
    ]
    for a, b in zip(serial.rows, parallel.rows, strict=True):
        assert a.kappa == pytest.approx(b.kappa, rel=1e-10)


def measured(point, nx=2, kappa=4.0, iterations=20, **overrides):
    values = {
        "xi_min": 0.5,
        "xi_max": 0.5 * kappa,
        "kappa": kappa,
        "iterations": iterations,
        "residual": 1e-9,
        "converged": True,
    }
    values.update(overrides)
    return SweepRow(point, 1, nx, 1.0, 1.0, 1.0, 0.0, 0.0, 0.1, dofs=56, **values)


def checks(*rows):
    return SweepResult(rows).failed_checks(small_config())


def test_acceptable_sweep_has_no_failed_checks():
    assert checks(measured(0), measured(1, kappa=30.0, iterations=35)) == []


def test_each_acceptance_budget_is_checked():
    assert checks(measured(0), measured(1, converged=False, residual=1e-3)) == [
        "converged: point 1 stopped at 20 iterations, residual 1.000e-03"
    ]
    assert checks(measured(0, xi_min=0.0)) == ["xi_min: point 0 has 0.000e+00"]
    assert checks(measured(0, iterations=81)) == ["iterations: point 0 needed 81 > 80"]
    assert checks(measured(0, kappa=2.0), measured(1, kappa=30.0)) == [
        "kappa_spread: nx=2 spread 15 > 10"
    ]
    assert checks(measured(0, iterations=10), measured(1, iterations=25)) == [
        "iteration_spread: nx=2 spread 2.5 > 2"
    ]


def test_spreads_are_compared_within_one_mesh():
    rows = (
        measured(0, nx=2, kappa=2.0, iterations=10),
        measured(1, nx=4, kappa=30.0, iterations=25),
    )

    assert checks(*rows) == []


def test_failed_point_is_a_failed_check():
    blank = (None,) * 6
    bad = SweepRow(1, 1, 2, *blank, status="failed", error="ParameterError")

    assert checks(measured(0), bad) == ["failed: point 1 raised ParameterError"]

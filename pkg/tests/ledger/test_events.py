"""Event factory tests: shape, and primitives only."""

import numpy as np

from mpet_lab.ledger import events


def test_run_started():
    event = events.run_started(kind="sweep", size=432)
    assert event.type == "RunStarted"
    assert event.data == {"kind": "sweep", "size": 432}


def test_terminal_types_cover_both_outcomes():
    assert events.run_completed(points=8).type in events.TERMINAL_TYPES
    assert events.run_failed("step", "StepError").type in events.TERMINAL_TYPES
    assert events.run_started("trajectory", 10).type not in events.TERMINAL_TYPES
    assert events.step_taken(1, 12).type not in events.TERMINAL_TYPES


def test_measured_kappa_is_a_plain_float():
    event = events.point_measured(index=3, kappa=np.float64(4.5), iterations=21)
    assert type(event.data["kappa"]) is float
    assert events.point_measured(0, None, 5).data["kappa"] is None


def test_failures_carry_the_class_name_only():
    event = events.point_failed(7, "ParameterError")
    assert event.data == {"index": 7, "error": "ParameterError"}

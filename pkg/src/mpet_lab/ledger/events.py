"""Run ledger event types.

An event is a type name plus a small dict of primitive data: counts,
indices, measured numbers and error class names. The adapter stamps run
id, sequence number and timestamp at write time.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class LedgerEvent:
    type: str
    data: dict


def run_started(kind: str, size: int) -> LedgerEvent:
    """kind: sweep|trajectory|convergence; size: points or steps."""
    return LedgerEvent("RunStarted", {"kind": kind, "size": size})


def point_measured(index: int, kappa: float | None, iterations: int) -> LedgerEvent:
    return LedgerEvent(
        "PointMeasured",
        {
            "index": index,
            "kappa": None if kappa is None else float(kappa),
            "iterations": iterations,
        },
    )


def point_failed(index: int, error: str) -> LedgerEvent:
    """error is the exception class name, never its message."""
    return LedgerEvent("PointFailed", {"index": index, "error": error})


def step_taken(step: int, iterations: int) -> LedgerEvent:
    return LedgerEvent("StepTaken", {"step": step, "iterations": iterations})


def run_completed(**summary: int | float | str) -> LedgerEvent:
    return LedgerEvent("RunCompleted", dict(summary))


def run_failed(stage: str, error: str) -> LedgerEvent:
    return LedgerEvent("RunFailed", {"stage": stage, "error": error})


TERMINAL_TYPES = frozenset({"RunCompleted", "RunFailed"})

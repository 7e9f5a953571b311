"""JSON-lines run ledger: one object per line, appended and flushed per
event, so a crashed run still leaves every event it reached."""

from __future__ import annotations

import json
from collections.abc import Callable
from datetime import datetime
from pathlib import Path

from mpet_lab.ledger.events import LedgerEvent


class JsonlRunLedger:
    def __init__(
        self,
        path: Path | str,
        run_id: str,
        now: Callable[[], datetime] = datetime.now,
    ) -> None:
        self.path = Path(path)
        self.run_id = run_id
        self._now = now
        self._seq = 0

    def append(self, event: LedgerEvent) -> None:
        self._seq += 1
        payload = {
            "run_id": self.run_id,
            "seq": self._seq,
            "type": event.type,
            "at": self._now().isoformat(timespec="seconds"),
            "data": event.data,
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(payload, sort_keys=True) + "\n")


def read_runs(path: Path | str) -> list[dict]:
    """Group a ledger file by run, events in sequence order, oldest run
    first. Unparseable lines are skipped."""
    events_by_run: dict[str, list[dict]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        try:
            payload = json.loads(line)
        except ValueError:
            continue
        events_by_run.setdefault(payload["run_id"], []).append(payload)
    runs = []
    for run_id, run_events in events_by_run.items():
        run_events.sort(key=lambda e: e["seq"])
        runs.append({"run_id": run_id, "events": run_events})
    return runs

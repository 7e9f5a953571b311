"""Port for the run ledger. Adapters: in-memory and JSON lines."""

from __future__ import annotations

from typing import Protocol

from mpet_lab.ledger.events import LedgerEvent


class RunLedger(Protocol):
    run_id: str

    def append(self, event: LedgerEvent) -> None: ...

from mpet_lab.ledger import events
from mpet_lab.ledger.memory import InMemoryRunLedger
from mpet_lab.verify.support import append_event, new_run_id


class BrokenLedger:
    run_id = "broken"

    def append(self, event):
        raise OSError("disk full")


def test_run_id_names_the_kind():
    run_id = new_run_id("sweep")

    assert run_id.startswith("sweep_")
    assert run_id != new_run_id("sweep")


def test_append_without_ledger_is_a_no_op():
    append_event(None, events.run_started("sweep", 3))


def test_failed_append_only_warns(caplog):
    append_event(BrokenLedger(), events.run_started("sweep", 3))

    assert "ledger append failed for RunStarted" in caplog.text


def test_append_reaches_the_ledger():
    ledger = InMemoryRunLedger()
    append_event(ledger, events.step_taken(1, 7))

    assert ledger.events[0]["data"] == {"step": 1, "iterations": 7}

import json

import pytest

from claimarena.events import EventLog, EventLogError, read_events


def test_append_and_read_round_trip(tmp_path):
    path = tmp_path / "events.jsonl"
    log = EventLog(path)
    log.append("flag", {"claim_id": "c1", "flagger_id": "p", "reason": "r"})
    log.append("like", {"round_id": "r1", "claim_id": "c1", "author_id": "a", "bonus": 10})
    records = list(read_events(path))
    assert [r.seq for r in records] == [1, 2]
    assert records[0].kind == "flag"
    assert records[1].payload["bonus"] == 10


def test_empty_log_replays_to_nothing(tmp_path):
    path = tmp_path / "events.jsonl"
    path.write_text("")
    assert list(read_events(path)) == []


def test_append_resumes_sequence_from_existing_file(tmp_path):
    path = tmp_path / "events.jsonl"
    EventLog(path).append("flag", {"claim_id": "c1", "flagger_id": "p", "reason": "r"})
    resumed = EventLog(path)
    record = resumed.append("flag", {"claim_id": "c2", "flagger_id": "p", "reason": "r"})
    assert record.seq == 2


def test_unknown_kind_rejected():
    with pytest.raises(EventLogError):
        EventLog().append("mystery", {})


def test_truncated_line_reports_sequence_number(tmp_path):
    path = tmp_path / "events.jsonl"
    log = EventLog(path)
    log.append("flag", {"claim_id": "c1", "flagger_id": "p", "reason": "r"})
    log.append("flag", {"claim_id": "c2", "flagger_id": "p", "reason": "r"})
    raw = path.read_text()
    path.write_text(raw[:-15])  # corrupt the final line
    with pytest.raises(EventLogError) as excinfo:
        list(read_events(path))
    assert excinfo.value.seq == 2


def test_sequence_gap_detected(tmp_path):
    path = tmp_path / "events.jsonl"
    lines = [
        json.dumps({"seq": 1, "kind": "flag", "ts": 0.0, "payload": {}}),
        json.dumps({"seq": 3, "kind": "flag", "ts": 0.0, "payload": {}}),
    ]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(EventLogError, match="gap") as excinfo:
        list(read_events(path))
    assert excinfo.value.seq == 2


def test_memory_log_keeps_records():
    log = EventLog()
    log.append("flag", {"claim_id": "c1", "flagger_id": "p", "reason": "r"})
    assert [r.seq for r in log.records()] == [1]

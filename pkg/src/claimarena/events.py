"""Append-only JSONL event log; the single source of truth for game state.

Every state change is one line with a strictly increasing sequence number.
Snapshots are always derived by replaying the log, never authoritative.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Optional

EVENT_KINDS = frozenset(
    {"claim_submitted", "round_started", "hint", "vote", "like", "flag"}
)


class EventLogError(Exception):
    def __init__(self, message: str, seq: Optional[int] = None):
        super().__init__(message)
        self.seq = seq


@dataclass(frozen=True)
class EventRecord:
    seq: int
    kind: str
    timestamp: float
    payload: dict


class EventLog:
    """Exclusive appender over a JSONL file (or memory when `path` is None)."""

    def __init__(self, path: Optional[str | Path] = None, clock: Callable[[], float] = time.time):
        self.path = Path(path) if path is not None else None
        self._clock = clock
        self._records: list[EventRecord] = []
        self._last_seq = 0
        if self.path is not None and self.path.exists():
            for record in read_events(self.path):
                self._last_seq = record.seq

    def append(self, kind: str, payload: dict) -> EventRecord:
        if kind not in EVENT_KINDS:
            raise EventLogError(f"unknown event kind {kind!r}")
        self._last_seq += 1
        record = EventRecord(self._last_seq, kind, self._clock(), payload)
        if self.path is not None:
            line = json.dumps(
                {"seq": record.seq, "kind": kind, "ts": record.timestamp, "payload": payload},
                ensure_ascii=False,
                sort_keys=True,
            )
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
        else:
            self._records.append(record)
        return record

    @property
    def last_seq(self) -> int:
        return self._last_seq

    def records(self) -> list[EventRecord]:
        if self.path is not None:
            return list(read_events(self.path))
        return list(self._records)


def read_events(path: str | Path) -> Iterator[EventRecord]:
    """Parse a log file, enforcing gap-free, strictly increasing sequence numbers."""
    expected = 1
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise EventLogError(f"corrupt event line at seq {expected}", seq=expected)
            seq = obj.get("seq")
            if seq != expected:
                raise EventLogError(
                    f"sequence gap: expected seq {expected}, found {seq}", seq=expected
                )
            kind = obj.get("kind")
            if kind not in EVENT_KINDS:
                raise EventLogError(f"unknown event kind {kind!r} at seq {seq}", seq=seq)
            yield EventRecord(seq, kind, obj.get("ts", 0.0), obj.get("payload", {}))
            expected += 1

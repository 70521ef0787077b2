"""Append-only audit trail, one JSON object per line.

Record fields are exactly (t, actor, kind, detail). The in-memory
trail supports live listeners (the manager gateway mirrors denials
from here) and an optional file sink.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterator

from .values import Triple, value_to_json

RECORD_KINDS = ("managerMsg", "violation", "rejection", "deadLetter", "filterEvent")


@dataclass(frozen=True)
class AuditRecord:
    t: float
    actor: Triple
    kind: str
    detail: Any

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "actor": list(self.actor),
            "kind": self.kind,
            "detail": value_to_json(self.detail),
        }

    @classmethod
    def from_json(cls, data: dict) -> "AuditRecord":
        actor = tuple(str(p) for p in data["actor"])
        return cls(data["t"], actor, str(data["kind"]), data["detail"])


class AuditTrail:
    """Thread-safe append-only sink with optional JSONL file output."""

    def __init__(self, path: str | Path | None = None):
        self.records: list[AuditRecord] = []
        self._lock = threading.Lock()
        self._listeners: list[Callable[[AuditRecord], None]] = []
        self._fh = open(path, "a", encoding="utf-8") if path is not None else None

    def append(self, record: AuditRecord) -> None:
        with self._lock:
            self.records.append(record)
            if self._fh is not None:
                self._fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")
                self._fh.flush()
            listeners = list(self._listeners)
        for fn in listeners:
            fn(record)

    def subscribe(self, fn: Callable[[AuditRecord], None]) -> None:
        with self._lock:
            self._listeners.append(fn)

    def snapshot(self) -> list[AuditRecord]:
        with self._lock:
            return list(self.records)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_audit_file(path: str | Path) -> Iterator[AuditRecord]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield AuditRecord.from_json(json.loads(line))

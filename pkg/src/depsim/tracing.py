"""Run traces.

A trace is an append-only sequence of entries, one per observable event.
Each entry has a logical timestamp ``t``, a monotonically increasing
sequence number ``seq`` (unique within the run), a ``kind`` string, the
``node`` it concerns (or None for run-level events) and a ``detail``
mapping. Serialized form is JSON Lines with a fixed key order so that
identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from typing import Any, Iterable, Iterator


class MalformedTrace(Exception):
    """Raised when a trace file cannot be parsed or lacks required fields."""


class TraceRecorder:
    """Collects trace entries in memory.

    ``kinds`` restricts recording to the given kind names; None records
    everything. Filtering only affects what is recorded, never the
    simulation itself.
    """

    __slots__ = ("entries", "_kinds", "_seq")

    def __init__(self, kinds: Iterable[str] | None = None):
        self.entries: list[dict[str, Any]] = []
        self._kinds = frozenset(kinds) if kinds is not None else None
        self._seq = 0

    def wants(self, kind: str) -> bool:
        return self._kinds is None or kind in self._kinds

    def record(self, t: int, kind: str, node: str | None, detail: dict[str, Any]) -> None:
        if self._kinds is not None and kind not in self._kinds:
            return
        # Insertion order of keys is the serialization order.
        self.entries.append({"t": t, "seq": self._seq, "kind": kind, "node": node, "detail": detail})
        self._seq += 1


def dump_jsonl(entries: Iterable[dict[str, Any]], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, separators=(",", ":")))
            fh.write("\n")


def dumps_jsonl(entries: Iterable[dict[str, Any]]) -> str:
    return "".join(json.dumps(e, separators=(",", ":")) + "\n" for e in entries)


def load_jsonl(path: str) -> list[dict[str, Any]]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedTrace(f"line {lineno}: {exc}") from exc
            if not isinstance(obj, dict):
                raise MalformedTrace(f"line {lineno}: entry is not an object")
            for field in ("t", "seq", "kind", "detail"):
                if field not in obj:
                    raise MalformedTrace(f"line {lineno}: missing field {field!r}")
            entries.append(obj)
    return entries


def iter_kind(entries: Iterable[dict[str, Any]], kind: str) -> Iterator[dict[str, Any]]:
    return (e for e in entries if e["kind"] == kind)

"""Append-only event log partitioned by UTC day.

Records are newline-delimited wire-format events in files named
``events-YYYYMMDD.ndjson``.  Appends to the log are serialized and
records within a partition keep append order; scans are read-only and
may run concurrently with appends (a reader sees a prefix).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator

from engage.events import DecodeError, Event, decode_event, encode_event

PARTITION_PREFIX = "events-"
PARTITION_SUFFIX = ".ndjson"


class StorageFailure(RuntimeError):
    """An append could not be completed; the batch was not (fully) written."""


@dataclass(frozen=True)
class CorruptRecord:
    """A stored line that failed to decode, surfaced with its location."""

    partition: str
    line_number: int
    error: str


def partition_name(timestamp: float) -> str:
    day = datetime.fromtimestamp(timestamp, tz=timezone.utc).strftime("%Y%m%d")
    return f"{PARTITION_PREFIX}{day}{PARTITION_SUFFIX}"


class EventStore:
    """Append-only newline-delimited record log under one data directory."""

    def __init__(self, data_dir: Path | str):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._append_lock = threading.Lock()

    @property
    def lock(self) -> threading.Lock:
        """Lock serializing appends; drain workers also hold it across dequeue."""
        return self._append_lock

    def partitions(self) -> list[Path]:
        return sorted(self.data_dir.glob(f"{PARTITION_PREFIX}*{PARTITION_SUFFIX}"))

    def append(self, events: Iterable[Event]) -> int:
        """Append events in order, grouped into their UTC-day partitions."""
        events = list(events)
        if not events:
            return 0
        # Encode up front so a bad event can never leave a partial batch behind.
        grouped: list[tuple[str, bytes]] = [
            (partition_name(e.timestamp), encode_event(e) + b"\n") for e in events
        ]
        with self._append_lock:
            try:
                handles: dict[str, object] = {}
                try:
                    for name, line in grouped:
                        handle = handles.get(name)
                        if handle is None:
                            handle = open(self.data_dir / name, "ab")
                            handles[name] = handle
                        handle.write(line)
                finally:
                    for handle in handles.values():
                        handle.close()
            except OSError as exc:
                raise StorageFailure(f"append failed: {exc}") from exc
        return len(events)

    def record_count(self) -> int:
        total = 0
        for path in self.partitions():
            with open(path, "rb") as fh:
                total += sum(1 for line in fh if line.strip())
        return total

    def scan(
        self,
        *,
        event_type: str | set[str] | None = None,
        entity_id: str | None = None,
        target_entity_id: str | None = None,
        since: float | None = None,
        until: float | None = None,
        on_corrupt: Callable[[CorruptRecord], None] | None = None,
    ) -> Iterator[Event]:
        """Yield matching events in (partition, append-order) sequence.

        A line that fails to decode is surfaced through ``on_corrupt`` with
        partition and line number, and the scan continues.
        """
        types: set[str] | None
        if event_type is None:
            types = None
        elif isinstance(event_type, str):
            types = {event_type}
        else:
            types = set(event_type)
        for path in self.partitions():
            with open(path, "rb") as fh:
                for line_number, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        event = decode_event(line)
                    except DecodeError as exc:
                        if on_corrupt is not None:
                            on_corrupt(CorruptRecord(path.name, line_number, str(exc)))
                        continue
                    if types is not None and event.event_type not in types:
                        continue
                    if entity_id is not None and event.entity_id != entity_id:
                        continue
                    if target_entity_id is not None and event.target_entity_id != target_entity_id:
                        continue
                    if since is not None and event.timestamp < since:
                        continue
                    if until is not None and event.timestamp >= until:
                        continue
                    yield event


def read_log(
    path: Path | str,
    *,
    on_corrupt: Callable[[CorruptRecord], None] | None = None,
) -> Iterator[Event]:
    """Yield events from one newline-delimited log file (simulator output)."""
    path = Path(path)
    with open(path, "rb") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield decode_event(line)
            except DecodeError as exc:
                if on_corrupt is not None:
                    on_corrupt(CorruptRecord(path.name, line_number, str(exc)))

"""Ingress pipeline: traffic classification, bounded queue, drain workers.

The collection endpoint validates and classifies a submission, enqueues
the decoded events, and acks — it never waits on storage.  Workers drain
the queue into the append-only store.  Roughly half of real traffic is
non-human; submissions that did not come through the collector script,
match a crawler denylist, or exceed a per-source rate ceiling are
rejected before they can pollute the engagement features.
"""

from __future__ import annotations

import threading
import time
from collections import defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from engage.events import DecodeError, Event, decode_event
from engage.store import EventStore, StorageFailure

DEFAULT_QUEUE_CAPACITY = 65536
DEFAULT_RATE_PER_SECOND = 10.0
DEFAULT_RATE_WINDOW_SECONDS = 60.0
DEFAULT_BATCH_SIZE = 256


class TrafficClass(Enum):
    HUMAN = "human"
    BOT = "bot"


class Disposition(Enum):
    """Outcome of one submission, with its HTTP status."""

    ACCEPTED = ("accepted", 202)
    MALFORMED = ("malformed", 400)
    BOT_REJECTED = ("bot_rejected", 403)
    BACKPRESSURE = ("backpressure", 429)

    def __init__(self, label: str, http_status: int):
        self.label = label
        self.http_status = http_status


@dataclass(frozen=True)
class RequestMeta:
    """Transport-level facts about one submission."""

    source_ip: str
    user_agent: str = ""
    executed_collector: bool = False
    arrival_time: float = 0.0


@dataclass(frozen=True)
class SubmitOutcome:
    disposition: Disposition
    detail: str = ""
    accepted: int = 0


class QueueFull(RuntimeError):
    """The bounded queue is at capacity; the caller should retry later."""


class EventQueue:
    """Bounded multi-producer/multi-consumer FIFO of events."""

    def __init__(self, capacity: int = DEFAULT_QUEUE_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: deque[Event] = deque()
        self._lock = threading.Lock()
        self._not_empty = threading.Condition(self._lock)
        # Held across dequeue+append by drain workers so cross-batch order
        # survives concurrent draining.
        self.drain_lock = threading.Lock()

    @property
    def depth(self) -> int:
        with self._lock:
            return len(self._items)

    def put_all(self, events: Sequence[Event]) -> None:
        """Enqueue all events atomically, or none on backpressure."""
        with self._not_empty:
            if len(self._items) + len(events) > self.capacity:
                raise QueueFull(
                    f"queue at {len(self._items)}/{self.capacity}, cannot take {len(events)}"
                )
            self._items.extend(events)
            self._not_empty.notify_all()

    def put(self, event: Event) -> None:
        self.put_all([event])

    def put_front(self, events: Sequence[Event]) -> None:
        """Re-admit a failed batch at the head, preserving its order."""
        with self._not_empty:
            self._items.extendleft(reversed(events))
            self._not_empty.notify_all()

    def get_batch(self, max_items: int, timeout: float | None = None) -> list[Event]:
        """Dequeue up to ``max_items``; waits up to ``timeout`` for the first."""
        with self._not_empty:
            if not self._items and timeout:
                self._not_empty.wait(timeout)
            batch = []
            while self._items and len(batch) < max_items:
                batch.append(self._items.popleft())
            return batch

    def wait_for_items(self, timeout: float) -> bool:
        """Block up to ``timeout`` for the queue to be non-empty."""
        with self._not_empty:
            if not self._items:
                self._not_empty.wait(timeout)
            return bool(self._items)


class Denylist:
    """Case-insensitive substring match over user-agent strings."""

    def __init__(self, patterns: Iterable[str] = ()):
        self.patterns = tuple(p.lower() for p in patterns if p.strip())

    @classmethod
    def from_file(cls, path: Path | str) -> "Denylist":
        patterns = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                patterns.append(line)
        return cls(patterns)

    def matches(self, user_agent: str) -> bool:
        ua = user_agent.lower()
        return any(p in ua for p in self.patterns)


class RateCounter:
    """Sliding-window per-source submission counter.

    A source exceeding ``max_per_second`` sustained over ``window_seconds``
    (i.e. more than max_per_second x window_seconds submissions inside any
    trailing window) is classified as a bot.  The clock is the caller's
    ``arrival_time``, so classification is deterministic given the inputs.
    """

    def __init__(
        self,
        max_per_second: float = DEFAULT_RATE_PER_SECOND,
        window_seconds: float = DEFAULT_RATE_WINDOW_SECONDS,
    ):
        self.max_per_second = max_per_second
        self.window_seconds = window_seconds
        self._seen: dict[str, deque[float]] = defaultdict(deque)
        self._lock = threading.Lock()

    def observe(self, source: str, at: float) -> bool:
        """Record one submission; returns True when the source is over ceiling."""
        threshold = self.max_per_second * self.window_seconds
        with self._lock:
            window = self._seen[source]
            cutoff = at - self.window_seconds
            while window and window[0] <= cutoff:
                window.popleft()
            window.append(at)
            return len(window) > threshold


def classify_traffic(
    meta: RequestMeta,
    *,
    denylist: Denylist | None = None,
    rate_counter: RateCounter | None = None,
) -> TrafficClass:
    """Classify one submission as human or bot.

    Bot when the request did not come through the collector script (crawlers
    do not execute it), the user agent matches the denylist, or the source
    exceeded the report-rate ceiling.
    """
    if not meta.executed_collector:
        return TrafficClass.BOT
    if denylist is not None and denylist.matches(meta.user_agent):
        return TrafficClass.BOT
    if rate_counter is not None and rate_counter.observe(meta.source_ip, meta.arrival_time):
        return TrafficClass.BOT
    return TrafficClass.HUMAN


@dataclass
class IngestStats:
    """Monotonic counters over the life of the pipeline."""

    accepted: int = 0
    malformed: int = 0
    bot_rejected: int = 0
    backpressure: int = 0
    appended: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def bump(self, name: str, amount: int = 1) -> None:
        with self._lock:
            setattr(self, name, getattr(self, name) + amount)

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return {
                "accepted": self.accepted,
                "malformed": self.malformed,
                "bot_rejected": self.bot_rejected,
                "backpressure": self.backpressure,
                "appended": self.appended,
            }


class IngestPipeline:
    """Validate, classify and enqueue submissions without touching storage."""

    def __init__(
        self,
        queue: EventQueue,
        *,
        denylist: Denylist | None = None,
        rate_counter: RateCounter | None = None,
        stats: IngestStats | None = None,
    ):
        self.queue = queue
        self.denylist = denylist
        self.rate_counter = rate_counter
        self.stats = stats or IngestStats()

    def handle_submit(self, body: bytes, meta: RequestMeta) -> SubmitOutcome:
        """Process one submission body (one or more newline-delimited records).

        The ack is returned before any disk write happens; storage is the
        drain workers' job.
        """
        verdict = classify_traffic(
            meta, denylist=self.denylist, rate_counter=self.rate_counter
        )
        if verdict is TrafficClass.BOT:
            self.stats.bump("bot_rejected")
            return SubmitOutcome(Disposition.BOT_REJECTED, "non-human traffic rejected")

        records = [line for line in body.splitlines() if line.strip()]
        if not records:
            self.stats.bump("malformed")
            return SubmitOutcome(Disposition.MALFORMED, "empty body")
        events = []
        for record in records:
            try:
                events.append(decode_event(record, default_ip=meta.source_ip))
            except DecodeError as exc:
                self.stats.bump("malformed")
                return SubmitOutcome(Disposition.MALFORMED, str(exc))

        try:
            self.queue.put_all(events)
        except QueueFull as exc:
            self.stats.bump("backpressure")
            return SubmitOutcome(Disposition.BACKPRESSURE, str(exc))
        self.stats.bump("accepted", len(events))
        return SubmitOutcome(Disposition.ACCEPTED, accepted=len(events))


def drain(
    queue: EventQueue,
    store: EventStore,
    *,
    batch_size: int = DEFAULT_BATCH_SIZE,
    stats: IngestStats | None = None,
) -> int:
    """Drain the queue into the store until empty; returns the count appended.

    Dequeue and append happen under the queue's drain lock so several
    workers never reorder batches; a failed append re-enqueues its batch
    at the front and raises :class:`StorageFailure`.
    """
    appended = 0
    while True:
        with queue.drain_lock:
            batch = queue.get_batch(batch_size)
            if not batch:
                return appended
            try:
                store.append(batch)
            except StorageFailure:
                queue.put_front(batch)
                raise
        appended += len(batch)
        if stats is not None:
            stats.bump("appended", len(batch))


class DrainWorker(threading.Thread):
    """Background worker looping :func:`drain` semantics until stopped."""

    def __init__(
        self,
        queue: EventQueue,
        store: EventStore,
        *,
        batch_size: int = DEFAULT_BATCH_SIZE,
        stats: IngestStats | None = None,
        poll_seconds: float = 0.05,
    ):
        super().__init__(daemon=True, name="engage-drain")
        self.queue = queue
        self.store = store
        self.batch_size = batch_size
        self.stats = stats
        self.poll_seconds = poll_seconds
        self._stop_requested = threading.Event()

    def stop(self) -> None:
        self._stop_requested.set()

    def run(self) -> None:
        while not self._stop_requested.is_set():
            # Wait outside the drain lock so shutdown and sibling workers
            # are never starved by an idle poll.
            if not self.queue.wait_for_items(self.poll_seconds):
                continue
            with self.queue.drain_lock:
                batch = self.queue.get_batch(self.batch_size)
                if not batch:
                    continue
                try:
                    self.store.append(batch)
                except StorageFailure:
                    self.queue.put_front(batch)
                    time.sleep(self.poll_seconds)
                    continue
            if self.stats is not None:
                self.stats.bump("appended", len(batch))

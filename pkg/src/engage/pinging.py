"""Clock-driven collector state machine (the enhanced pinging method).

One :class:`PingCollector` tracks one (entity, target) page view.  DOM
events accumulate into the current 5-second bucket; every tick a
non-empty bucket is pushed onto the pending list; every third tick the
pending buckets flush as a single engagement report.  A window with no
events produces nothing — empty flushes are suppressed, which is the
whole point: zero traffic while the user is idle.

The clock is injected.  The machine never reads wall time; callers drive
it with explicit timestamps (the browser collector uses real timers, the
simulator uses virtual time), so identical input sequences yield
byte-identical report sequences.

Tick boundaries are aligned to machine creation (page load): boundary k
falls at ``created_at + 5k``, and every third boundary is also a flush.
A ``beforeunload`` event is both recorded (leaving is an engagement
signal) and triggers an immediate early flush of the pending buckets
plus the in-progress one, so end-of-session engagement is not lost;
the same early flush sends any outstanding visible-impression report.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from engage.events import (
    DOM_EVENT_NAMES,
    MAX_REPORT_BUCKETS,
    BucketPayload,
    Event,
    IntervalBucket,
    InvariantViolation,
    ScrollSample,
    engagement_report,
    visible_impression_report,
)

TICK_SECONDS = 5.0
TICKS_PER_FLUSH = 3

Transport = Callable[[Event], None]


class UnknownEventName(ValueError):
    """A DOM event name outside the eight registered handlers."""


class ClockRegression(ValueError):
    """A tick or flush was driven with a timestamp that moved backwards."""


@dataclass(frozen=True)
class SessionIdentity:
    """The (entity, target) pair plus client address a machine reports for."""

    entity_id: str
    entity_type: str
    target_entity_id: str
    target_entity_type: str
    ip: str


class PingCollector:
    """State machine for one (user, page) session.

    Single-threaded by contract: callers must serialize calls per machine.
    Emitted reports are returned to the caller and, when a ``transport``
    callback was supplied at construction, also passed to it.
    """

    def __init__(
        self,
        identity: SessionIdentity,
        created_at: float,
        transport: Transport | None = None,
    ):
        self.identity = identity
        self.created_at = float(created_at)
        self._transport = transport
        self._bucket: dict[str, BucketPayload] = {}
        self._pending: list[IntervalBucket] = []
        self._viewed_pending: list[str] = []
        self._viewed_seen: set[str] = set()
        self._tick_count = 0
        self._last_tick_at = self.created_at
        self._last_flush_at = self.created_at

    # ------------------------------------------------------------------
    # introspection (used by tests and the browser-collector twin checks)

    @property
    def current_bucket(self) -> IntervalBucket:
        return IntervalBucket(dict(self._bucket))

    @property
    def pending_buckets(self) -> list[IntervalBucket]:
        return list(self._pending)

    @property
    def pending_viewed_items(self) -> list[str]:
        return list(self._viewed_pending)

    @property
    def last_tick_at(self) -> float:
        return self._last_tick_at

    # ------------------------------------------------------------------
    # core transitions

    def record_dom_event(
        self,
        name: str,
        payload: ScrollSample | int | None = None,
        *,
        now: float | None = None,
    ) -> list[Event]:
        """Record one DOM event into the current bucket.

        The handler sets or updates the bucket entry: non-scroll events are
        idempotent markers, a scroll entry keeps the maximum scroll_top seen
        this interval together with the newest dimensions.  For
        ``beforeunload`` with ``now`` given, the early unload flush runs and
        any emitted reports are returned.
        """
        if name not in DOM_EVENT_NAMES:
            raise UnknownEventName(name)
        if name == "scroll":
            if not isinstance(payload, ScrollSample):
                raise ValueError("scroll events carry a ScrollSample payload")
            previous = self._bucket.get("scroll")
            if isinstance(previous, ScrollSample):
                payload = ScrollSample(
                    document_height=payload.document_height,
                    screen_height=payload.screen_height,
                    screen_width=payload.screen_width,
                    scroll_top=max(previous.scroll_top, payload.scroll_top),
                )
            self._bucket["scroll"] = payload
        else:
            self._bucket[name] = 1
        if name == "beforeunload" and now is not None:
            return self.unload(now)
        return []

    def tick(self, now: float) -> None:
        """Close the current 5-second interval at ``now``.

        A non-empty bucket is appended to the pending list and a fresh
        bucket begins; an empty bucket appends nothing.
        """
        now = float(now)
        if now <= self._last_tick_at:
            raise ClockRegression(
                f"tick at {now} does not advance past {self._last_tick_at}"
            )
        if self._bucket:
            if len(self._pending) >= MAX_REPORT_BUCKETS:
                raise InvariantViolation(
                    "pending buckets may never exceed the report bound; flush first",
                    field="pendingBuckets",
                )
            self._pending.append(IntervalBucket(dict(self._bucket)))
            self._bucket = {}
        self._tick_count += 1
        self._last_tick_at = now

    def flush(self, now: float) -> Event | None:
        """Emit the pending buckets as one engagement report, or nothing.

        Suppression rule: an empty pending list emits no report at all.
        """
        now = float(now)
        if now < self._last_flush_at:
            raise ClockRegression(
                f"flush at {now} precedes previous flush at {self._last_flush_at}"
            )
        report = None
        if self._pending:
            report = engagement_report(
                entity_id=self.identity.entity_id,
                entity_type=self.identity.entity_type,
                target_entity_id=self.identity.target_entity_id,
                target_entity_type=self.identity.target_entity_type,
                ip=self.identity.ip,
                timestamp=now,
                buckets=self._pending,
            )
            self._pending = []
            if self._transport is not None:
                self._transport(report)
        self._last_flush_at = now
        return report

    def record_visible_items(self, item_ids: Iterable[str]) -> None:
        """Mark items as seen in the viewport.

        An identifier is reported at most once per continuous page view, so
        items already pending or already flushed are ignored.
        """
        for item_id in item_ids:
            if item_id not in self._viewed_seen:
                self._viewed_seen.add(item_id)
                self._viewed_pending.append(item_id)

    def flush_visibility(self, now: float, on_unload: bool = False) -> Event | None:
        """Emit the outstanding viewed items as a visible-impression report."""
        now = float(now)
        if now < self._last_flush_at:
            raise ClockRegression(
                f"flush at {now} precedes previous flush at {self._last_flush_at}"
            )
        if not self._viewed_pending:
            return None
        report = visible_impression_report(
            entity_id=self.identity.entity_id,
            entity_type=self.identity.entity_type,
            target_entity_id=self.identity.target_entity_id,
            target_entity_type=self.identity.target_entity_type,
            ip=self.identity.ip,
            timestamp=now,
            viewed_items=self._viewed_pending,
        )
        self._viewed_pending = []
        if self._transport is not None:
            self._transport(report)
        return report

    # ------------------------------------------------------------------
    # drivers

    def advance_to(self, now: float) -> list[Event]:
        """Fire every 5s tick and 15s flush boundary at or before ``now``.

        Skipped boundaries (a suspended tab, an idle gap) are caught up in
        order; intervals with no recorded events are empty, so catching up
        emits nothing for them.
        """
        now = float(now)
        emitted: list[Event] = []
        while True:
            boundary = self.created_at + TICK_SECONDS * (self._tick_count + 1)
            if boundary > now:
                break
            self.tick(boundary)
            if self._tick_count % TICKS_PER_FLUSH == 0:
                report = self.flush(boundary)
                if report is not None:
                    emitted.append(report)
                visibility = self.flush_visibility(boundary)
                if visibility is not None:
                    emitted.append(visibility)
        return emitted

    def observe(
        self, now: float, name: str, payload: ScrollSample | int | None = None
    ) -> list[Event]:
        """Advance the clock to ``now`` and record one DOM event."""
        emitted = self.advance_to(now)
        emitted.extend(self.record_dom_event(name, payload, now=now))
        return emitted

    def observe_visible_items(self, now: float, item_ids: Iterable[str]) -> list[Event]:
        """Advance the clock to ``now`` and mark items as seen."""
        emitted = self.advance_to(now)
        self.record_visible_items(item_ids)
        return emitted

    def unload(self, now: float) -> list[Event]:
        """Early flush on page exit.

        Closes the in-progress bucket into the pending list and emits any
        pending engagement report and visible-impression report immediately,
        without waiting for the next 15-second boundary.
        """
        now = float(now)
        emitted = self.advance_to(now)
        if self._bucket:
            self._pending.append(IntervalBucket(dict(self._bucket)))
            self._bucket = {}
        report = self.flush(now)
        if report is not None:
            emitted.append(report)
        visibility = self.flush_visibility(now, on_unload=True)
        if visibility is not None:
            emitted.append(visibility)
        return emitted

"""Canonical event types and the newline-delimited wire codec.

The atomic unit of collection is an :class:`Event`: an action from one
entity (e.g. a user) to a target entity (e.g. an item), carrying a
timestamp, the client IP, and a free-form properties bag.  Two event
shapes get first-class treatment:

* engagement reports — ``type == "engagement_report"`` with
  ``properties.report`` holding 1-3 interval buckets, each bucket being
  the DOM events observed during one 5-second window;
* visible-impression reports — ``type == "visible_impression_report"``
  with ``properties.viewedItems`` holding the item identifiers that
  actually intersected the viewport.

Wire records are UTF-8 JSON, one event per line, using the field names
``entityId``, ``entityType``, ``targetEntityId``, ``targetEntityType``,
``ip``, ``timestamp``, ``type`` and ``properties``.  Inside a report,
each interval bucket is a list of single-key objects (``{"mousemove": 1}``,
``{"scroll": {...}}``) and scroll payloads use the keys
``document_height``, ``screen_height``, ``screen_width``, ``scroll_top``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence, Union

ENGAGEMENT_REPORT = "engagement_report"
VISIBLE_IMPRESSION_REPORT = "visible_impression_report"
PAGE_LOAD = "page_load"
CLICK = "click"

#: The eight DOM events the collector registers handlers for.
DOM_EVENT_NAMES = (
    "mousemove",
    "scroll",
    "beforeunload",
    "resize",
    "focus",
    "DOMContentLoaded",
    "visibilitychange",
    "keydown",
)

#: Transmitted engagement reports carry between 1 and MAX_REPORT_BUCKETS buckets.
MAX_REPORT_BUCKETS = 3

_SCROLL_KEYS = ("document_height", "screen_height", "screen_width", "scroll_top")


class DecodeError(ValueError):
    """A wire record was rejected; ``field`` names the offending field."""

    def __init__(self, message: str, field: str = "<record>"):
        super().__init__(f"{field}: {message}")
        self.field = field


class MalformedRecord(DecodeError):
    """The record is not parseable text at all."""


class SchemaViolation(DecodeError):
    """A required field is missing or has the wrong type."""


class InvariantViolation(DecodeError):
    """The record parses but violates a stated invariant (e.g. report length)."""


@dataclass(frozen=True)
class ScrollSample:
    """Scroll geometry for one interval.

    ``scroll_top`` is the maximum distance scrolled from the top of the
    document within the interval; the remaining fields are the latest
    observed dimensions (the document height may vary over time).
    """

    document_height: int
    screen_height: int
    screen_width: int
    scroll_top: int

    def __post_init__(self) -> None:
        for name in _SCROLL_KEYS:
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValueError(f"{name} must be an integer, got {value!r}")
        if self.document_height < 0 or self.scroll_top < 0:
            raise ValueError("document_height and scroll_top must be >= 0")
        if self.screen_height <= 0 or self.screen_width <= 0:
            raise ValueError("screen_height and screen_width must be > 0")


BucketPayload = Union[int, ScrollSample]


@dataclass(frozen=True)
class IntervalBucket:
    """The DOM events observed in one 5-second window, keyed by event name.

    Non-scroll entries hold the marker value 1 (repeats within a window do
    not increment); the scroll entry holds a :class:`ScrollSample`.
    """

    entries: dict[str, BucketPayload]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def is_empty(self) -> bool:
        return not self.entries

    @property
    def scroll(self) -> ScrollSample | None:
        value = self.entries.get("scroll")
        return value if isinstance(value, ScrollSample) else None


@dataclass(frozen=True)
class Event:
    """An action from an entity to a target entity."""

    entity_id: str
    entity_type: str
    target_entity_id: str
    target_entity_type: str
    event_type: str
    timestamp: float
    ip: str
    properties: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> None:
        """Raise :class:`InvariantViolation` / :class:`SchemaViolation` if invalid."""
        for name, value in (
            ("entityId", self.entity_id),
            ("entityType", self.entity_type),
            ("targetEntityId", self.target_entity_id),
            ("targetEntityType", self.target_entity_type),
            ("type", self.event_type),
            ("ip", self.ip),
        ):
            if not isinstance(value, str):
                raise SchemaViolation("must be a string", field=name)
            if not value and name != "ip":
                raise InvariantViolation("must be non-empty", field=name)
        if not isinstance(self.timestamp, (int, float)) or isinstance(self.timestamp, bool):
            raise SchemaViolation("must be a number", field="timestamp")
        if self.timestamp <= 0:
            raise InvariantViolation("must be > 0", field="timestamp")
        if not isinstance(self.properties, dict):
            raise SchemaViolation("must be a map (may be empty, never absent)", field="properties")
        if self.event_type == ENGAGEMENT_REPORT:
            _validate_report_buckets(self.properties.get("report"))
        elif self.event_type == VISIBLE_IMPRESSION_REPORT:
            _validate_viewed_items(self.properties.get("viewedItems"))


def engagement_report(
    *,
    entity_id: str,
    entity_type: str = "user",
    target_entity_id: str,
    target_entity_type: str = "item",
    ip: str,
    timestamp: float,
    buckets: Sequence[IntervalBucket],
) -> Event:
    """Build an engagement-report event from 1-3 non-empty interval buckets."""
    event = Event(
        entity_id=entity_id,
        entity_type=entity_type,
        target_entity_id=target_entity_id,
        target_entity_type=target_entity_type,
        event_type=ENGAGEMENT_REPORT,
        timestamp=timestamp,
        ip=ip,
        properties={"report": list(buckets)},
    )
    event.validate()
    return event


def visible_impression_report(
    *,
    entity_id: str,
    entity_type: str = "user",
    target_entity_id: str,
    target_entity_type: str = "listing",
    ip: str,
    timestamp: float,
    viewed_items: Sequence[str],
) -> Event:
    """Build a visible-impression report carrying deduplicated item identifiers."""
    event = Event(
        entity_id=entity_id,
        entity_type=entity_type,
        target_entity_id=target_entity_id,
        target_entity_type=target_entity_type,
        event_type=VISIBLE_IMPRESSION_REPORT,
        timestamp=timestamp,
        ip=ip,
        properties={"viewedItems": list(viewed_items)},
    )
    event.validate()
    return event


def report_buckets(event: Event) -> list[IntervalBucket]:
    """Return the interval buckets of an engagement report."""
    if event.event_type != ENGAGEMENT_REPORT:
        raise ValueError(f"not an engagement report: type={event.event_type!r}")
    buckets = event.properties.get("report")
    _validate_report_buckets(buckets)
    return list(buckets)


def viewed_items(event: Event) -> list[str]:
    """Return the item identifiers carried by a visible-impression report."""
    if event.event_type != VISIBLE_IMPRESSION_REPORT:
        raise ValueError(f"not a visible-impression report: type={event.event_type!r}")
    items = event.properties.get("viewedItems")
    _validate_viewed_items(items)
    return list(items)


def _validate_report_buckets(buckets: Any) -> None:
    if not isinstance(buckets, list):
        raise SchemaViolation("must be a list of interval buckets", field="properties.report")
    if not 1 <= len(buckets) <= MAX_REPORT_BUCKETS:
        raise InvariantViolation(
            f"transmitted reports carry 1-{MAX_REPORT_BUCKETS} buckets, got {len(buckets)}",
            field="properties.report",
        )
    for i, bucket in enumerate(buckets):
        where = f"properties.report[{i}]"
        if not isinstance(bucket, IntervalBucket):
            raise SchemaViolation("must be an IntervalBucket", field=where)
        if bucket.is_empty:
            raise InvariantViolation("buckets inside a transmitted report are non-empty", field=where)
        for name, payload in bucket.entries.items():
            if name not in DOM_EVENT_NAMES:
                raise SchemaViolation(f"unknown DOM event name {name!r}", field=where)
            if name == "scroll":
                if not isinstance(payload, ScrollSample):
                    raise SchemaViolation("scroll payload must be a ScrollSample", field=where)
            elif payload != 1:
                raise SchemaViolation(f"marker payload must be 1, got {payload!r}", field=where)


def _validate_viewed_items(items: Any) -> None:
    if not isinstance(items, list) or not all(isinstance(x, str) for x in items):
        raise SchemaViolation("must be a list of identifier strings", field="properties.viewedItems")
    if not items:
        raise InvariantViolation("transmitted reports carry at least one item", field="properties.viewedItems")
    if len(set(items)) != len(items):
        raise InvariantViolation("identifiers are deduplicated within one report", field="properties.viewedItems")


def _wire_timestamp(value: float) -> int | float:
    # Epoch seconds; integral values encode as a plain 10-digit int.
    return int(value) if float(value).is_integer() else float(value)


def _encode_bucket(bucket: IntervalBucket) -> list[dict[str, Any]]:
    encoded: list[dict[str, Any]] = []
    for name, payload in bucket.entries.items():
        if isinstance(payload, ScrollSample):
            encoded.append({name: {key: getattr(payload, key) for key in _SCROLL_KEYS}})
        else:
            encoded.append({name: payload})
    return encoded


def encode_event(event: Event) -> bytes:
    """Encode a valid event as one self-contained UTF-8 JSON record."""
    event.validate()
    properties: dict[str, Any] = dict(event.properties)
    if event.event_type == ENGAGEMENT_REPORT:
        properties["report"] = [_encode_bucket(b) for b in event.properties["report"]]
    record = {
        "entityId": event.entity_id,
        "entityType": event.entity_type,
        "targetEntityId": event.target_entity_id,
        "targetEntityType": event.target_entity_type,
        "ip": event.ip,
        "timestamp": _wire_timestamp(event.timestamp),
        "type": event.event_type,
        "properties": properties,
    }
    return json.dumps(record, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def _decode_identifier(record: Mapping[str, Any], name: str) -> str:
    if name not in record:
        raise SchemaViolation("required field is missing", field=name)
    value = record[name]
    if isinstance(value, bool):
        raise SchemaViolation("must be a string", field=name)
    if isinstance(value, int):
        value = str(value)  # the wire example shows integer ids; strings subsume them
    if not isinstance(value, str):
        raise SchemaViolation("must be a string", field=name)
    if not value:
        raise InvariantViolation("must be non-empty", field=name)
    return value


def _decode_scroll(payload: Any, where: str) -> ScrollSample:
    if not isinstance(payload, dict) or set(payload) != set(_SCROLL_KEYS):
        raise SchemaViolation(
            f"scroll payload must carry exactly {list(_SCROLL_KEYS)}", field=where
        )
    for key in _SCROLL_KEYS:
        value = payload[key]
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaViolation(f"scroll.{key} must be an integer", field=where)
    try:
        return ScrollSample(**payload)
    except ValueError as exc:
        raise InvariantViolation(str(exc), field=where) from exc


def _decode_report(raw: Any) -> list[IntervalBucket]:
    if not isinstance(raw, list):
        raise SchemaViolation("must be a list of interval buckets", field="properties.report")
    if not 1 <= len(raw) <= MAX_REPORT_BUCKETS:
        raise InvariantViolation(
            f"transmitted reports carry 1-{MAX_REPORT_BUCKETS} buckets, got {len(raw)}",
            field="properties.report",
        )
    buckets: list[IntervalBucket] = []
    for i, raw_bucket in enumerate(raw):
        where = f"properties.report[{i}]"
        if not isinstance(raw_bucket, list):
            raise SchemaViolation("a bucket is a list of single-entry objects", field=where)
        if not raw_bucket:
            raise InvariantViolation("buckets inside a transmitted report are non-empty", field=where)
        entries: dict[str, BucketPayload] = {}
        for raw_entry in raw_bucket:
            if not isinstance(raw_entry, dict) or len(raw_entry) != 1:
                raise SchemaViolation("a bucket entry is one {name: payload} object", field=where)
            (name, payload), = raw_entry.items()
            if name not in DOM_EVENT_NAMES:
                raise SchemaViolation(f"unknown DOM event name {name!r}", field=where)
            if name in entries:
                raise InvariantViolation(f"duplicate entry for {name!r}", field=where)
            if name == "scroll":
                entries[name] = _decode_scroll(payload, where)
            elif payload == 1 and not isinstance(payload, bool):
                entries[name] = 1
            else:
                raise SchemaViolation(f"marker payload must be 1, got {payload!r}", field=where)
        buckets.append(IntervalBucket(entries))
    return buckets


def decode_event(data: bytes | str, *, default_ip: str | None = None) -> Event:
    """Parse one wire record back into an :class:`Event`.

    ``default_ip`` stamps records whose body omits the ip field (the
    collection endpoint passes the request's source address).
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedRecord(f"not valid UTF-8: {exc}") from exc
    else:
        text = data
    text = text.strip()
    if not text:
        raise MalformedRecord("empty record")
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"not valid JSON: {exc}") from exc
    if not isinstance(record, dict):
        raise SchemaViolation("record must be a JSON object")

    entity_id = _decode_identifier(record, "entityId")
    entity_type = _decode_identifier(record, "entityType")
    target_entity_id = _decode_identifier(record, "targetEntityId")
    target_entity_type = _decode_identifier(record, "targetEntityType")
    event_type = _decode_identifier(record, "type")

    if "ip" in record:
        ip = record["ip"]
        if not isinstance(ip, str):
            raise SchemaViolation("must be a string", field="ip")
    elif default_ip is not None:
        ip = default_ip
    else:
        raise SchemaViolation("required field is missing", field="ip")

    if "timestamp" not in record:
        raise SchemaViolation("required field is missing", field="timestamp")
    timestamp = record["timestamp"]
    if not isinstance(timestamp, (int, float)) or isinstance(timestamp, bool):
        raise SchemaViolation("must be a number (epoch seconds)", field="timestamp")
    if timestamp <= 0:
        raise InvariantViolation("must be > 0", field="timestamp")

    if "properties" not in record:
        raise SchemaViolation("may be empty but never absent", field="properties")
    raw_properties = record["properties"]
    if not isinstance(raw_properties, dict):
        raise SchemaViolation("must be a map", field="properties")

    properties = dict(raw_properties)
    if event_type == ENGAGEMENT_REPORT:
        if "report" not in properties:
            raise SchemaViolation("required field is missing", field="properties.report")
        properties["report"] = _decode_report(properties["report"])
    elif event_type == VISIBLE_IMPRESSION_REPORT:
        if "viewedItems" not in properties:
            raise SchemaViolation("required field is missing", field="properties.viewedItems")
        _validate_viewed_items(properties["viewedItems"])

    return Event(
        entity_id=entity_id,
        entity_type=entity_type,
        target_entity_id=target_entity_id,
        target_entity_type=target_entity_type,
        event_type=event_type,
        timestamp=timestamp,
        ip=ip,
        properties=properties,
    )


def encode_lines(events: Iterable[Event]) -> bytes:
    """Encode events as newline-delimited records (the storage framing)."""
    return b"".join(encode_event(e) + b"\n" for e in events)

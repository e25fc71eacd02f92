import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from engage.events import (
    DOM_EVENT_NAMES,
    Event,
    IntervalBucket,
    InvariantViolation,
    MalformedRecord,
    SchemaViolation,
    ScrollSample,
    decode_event,
    encode_event,
    engagement_report,
    viewed_items,
    visible_impression_report,
)
from tests.conftest import reference_buckets


class TestWireFormat:
    def test_reference_report_round_trips(self, reference_report):
        record = encode_event(reference_report)
        assert decode_event(record) == reference_report

    def test_reference_field_names_on_the_wire(self, reference_report):
        record = json.loads(encode_event(reference_report))
        assert list(record) == [
            "entityId", "entityType", "targetEntityId", "targetEntityType",
            "ip", "timestamp", "type", "properties",
        ]
        assert record["type"] == "engagement_report"
        assert record["timestamp"] == 1459535879
        first_interval = record["properties"]["report"][0]
        assert first_interval == [
            {"scroll": {"document_height": 5000, "screen_height": 100,
                        "screen_width": 980, "scroll_top": 300}},
            {"mousemove": 1},
        ]

    def test_empty_properties_round_trip(self):
        event = Event(
            entity_id="u1", entity_type="user", target_entity_id="i1",
            target_entity_type="item", event_type="page_load",
            timestamp=1459535879, ip="10.0.0.1",
        )
        record = encode_event(event)
        assert json.loads(record)["properties"] == {}
        assert decode_event(record) == event

    def test_decode_accepts_integer_identifiers(self, reference_report):
        record = json.loads(encode_event(reference_report))
        record["entityId"] = 1
        record["targetEntityId"] = 10
        decoded = decode_event(json.dumps(record))
        assert decoded == reference_report

    def test_decode_stamps_default_ip(self):
        record = {"entityId": "u", "entityType": "user", "targetEntityId": "i",
                  "targetEntityType": "item", "type": "click",
                  "timestamp": 1459535879, "properties": {}}
        decoded = decode_event(json.dumps(record), default_ip="198.18.0.9")
        assert decoded.ip == "198.18.0.9"
        with pytest.raises(SchemaViolation) as excinfo:
            decode_event(json.dumps(record))
        assert excinfo.value.field == "ip"


class TestDecodeRejections:
    def test_empty_input(self):
        with pytest.raises(MalformedRecord):
            decode_event(b"")

    def test_unparseable_text(self):
        with pytest.raises(MalformedRecord):
            decode_event(b"not-a-report")

    def test_four_buckets_rejected(self, reference_report):
        record = json.loads(encode_event(reference_report))
        record["properties"]["report"].append([{"mousemove": 1}])
        with pytest.raises(InvariantViolation) as excinfo:
            decode_event(json.dumps(record))
        assert excinfo.value.field == "properties.report"

    def test_zero_buckets_rejected(self, reference_report):
        record = json.loads(encode_event(reference_report))
        record["properties"]["report"] = []
        with pytest.raises(InvariantViolation):
            decode_event(json.dumps(record))

    @pytest.mark.parametrize("missing", [
        "entityId", "entityType", "targetEntityId", "targetEntityType",
        "type", "timestamp", "properties",
    ])
    def test_missing_required_field(self, reference_report, missing):
        record = json.loads(encode_event(reference_report))
        del record[missing]
        with pytest.raises(SchemaViolation) as excinfo:
            decode_event(json.dumps(record))
        assert excinfo.value.field == missing

    def test_unknown_dom_event_name(self, reference_report):
        record = json.loads(encode_event(reference_report))
        record["properties"]["report"][1] = [{"wheel": 1}]
        with pytest.raises(SchemaViolation):
            decode_event(json.dumps(record))

    def test_duplicate_entry_in_bucket(self, reference_report):
        record = json.loads(encode_event(reference_report))
        record["properties"]["report"][1] = [{"mousemove": 1}, {"mousemove": 1}]
        with pytest.raises(InvariantViolation):
            decode_event(json.dumps(record))

    def test_marker_payload_must_be_one(self, reference_report):
        record = json.loads(encode_event(reference_report))
        record["properties"]["report"][1] = [{"mousemove": 2}]
        with pytest.raises(SchemaViolation):
            decode_event(json.dumps(record))

    def test_nonpositive_timestamp(self, reference_report):
        record = json.loads(encode_event(reference_report))
        record["timestamp"] = 0
        with pytest.raises(InvariantViolation) as excinfo:
            decode_event(json.dumps(record))
        assert excinfo.value.field == "timestamp"

    def test_empty_viewed_items_rejected(self):
        record = {"entityId": "u", "entityType": "user", "targetEntityId": "l",
                  "targetEntityType": "listing", "type": "visible_impression_report",
                  "ip": "10.0.0.1", "timestamp": 5, "properties": {"viewedItems": []}}
        with pytest.raises(InvariantViolation):
            decode_event(json.dumps(record))

    def test_duplicated_viewed_items_rejected(self):
        record = {"entityId": "u", "entityType": "user", "targetEntityId": "l",
                  "targetEntityType": "listing", "type": "visible_impression_report",
                  "ip": "10.0.0.1", "timestamp": 5, "properties": {"viewedItems": ["a", "a"]}}
        with pytest.raises(InvariantViolation):
            decode_event(json.dumps(record))


class TestConstructors:
    def test_engagement_report_validates_bucket_count(self):
        with pytest.raises(InvariantViolation):
            engagement_report(
                entity_id="u", target_entity_id="i", ip="1.2.3.4",
                timestamp=10.0, buckets=[],
            )

    def test_visible_impression_report_round_trip(self):
        report = visible_impression_report(
            entity_id="u", target_entity_id="list-1", ip="1.2.3.4",
            timestamp=20.0, viewed_items=["a", "b"],
        )
        assert viewed_items(decode_event(encode_event(report))) == ["a", "b"]


# --- property-based round-trip over generated valid events ----------------

_identifiers = st.text(
    alphabet="abcdefghijklmnopqrstuvwxyz0123456789-_.",
    min_size=1, max_size=12,
)

_json_scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(min_value=-(2**31), max_value=2**31),
    st.floats(allow_nan=False, allow_infinity=False, width=32),
    st.text(alphabet="abc åé中', \"\\", max_size=20),
)

_plain_properties = st.dictionaries(
    _identifiers.filter(lambda k: k not in ("report", "viewedItems")),
    st.one_of(_json_scalars, st.lists(_json_scalars, max_size=4)),
    max_size=4,
)


@st.composite
def scroll_samples(draw):
    return ScrollSample(
        document_height=draw(st.integers(min_value=0, max_value=100_000)),
        screen_height=draw(st.integers(min_value=1, max_value=5_000)),
        screen_width=draw(st.integers(min_value=1, max_value=5_000)),
        scroll_top=draw(st.integers(min_value=0, max_value=100_000)),
    )


@st.composite
def interval_buckets(draw):
    names = draw(st.lists(st.sampled_from(DOM_EVENT_NAMES), min_size=1,
                          max_size=len(DOM_EVENT_NAMES), unique=True))
    entries = {}
    for name in names:
        entries[name] = draw(scroll_samples()) if name == "scroll" else 1
    return IntervalBucket(entries)


@st.composite
def valid_events(draw):
    base = dict(
        entity_id=draw(_identifiers),
        entity_type=draw(_identifiers),
        target_entity_id=draw(_identifiers),
        target_entity_type=draw(_identifiers),
        timestamp=draw(st.one_of(
            st.integers(min_value=1, max_value=2_000_000_000),
            st.floats(min_value=1.0, max_value=2e9, allow_nan=False),
        )),
        ip=draw(st.sampled_from(["", "10.0.0.1", "12.345.6.789", "2001:db8::1"])),
    )
    kind = draw(st.sampled_from(["engagement_report", "visible_impression_report", "other"]))
    if kind == "engagement_report":
        buckets = draw(st.lists(interval_buckets(), min_size=1, max_size=3))
        return Event(event_type="engagement_report",
                     properties={"report": buckets}, **base)
    if kind == "visible_impression_report":
        items = draw(st.lists(_identifiers, min_size=1, max_size=6, unique=True))
        return Event(event_type="visible_impression_report",
                     properties={"viewedItems": items}, **base)
    return Event(event_type=draw(_identifiers), properties=draw(_plain_properties), **base)


@settings(max_examples=200)
@given(valid_events())
def test_round_trip_identity(event):
    assert decode_event(encode_event(event)) == event

from __future__ import annotations

import pytest

from engage.events import Event, IntervalBucket, ScrollSample


def reference_buckets() -> list[IntervalBucket]:
    """The three 5-second intervals of the canonical wire example."""
    return [
        IntervalBucket({
            "scroll": ScrollSample(
                document_height=5000, screen_height=100, screen_width=980, scroll_top=300
            ),
            "mousemove": 1,
        }),
        IntervalBucket({"visibilitychange": 1}),
        IntervalBucket({
            "visibilitychange": 1,
            "mousemove": 1,
            "scroll": ScrollSample(
                document_height=5000, screen_height=100, screen_width=980, scroll_top=500
            ),
            "beforeunload": 1,
        }),
    ]


@pytest.fixture
def reference_report() -> Event:
    return Event(
        entity_id="1",
        entity_type="user",
        target_entity_id="10",
        target_entity_type="item",
        event_type="engagement_report",
        timestamp=1459535879,
        ip="12.345.6.789",
        properties={"report": reference_buckets()},
    )

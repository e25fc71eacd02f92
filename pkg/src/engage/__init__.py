"""User-engagement telemetry pipeline.

Collects browser event streams with a suppressing ping protocol, ingests
them through a queue/worker service into an append-only log, and mines
attention span, scrolling depth, and visible-impression CTR — plus a
deterministic session simulator that reproduces the method comparisons
at desk scale.
"""

from engage.events import (
    CLICK,
    DOM_EVENT_NAMES,
    ENGAGEMENT_REPORT,
    PAGE_LOAD,
    VISIBLE_IMPRESSION_REPORT,
    Event,
    IntervalBucket,
    ScrollSample,
    decode_event,
    encode_event,
    engagement_report,
    visible_impression_report,
)
from engage.ingest import EventQueue, RequestMeta, classify_traffic, drain
from engage.mining import (
    ComparisonReport,
    ItemFeatures,
    attention_scroll_correlation,
    attention_span,
    avg_scroll_depth,
    compare_methods,
    ctr,
    item_stats,
    scrolled,
)
from engage.pinging import PingCollector, SessionIdentity
from engage.simulate import (
    PROFILES,
    SessionProfile,
    generate_session,
    run_listing_exposure,
    run_pageload,
    run_pinging,
    simulate_events,
)
from engage.store import EventStore

__version__ = "0.1.0"

__all__ = [
    "CLICK",
    "DOM_EVENT_NAMES",
    "ENGAGEMENT_REPORT",
    "PAGE_LOAD",
    "VISIBLE_IMPRESSION_REPORT",
    "ComparisonReport",
    "Event",
    "EventQueue",
    "EventStore",
    "IntervalBucket",
    "ItemFeatures",
    "PROFILES",
    "PingCollector",
    "RequestMeta",
    "ScrollSample",
    "SessionIdentity",
    "SessionProfile",
    "attention_scroll_correlation",
    "attention_span",
    "avg_scroll_depth",
    "classify_traffic",
    "compare_methods",
    "ctr",
    "decode_event",
    "drain",
    "encode_event",
    "engagement_report",
    "generate_session",
    "item_stats",
    "run_listing_exposure",
    "run_pageload",
    "run_pinging",
    "scrolled",
    "simulate_events",
    "visible_impression_report",
]

"""Engagement feature mining over decoded event streams.

Three features come out of the stored log:

* attention span — 5 seconds per interval bucket: a user who triggers a
  DOM event is assumed engaged for the next 5 seconds, so a report of
  length n is worth 5n seconds and one report caps at 15;
* scrolling depth — the percentage of a document's height revealed,
  clamped at 100;
* visible-impression CTR — clicks over impressions that actually
  intersected the viewport, as a percentage.

All operations are pure over immutable inputs: replaying the same log
reproduces identical features.  Arithmetic stays in double precision;
rounding to two decimals (half-up) happens only at report boundaries.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Iterable, Mapping, Sequence

from engage.events import (
    CLICK,
    ENGAGEMENT_REPORT,
    MAX_REPORT_BUCKETS,
    PAGE_LOAD,
    VISIBLE_IMPRESSION_REPORT,
    Event,
    InvariantViolation,
    ScrollSample,
    report_buckets,
    viewed_items,
)

SECONDS_PER_BUCKET = 5.0


class NonPositiveDocumentHeight(ValueError):
    """Scrolling depth is undefined for a document of height <= 0."""


class NegativeInput(ValueError):
    """A count or pixel argument that must be non-negative was not."""


class NoScrollData(ValueError):
    """No report in the input carried a scroll sample (distinct from 0%)."""


class ZeroImpressions(ValueError):
    """CTR is undefined without impressions."""


class InsufficientData(ValueError):
    """Not enough data points to compute the requested statistic."""


class ZeroVariance(InsufficientData):
    """Pearson correlation is undefined when either variable is constant."""


class ZeroPingAttention(ValueError):
    """The method ratio is undefined when the ping method measured nothing."""


class ZeroPageLoadImpressions(ValueError):
    """Impression reduction is undefined without page-load impressions."""


def round_half_up(value: float, places: int = 2) -> float:
    """Presentation rounding: half-up at ``places`` decimals."""
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def attention_span(reports: Iterable[Event]) -> float:
    """Total engaged seconds for a report sequence: 5 x sum of report lengths."""
    total_buckets = 0
    for report in reports:
        buckets = report.properties.get("report")
        if not isinstance(buckets, list) or not 1 <= len(buckets) <= MAX_REPORT_BUCKETS:
            raise InvariantViolation(
                f"report length must be 1-{MAX_REPORT_BUCKETS}, "
                f"got {len(buckets) if isinstance(buckets, list) else buckets!r}",
                field="properties.report",
            )
        total_buckets += len(buckets)
    return SECONDS_PER_BUCKET * total_buckets


def scrolled(
    screen_height: float,
    max_scroll_top: float,
    document_height: float,
    *,
    content_height: float | None = None,
) -> float:
    """Percentage of the document revealed to the user, in (0, 100].

    ``content_height`` scopes the calculation to the main content element
    instead of the full document (headers and footers skew the metric).
    """
    if content_height is not None:
        document_height = content_height
    if document_height <= 0:
        raise NonPositiveDocumentHeight(f"document height {document_height!r}")
    if screen_height <= 0:
        raise NegativeInput(f"screen height must be > 0, got {screen_height!r}")
    if max_scroll_top < 0:
        raise NegativeInput(f"max scroll top must be >= 0, got {max_scroll_top!r}")
    total_scrolled = screen_height + max_scroll_top
    if total_scrolled > document_height:
        total_scrolled = document_height
    return total_scrolled * 100.0 / document_height


def _report_scroll_reduction(report: Event) -> ScrollSample | None:
    """One sample per report: max scroll_top across buckets, latest dimensions."""
    max_top: int | None = None
    latest: ScrollSample | None = None
    for bucket in report_buckets(report):
        sample = bucket.scroll
        if sample is not None:
            max_top = sample.scroll_top if max_top is None else max(max_top, sample.scroll_top)
            latest = sample
    if latest is None:
        return None
    return ScrollSample(
        document_height=latest.document_height,
        screen_height=latest.screen_height,
        screen_width=latest.screen_width,
        scroll_top=max_top if max_top is not None else latest.scroll_top,
    )


def avg_scroll_depth(reports: Iterable[Event]) -> float:
    """Mean scrolled() over the reports that carry at least one scroll sample.

    Reports without scroll samples signal attention, not shallow scrolling,
    so they are excluded from numerator and denominator alike.
    """
    values = []
    for report in reports:
        sample = _report_scroll_reduction(report)
        if sample is not None:
            values.append(
                scrolled(sample.screen_height, sample.scroll_top, sample.document_height)
            )
    if not values:
        raise NoScrollData("no report carries a scroll sample")
    return sum(values) / len(values)


def ctr(clicks: int, visible_impressions: int) -> float:
    """Click-through rate as a percentage, two decimals, half-up."""
    if visible_impressions <= 0:
        raise ZeroImpressions("CTR undefined for zero impressions")
    if clicks < 0:
        raise NegativeInput(f"clicks must be >= 0, got {clicks!r}")
    return round_half_up(clicks * 100.0 / visible_impressions)


@dataclass
class ItemFeatures:
    """Mined per-item aggregates."""

    item_id: str
    attention_seconds: float = 0.0
    attention_by_user: dict[str, float] = field(default_factory=dict)
    avg_scroll_depth_percent: float | None = None
    page_load_impressions: int = 0
    visible_impressions: int = 0
    clicks: int = 0
    ctr_percent: float = 0.0


def dedupe_events(events: Iterable[Event]) -> list[Event]:
    """Optional preprocessing: drop duplicate deliveries.

    The ingestion path is at-least-once, and the feature formulas are
    duplicate-sensitive; the key is (entityId, targetEntityId, timestamp,
    eventType), first delivery wins.
    """
    seen = set()
    unique = []
    for event in events:
        key = (event.entity_id, event.target_entity_id, event.timestamp, event.event_type)
        if key not in seen:
            seen.add(key)
            unique.append(event)
    return unique


def item_stats(
    events: Iterable[Event],
    *,
    deduplicate: bool = False,
    on_error: Callable[[str, Exception], None] | None = None,
) -> dict[str, ItemFeatures]:
    """Aggregate per-item features from a decoded event stream.

    Engagement reports feed attention and scroll depth; ``click`` events
    (single item views) feed clicks; listing ``page_load`` events feed
    page-load impressions via their ``shownItems``; visible-impression
    reports feed viewed impressions.  Invalid reports are handed to
    ``on_error`` per item when given, otherwise raised.
    """
    if deduplicate:
        events = dedupe_events(events)
    features: dict[str, ItemFeatures] = {}
    reports_by_item: dict[str, list[Event]] = defaultdict(list)

    def feat(item_id: str) -> ItemFeatures:
        if item_id not in features:
            features[item_id] = ItemFeatures(item_id)
        return features[item_id]

    for event in events:
        if event.event_type == ENGAGEMENT_REPORT:
            item_id = event.target_entity_id
            try:
                seconds = attention_span([event])
            except InvariantViolation as exc:
                if on_error is None:
                    raise
                on_error(item_id, exc)
                continue
            f = feat(item_id)
            f.attention_seconds += seconds
            f.attention_by_user[event.entity_id] = (
                f.attention_by_user.get(event.entity_id, 0.0) + seconds
            )
            reports_by_item[item_id].append(event)
        elif event.event_type == CLICK:
            feat(event.target_entity_id).clicks += 1
        elif event.event_type == PAGE_LOAD:
            shown = event.properties.get("shownItems")
            if isinstance(shown, list):
                for item_id in shown:
                    if isinstance(item_id, str):
                        feat(item_id).page_load_impressions += 1
        elif event.event_type == VISIBLE_IMPRESSION_REPORT:
            try:
                items = viewed_items(event)
            except Exception as exc:  # propagate unless tallied
                if on_error is None:
                    raise
                on_error(event.target_entity_id, exc)
                continue
            for item_id in items:
                feat(item_id).visible_impressions += 1

    for item_id, reports in reports_by_item.items():
        try:
            features[item_id].avg_scroll_depth_percent = avg_scroll_depth(reports)
        except NoScrollData:
            features[item_id].avg_scroll_depth_percent = None
    for f in features.values():
        f.ctr_percent = ctr(f.clicks, f.visible_impressions) if f.visible_impressions > 0 else 0.0
    return features


def fleet_mean_attention(features: Mapping[str, ItemFeatures]) -> float:
    """Average attention span per item across the whole feature table."""
    if not features:
        raise InsufficientData("no items")
    return sum(f.attention_seconds for f in features.values()) / len(features)


@dataclass(frozen=True)
class CorrelationResult:
    """Percentile curve plus the Pearson coefficient of the raw pairs."""

    curve: tuple[tuple[float, float], ...]
    pearson: float


def _pearson(pairs: Sequence[tuple[float, float]]) -> float:
    n = len(pairs)
    mean_x = sum(x for x, _ in pairs) / n
    mean_y = sum(y for _, y in pairs) / n
    sxx = sum((x - mean_x) ** 2 for x, _ in pairs)
    syy = sum((y - mean_y) ** 2 for _, y in pairs)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("a constant variable has no correlation")
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in pairs)
    return sxy / math.sqrt(sxx * syy)


PERCENTILE_BINS = 20


def attention_scroll_correlation(
    features: Mapping[str, ItemFeatures],
) -> CorrelationResult:
    """Relate time spent to depth scrolled across items.

    Items are sorted by attention and split into 20 percentile bins; each
    point is (upper percentile bound, mean scroll depth of the bin).  The
    Pearson coefficient is computed on the raw (attention, depth) pairs.
    """
    pairs = sorted(
        (f.attention_seconds, f.avg_scroll_depth_percent)
        for f in features.values()
        if f.avg_scroll_depth_percent is not None and f.attention_seconds > 0
    )
    if len(pairs) < 2:
        raise InsufficientData(f"need >= 2 items with attention and depth, got {len(pairs)}")
    pearson = _pearson(pairs)
    n = len(pairs)
    curve = []
    for i in range(PERCENTILE_BINS):
        lo = i * n // PERCENTILE_BINS
        hi = (i + 1) * n // PERCENTILE_BINS
        if hi > lo:
            depth = sum(y for _, y in pairs[lo:hi]) / (hi - lo)
            curve.append(((i + 1) * 100.0 / PERCENTILE_BINS, depth))
    return CorrelationResult(curve=tuple(curve), pearson=pearson)


@dataclass(frozen=True)
class ComparisonReport:
    """Side-by-side of the page-load and pinging collection methods."""

    page_load_attention_seconds: float
    ping_attention_seconds: float
    attention_ratio: float | None
    page_load_impressions: int
    visible_impressions: int
    impression_reduction_percent: float | None
    clicks: int
    ctr_page_load: float | None
    ctr_visible: float | None

    def to_dict(self) -> dict[str, float | int | None]:
        def r2(value: float | None) -> float | None:
            return None if value is None else round_half_up(value)

        return {
            "pageLoadAttentionSeconds": round_half_up(self.page_load_attention_seconds),
            "pingAttentionSeconds": round_half_up(self.ping_attention_seconds),
            "attentionRatio": None if self.attention_ratio is None else round_half_up(self.attention_ratio, 3),
            "pageLoadImpressions": self.page_load_impressions,
            "visibleImpressions": self.visible_impressions,
            "impressionReductionPercent": r2(self.impression_reduction_percent),
            "clicks": self.clicks,
            "ctrPageLoad": r2(self.ctr_page_load),
            "ctrVisible": r2(self.ctr_visible),
        }


def compare_methods(
    page_load_events: Iterable[Event],
    ping_reports: Iterable[Event],
    visibility_reports: Iterable[Event],
) -> ComparisonReport:
    """Compare what the two collection methods measure on the same sessions.

    Page-load attention is the sum of differences between consecutive
    page-load timestamps per session (the final page is unmeasurable and
    contributes zero); ping attention is the 5-seconds-per-bucket total.
    Impressions compare every item laid out per listing load against the
    items actually seen.
    """
    page_load_events = list(page_load_events)
    ping_reports = list(ping_reports)
    visibility_reports = list(visibility_reports)
    if not page_load_events and not ping_reports and not visibility_reports:
        raise InsufficientData("no events to compare")

    loads_by_session: dict[str, list[float]] = defaultdict(list)
    clicks = 0
    page_load_impressions = 0
    for event in page_load_events:
        if event.event_type == PAGE_LOAD:
            loads_by_session[event.entity_id].append(event.timestamp)
            shown = event.properties.get("shownItems")
            if isinstance(shown, list):
                page_load_impressions += len(shown)
        elif event.event_type == CLICK:
            clicks += 1
    page_load_attention = 0.0
    for timestamps in loads_by_session.values():
        timestamps.sort()
        page_load_attention += timestamps[-1] - timestamps[0]

    ping_attention = attention_span(ping_reports)

    if ping_attention == 0.0:
        if page_load_attention > 0.0:
            raise ZeroPingAttention("ping method measured zero attention")
        attention_ratio = None
    else:
        attention_ratio = page_load_attention / ping_attention

    visible = sum(len(viewed_items(r)) for r in visibility_reports)
    if page_load_impressions == 0:
        if visible > 0:
            raise ZeroPageLoadImpressions("visible impressions without page-load impressions")
        reduction = None
    else:
        reduction = (page_load_impressions - visible) * 100.0 / page_load_impressions

    return ComparisonReport(
        page_load_attention_seconds=page_load_attention,
        ping_attention_seconds=ping_attention,
        attention_ratio=attention_ratio,
        page_load_impressions=page_load_impressions,
        visible_impressions=visible,
        impression_reduction_percent=reduction,
        clicks=clicks,
        ctr_page_load=ctr(clicks, page_load_impressions) if page_load_impressions > 0 else None,
        ctr_visible=ctr(clicks, visible) if visible > 0 else None,
    )

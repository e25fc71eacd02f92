import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from engage.events import (
    Event,
    IntervalBucket,
    InvariantViolation,
    ScrollSample,
    engagement_report,
    visible_impression_report,
)
from engage.mining import (
    ComparisonReport,
    InsufficientData,
    NegativeInput,
    NonPositiveDocumentHeight,
    NoScrollData,
    ZeroImpressions,
    ZeroPageLoadImpressions,
    ZeroPingAttention,
    ZeroVariance,
    attention_scroll_correlation,
    attention_span,
    avg_scroll_depth,
    compare_methods,
    ctr,
    dedupe_events,
    fleet_mean_attention,
    item_stats,
    scrolled,
)
from engage.mining import ItemFeatures
from tests.test_store import make_event


def report_of(lengths_or_buckets, *, user="u1", item="i1", ts=1000.0):
    if isinstance(lengths_or_buckets, int):
        buckets = [IntervalBucket({"mousemove": 1}) for _ in range(lengths_or_buckets)]
    else:
        buckets = lengths_or_buckets
    return engagement_report(entity_id=user, target_entity_id=item,
                             ip="10.0.0.1", timestamp=ts, buckets=buckets)


def scroll_bucket(scroll_top, document_height=5000, screen_height=100):
    return IntervalBucket({"scroll": ScrollSample(
        document_height=document_height, screen_height=screen_height,
        screen_width=980, scroll_top=scroll_top)})


class TestAttentionSpan:
    def test_empty_sum(self):
        assert attention_span([]) == 0

    def test_three_full_reports(self):
        assert attention_span([report_of(3), report_of(3), report_of(3)]) == 45

    def test_reference_report_is_fifteen_seconds(self, reference_report):
        assert attention_span([reference_report]) == 15

    def test_out_of_range_length_rejected(self):
        bad = Event(entity_id="u", entity_type="user", target_entity_id="i",
                    target_entity_type="item", event_type="engagement_report",
                    timestamp=1.0, ip="", properties={"report": []})
        with pytest.raises(InvariantViolation):
            attention_span([bad])

    @given(st.lists(st.integers(1, 3), max_size=8), st.lists(st.integers(1, 3), max_size=8))
    def test_linearity(self, lengths_a, lengths_b):
        a = [report_of(n) for n in lengths_a]
        b = [report_of(n) for n in lengths_b]
        assert attention_span(a + b) == attention_span(a) + attention_span(b)
        assert all(attention_span([r]) in (5, 10, 15) for r in a + b)


class TestScrolled:
    def test_reference_first_sample(self):
        assert scrolled(100, 300, 5000) == 8.0

    def test_reference_second_sample(self):
        assert scrolled(100, 500, 5000) == 12.0

    def test_clamp_branch(self):
        assert scrolled(800, 4500, 5000) == 100.0

    def test_content_height_override(self):
        assert scrolled(100, 300, 5000, content_height=800) == 50.0

    def test_errors(self):
        with pytest.raises(NonPositiveDocumentHeight):
            scrolled(100, 300, 0)
        with pytest.raises(NegativeInput):
            scrolled(0, 300, 5000)
        with pytest.raises(NegativeInput):
            scrolled(100, -1, 5000)

    def test_range_and_monotonicity_sweep(self):
        rng = random.Random(2024)
        for _ in range(2000):
            sh = rng.randint(1, 4000)
            dh = rng.randint(1, 100_000)
            a, b = sorted((rng.randint(0, 120_000), rng.randint(0, 120_000)))
            low, high = scrolled(sh, a, dh), scrolled(sh, b, dh)
            assert 0.0 < low <= 100.0
            assert low <= high
            assert (high == 100.0) == (sh + b >= dh)


class TestAvgScrollDepth:
    def test_per_report_max_and_latest_dimensions(self, reference_report):
        # buckets carry scroll_top 300 then 500 on a 5000px document
        assert avg_scroll_depth([reference_report]) == 12.0

    def test_mean_of_two_reports(self):
        r1 = report_of([scroll_bucket(300)])   # 8.0
        r2 = report_of([scroll_bucket(500)])   # 12.0
        assert avg_scroll_depth([r1, r2]) == 10.0

    def test_reports_without_scroll_are_excluded(self):
        r1 = report_of([scroll_bucket(300)])
        r2 = report_of(2)
        assert avg_scroll_depth([r1, r2]) == 8.0

    def test_no_scroll_data_is_distinct_from_zero(self):
        with pytest.raises(NoScrollData):
            avg_scroll_depth([report_of(1)])


class TestCtr:
    @pytest.mark.parametrize("clicks,impressions,expected", [
        (119, 506, 23.52),
        (35, 506, 6.92),
        (119, 2024, 5.88),
        (35, 2024, 1.73),
        (0, 100, 0.00),
        (1, 2, 50.00),
    ])
    def test_two_decimal_half_up(self, clicks, impressions, expected):
        assert ctr(clicks, impressions) == expected

    def test_zero_impressions(self):
        with pytest.raises(ZeroImpressions):
            ctr(5, 0)

    def test_scale_free_up_to_rounding(self):
        for k in (2, 3, 10):
            assert abs(ctr(7 * k, 93 * k) - ctr(7, 93)) <= 0.01


class TestItemStats:
    def test_empty_log(self):
        assert item_stats([]) == {}

    def test_reference_report_mines_attention_for_item_ten(self, reference_report):
        features = item_stats([reference_report])
        assert features["10"].attention_seconds == 15
        assert features["10"].attention_by_user == {"1": 15}
        assert features["10"].avg_scroll_depth_percent == 12.0

    def test_ctr_from_visibility_and_clicks(self):
        events = [
            visible_impression_report(entity_id="u1", target_entity_id="l1",
                                      ip="", timestamp=10.0, viewed_items=["A"]),
            visible_impression_report(entity_id="u2", target_entity_id="l1",
                                      ip="", timestamp=20.0, viewed_items=["A"]),
            make_event(entity="u1", target="A", event_type="click", ts=11.0),
        ]
        features = item_stats(events)
        assert features["A"].visible_impressions == 2
        assert features["A"].clicks == 1
        assert features["A"].ctr_percent == 50.00

    def test_page_load_impressions_from_shown_items(self):
        listing = make_event(entity="u1", target="l1", event_type="page_load",
                             shownItems=["A", "B"])
        features = item_stats([listing])
        assert features["A"].page_load_impressions == 1
        assert features["B"].page_load_impressions == 1

    def test_bad_report_goes_to_error_tally(self):
        bad = Event(entity_id="u", entity_type="user", target_entity_id="i9",
                    target_entity_type="item", event_type="engagement_report",
                    timestamp=1.0, ip="", properties={"report": []})
        errors = []
        features = item_stats([bad], on_error=lambda item, exc: errors.append(item))
        assert errors == ["i9"]
        assert "i9" not in features

    def test_dedupe_pass(self):
        event = make_event()
        assert len(dedupe_events([event, event])) == 1

    def test_fleet_mean(self):
        features = {f"i{k}": ItemFeatures(f"i{k}", attention_seconds=10.0 + k)
                    for k in range(3)}
        assert fleet_mean_attention(features) == 11.0


class TestCorrelation:
    def features_from_pairs(self, pairs):
        return {
            f"i{k}": ItemFeatures(f"i{k}", attention_seconds=a, avg_scroll_depth_percent=d)
            for k, (a, d) in enumerate(pairs)
        }

    def test_exact_linear_relation(self):
        result = attention_scroll_correlation(
            self.features_from_pairs([(10, 20), (20, 40), (30, 60)])
        )
        assert result.pearson == pytest.approx(1.0, abs=1e-12)

    def test_zero_variance(self):
        with pytest.raises(ZeroVariance):
            attention_scroll_correlation(
                self.features_from_pairs([(10, 20), (10, 20), (10, 20)])
            )

    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            attention_scroll_correlation(self.features_from_pairs([(10, 20)]))

    def test_twenty_bins(self):
        pairs = [(float(k), float(k)) for k in range(1, 101)]
        result = attention_scroll_correlation(self.features_from_pairs(pairs))
        assert len(result.curve) == 20
        assert result.curve[0] == (5.0, 3.0)
        assert result.curve[-1] == (100.0, 98.0)


def page_load(user, page, ts, shown=None):
    props = {"shownItems": shown} if shown is not None else {}
    return Event(entity_id=user, entity_type="user", target_entity_id=page,
                 target_entity_type="listing" if shown else "item",
                 event_type="page_load", timestamp=ts, ip="", properties=props)


class TestCompareMethods:
    def test_field_scale_attention_totals(self):
        loads = [page_load("ga", "p1", 1_459_500_000.0),
                 page_load("ga", "p2", 1_459_500_000.0 + 76_008.0)]
        reports = [report_of(3, ts=1000.0 + k) for k in range(1453)] + [report_of(2)]
        assert attention_span(reports) == 21_805
        result = compare_methods(loads, reports, [])
        assert result.page_load_attention_seconds == 76_008
        assert result.attention_ratio == pytest.approx(3.48, abs=0.01)

    def test_field_scale_impression_counts(self):
        loads = [page_load("imp", "l1", 1000.0, shown=[f"x{k}" for k in range(30)])
                 for _ in range(883)]
        assert sum(len(e.properties["shownItems"]) for e in loads) == 26_490
        visibility = [
            visible_impression_report(entity_id="imp", target_entity_id="l1", ip="",
                                      timestamp=1000.0,
                                      viewed_items=[f"x{k}" for k in range(20)])
            for _ in range(882)
        ] + [visible_impression_report(entity_id="imp", target_entity_id="l1", ip="",
                                       timestamp=1000.0,
                                       viewed_items=[f"x{k}" for k in range(10)])]
        result = compare_methods(loads, [report_of(1)], visibility)
        assert result.visible_impressions == 17_650
        assert result.impression_reduction_percent == pytest.approx(33.37, abs=0.01)

    def test_zero_idle_sessions_ratio_near_one(self):
        # 20 back-to-back 15s pages per session, events in every interval:
        # the page-load method misses exactly the final page's window.
        sessions = 5
        loads, reports = [], []
        for s in range(sessions):
            t0 = 1000.0 + s * 10_000.0
            for p in range(20):
                loads.append(page_load(f"u{s}", f"p{p}", t0 + 15.0 * p))
                reports.append(report_of(3, user=f"u{s}", item=f"p{p}", ts=t0 + 15.0 * (p + 1)))
        result = compare_methods(loads, reports, [])
        ping = result.ping_attention_seconds
        assert ping == 15.0 * 20 * sessions
        assert abs(result.page_load_attention_seconds - ping) <= 15.0 * sessions
        assert abs(result.attention_ratio - 1.0) <= 15.0 * sessions / ping + 1e-12

    def test_zero_ping_attention(self):
        with pytest.raises(ZeroPingAttention):
            compare_methods([page_load("u", "a", 10.0), page_load("u", "b", 20.0)], [], [])

    def test_visible_without_page_load_impressions(self):
        visibility = [visible_impression_report(entity_id="u", target_entity_id="l",
                                                ip="", timestamp=5.0, viewed_items=["A"])]
        with pytest.raises(ZeroPageLoadImpressions):
            compare_methods([], [report_of(1)], visibility)

    def test_no_events_is_insufficient(self):
        with pytest.raises(InsufficientData):
            compare_methods([], [], [])

    def test_ctr_direction_for_equal_clicks(self):
        loads = [page_load("u", "l1", 10.0, shown=["A", "B", "C", "D"])]
        clicks = [make_event(entity="u", target="A", event_type="click", ts=11.0)]
        visibility = [visible_impression_report(entity_id="u", target_entity_id="l1",
                                                ip="", timestamp=15.0, viewed_items=["A", "B"])]
        result = compare_methods(loads + clicks, [report_of(1)], visibility)
        assert result.ctr_visible >= result.ctr_page_load
        assert result.to_dict()["ctrVisible"] == 50.0

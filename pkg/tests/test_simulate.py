import json

import pytest

from engage.events import ENGAGEMENT_REPORT, VISIBLE_IMPRESSION_REPORT, encode_event
from engage.mining import attention_span
from engage.simulate import (
    ITEM_KIND,
    LISTING_KIND,
    PROFILES,
    InvalidLayout,
    InvalidProfile,
    InvalidTimeline,
    ItemSlot,
    ListingLayout,
    PageVisit,
    SessionProfile,
    SessionTimeline,
    TimelineEvent,
    generate_session,
    load_profile,
    run_listing_exposure,
    run_pageload,
    run_pinging,
    session_events,
    visible_in_viewport,
)


def continuous_item_timeline(dwell: float, cadence: float = 1.0,
                             idle_after: float = 0.0, user="u1", item="i1"):
    """One item page with an event every ``cadence`` seconds for ``dwell`` seconds.

    The page ends by plain navigation (no beforeunload event), matching a
    by-hand interval enumeration of the activity alone.
    """
    t0 = 1000.0
    events = [TimelineEvent(t0, "DOMContentLoaded")]
    t = t0 + cadence
    while t < t0 + dwell:
        events.append(TimelineEvent(t, "mousemove"))
        t += cadence
    end = t0 + dwell + idle_after
    page = PageVisit(page_id=item, kind=ITEM_KIND, loaded_at=t0, ends_at=end,
                     events=tuple(events))
    return SessionTimeline(user_id=user, ip="10.0.0.1", is_bot=False, pages=(page,))


class TestGenerateSession:
    def test_identical_seed_identical_timeline(self):
        assert generate_session(PROFILES["coupled"], 7, 3) == \
            generate_session(PROFILES["coupled"], 7, 3)

    def test_adding_sessions_never_perturbs_existing_ones(self):
        first_of_five = generate_session(PROFILES["coupled"], 11, 2)
        # generating more sessions reuses the same per-index streams
        assert generate_session(PROFILES["coupled"], 11, 2) == first_of_five

    def test_bot_profile_emits_page_loads_only(self):
        timeline = generate_session(PROFILES["bot"], 7, 0)
        assert timeline.is_bot
        assert all(page.events == () for page in timeline.pages)
        assert run_pinging(timeline) == []

    def test_human_pages_end_with_beforeunload(self):
        timeline = generate_session(PROFILES["coupled"], 7, 1)
        collected = [p for p in timeline.pages if p.kind in (ITEM_KIND, LISTING_KIND)]
        assert collected
        for page in collected:
            assert page.events[-1].name == "beforeunload"

    def test_session_leaves_through_a_terminal_page(self):
        timeline = generate_session(PROFILES["coupled"], 7, 1)
        assert timeline.pages[-1].kind == "exit"
        assert timeline.pages[-1].events == ()

    def test_scroll_offsets_rise_monotonically(self):
        timeline = generate_session(PROFILES["coupled"], 7, 2)
        for page in timeline.pages:
            tops = [e.scroll.scroll_top for e in page.events if e.scroll is not None]
            assert tops == sorted(tops)

    def test_invalid_profile_rejected(self):
        with pytest.raises(InvalidProfile):
            SessionProfile(scroll_propensity=1.5).validate()
        with pytest.raises(InvalidProfile):
            SessionProfile(idle_gap_seconds=(-1.0, 0.5)).validate()

    def test_timeline_validation_catches_regressions(self):
        page = PageVisit(page_id="i1", kind=ITEM_KIND, loaded_at=100.0, ends_at=90.0)
        with pytest.raises(InvalidTimeline):
            SessionTimeline(user_id="u", ip="", is_bot=False, pages=(page,)).validate()


class TestRunPinging:
    def test_thirty_seconds_of_activity_is_two_full_reports(self):
        timeline = continuous_item_timeline(30.0)
        reports = [e for e in run_pinging(timeline) if e.event_type == ENGAGEMENT_REPORT]
        # 6 occupied intervals batched as two reports of length 3
        assert [len(r.properties["report"]) for r in reports] == [3, 3]
        assert attention_span(reports) == 30.0

    def test_idle_tail_is_invisible_to_the_ping_method(self):
        timeline = continuous_item_timeline(10.0, idle_after=290.0)
        reports = [e for e in run_pinging(timeline) if e.event_type == ENGAGEMENT_REPORT]
        # activity touches intervals 0 and 1; the idle tail contributes nothing
        assert [len(r.properties["report"]) for r in reports] == [2]
        assert attention_span(reports) == 10.0

    def test_dom_events_in_every_interval_of_a_continuous_burst(self):
        timeline = continuous_item_timeline(30.0)
        page = timeline.pages[0]
        occupied = {int((e.at - page.loaded_at) // 5.0) for e in page.events}
        assert occupied == set(range(6))


class TestRunPageload:
    def test_dwell_is_gap_between_consecutive_loads(self):
        profile = PROFILES["coupled"]
        timeline = generate_session(profile, 7, 0)
        result = run_pageload(timeline)
        for i in range(len(timeline.pages) - 1):
            assert result.dwell_seconds[i] == (
                timeline.pages[i + 1].loaded_at - timeline.pages[i].loaded_at
            )

    def test_final_page_dwell_is_zero(self):
        timeline = continuous_item_timeline(42.0)
        result = run_pageload(timeline)
        assert result.dwell_seconds == (0.0,)

    def test_idle_heavy_session_inflates_pageload_dwell(self):
        timeline = continuous_item_timeline(10.0, idle_after=290.0)
        second = PageVisit(page_id="i2", kind=ITEM_KIND, loaded_at=1300.0, ends_at=1310.0,
                           events=(TimelineEvent(1300.0, "DOMContentLoaded"),
                                   TimelineEvent(1310.0, "beforeunload")))
        timeline = SessionTimeline(user_id="u1", ip="10.0.0.1", is_bot=False,
                                   pages=(timeline.pages[0], second))
        dwell = run_pageload(timeline).dwell_seconds[0]
        attention = attention_span(
            [e for e in run_pinging(timeline) if e.event_type == ENGAGEMENT_REPORT
             and e.target_entity_id == "i1"]
        )
        assert dwell == 300.0
        assert attention == 10.0
        assert dwell / attention == 30.0


def listing_timeline(scroll_tops, screen_height=800, n_items=10, item_height=200,
                     dwell=30.0):
    t0 = 1000.0
    layout = ListingLayout(tuple(
        ItemSlot(f"a{k}", k * item_height, (k + 1) * item_height) for k in range(n_items)
    ))
    events = [TimelineEvent(t0, "DOMContentLoaded")]
    for i, top in enumerate(scroll_tops, start=1):
        from engage.events import ScrollSample
        events.append(TimelineEvent(t0 + i * 1.0, "scroll", ScrollSample(
            document_height=n_items * item_height, screen_height=screen_height,
            screen_width=1200, scroll_top=top)))
    events.append(TimelineEvent(t0 + dwell, "beforeunload"))
    page = PageVisit(page_id="list-1", kind=LISTING_KIND, loaded_at=t0,
                     ends_at=t0 + dwell, events=tuple(events), layout=layout,
                     screen_height=screen_height)
    return SessionTimeline(user_id="u1", ip="10.0.0.1", is_bot=False, pages=(page,))


class TestListingExposure:
    def test_never_scrolls_sees_only_initial_viewport(self):
        timeline = listing_timeline([])
        result = run_listing_exposure(timeline)
        assert result.page_load_impressions == 10
        viewed = [i for r in result.visibility_reports for i in r.properties["viewedItems"]]
        assert viewed == ["a0", "a1", "a2", "a3"]

    def test_scrolling_to_the_bottom_sees_everything(self):
        timeline = listing_timeline([400, 900, 1200])
        result = run_listing_exposure(timeline)
        viewed = {i for r in result.visibility_reports for i in r.properties["viewedItems"]}
        assert viewed == {f"a{k}" for k in range(10)}

    def test_visible_never_exceeds_page_load(self):
        for index in range(20):
            timeline = generate_session(PROFILES["mixed"], 3, index)
            result = run_listing_exposure(timeline)
            viewed = sum(len(r.properties["viewedItems"]) for r in result.visibility_reports)
            assert viewed <= result.page_load_impressions

    def test_layout_override_and_validation(self):
        timeline = listing_timeline([])
        bad = ListingLayout((ItemSlot("x", 100, 100),))
        with pytest.raises(InvalidLayout):
            run_listing_exposure(timeline, bad)

    def test_viewport_intersection_is_half_open(self):
        layout = ListingLayout((ItemSlot("a", 0, 200), ItemSlot("b", 200, 400)))
        assert visible_in_viewport(layout, 0, 200) == ["a"]
        assert visible_in_viewport(layout, 199, 200) == ["a", "b"]
        assert visible_in_viewport(layout, 200, 200) == ["b"]


class TestSessionEvents:
    def test_bot_session_contributes_only_page_loads(self):
        timeline = generate_session(PROFILES["bot"], 7, 0)
        kinds = {e.event_type for e in session_events(timeline)}
        assert kinds == {"page_load"}

    def test_click_per_item_view(self):
        timeline = generate_session(PROFILES["coupled"], 7, 0)
        events = session_events(timeline)
        clicks = [e for e in events if e.event_type == "click"]
        item_pages = [p for p in timeline.pages if p.kind == ITEM_KIND]
        assert len(clicks) == len(item_pages)

    def test_stream_is_time_ordered_and_encodable(self):
        timeline = generate_session(PROFILES["coupled"], 7, 4)
        events = session_events(timeline)
        stamps = [e.timestamp for e in events]
        assert stamps == sorted(stamps)
        for event in events:
            encode_event(event)


class TestProfiles:
    def test_load_builtin(self):
        assert load_profile("idle-heavy").name == "idle-heavy"

    def test_unknown_name(self):
        with pytest.raises(InvalidProfile):
            load_profile("no-such-profile")

    def test_json_profile_overrides_base(self, tmp_path):
        path = tmp_path / "custom.json"
        path.write_text(json.dumps({
            "base": "coupled", "name": "custom", "catalog_size": 12,
            "listing_depth": [0.5, 0.6],
        }))
        profile = load_profile(str(path))
        assert profile.catalog_size == 12
        assert profile.listing_depth == (0.5, 0.6)
        assert profile.engagement_scroll_coupling == PROFILES["coupled"].engagement_scroll_coupling

    def test_json_profile_rejects_unknown_field(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"definitely_not_a_field": 1}))
        with pytest.raises(InvalidProfile):
            load_profile(str(path))

    def test_half_bot_mix(self):
        timelines = [generate_session(PROFILES["half-bot"], 7, i) for i in range(80)]
        bots = sum(t.is_bot for t in timelines)
        assert 25 <= bots <= 55

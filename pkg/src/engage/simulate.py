"""Deterministic synthetic browsing sessions for desk-scale method studies.

A session is a listing page view followed by a handful of item page
views.  Human profiles interleave active bursts (mousemove / keydown /
scroll at ~1s cadence, scroll offset rising monotonically toward a depth
coupled to the item's appeal) with idle gaps carrying no events, and end
every page with a beforeunload.  Bot profiles emit page-load markers
only — crawlers never execute the collector script.

Determinism: each session draws from its own stream seeded by
``f"{seed}:{index}"``, so adding sessions never perturbs existing ones,
and identical (profile, seed) inputs reproduce byte-identical logs.
Every generated timestamp is quantized to a 0.25-second grid; quarter
seconds are exact in doubles, which keeps 5-second interval bookkeeping
free of float-boundary surprises.

Replays drive the page-load method (one event per load, dwell = gap to
the next load) and the pinging machine (one collector per page view)
over the same timeline, which is what makes the method comparisons
reproducible.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

from engage.events import CLICK, PAGE_LOAD, Event, ScrollSample, encode_event
from engage.pinging import PingCollector, SessionIdentity

BASE_EPOCH = 1_459_500_000.0  # virtual-clock origin; simulations never read wall time
SESSION_STAGGER_SECONDS = 13.0
TICK_SECONDS = 5.0
ITEM_KIND = "item"
LISTING_KIND = "listing"
EXIT_KIND = "exit"  # terminal navigation target; the collector ignores it


class InvalidProfile(ValueError):
    """A profile field is out of range."""


class InvalidLayout(ValueError):
    """A listing layout with overlapping ids or non-positive extents."""


class InvalidTimeline(ValueError):
    """Timeline ordering or containment invariants do not hold."""


def _q(seconds: float) -> float:
    """Quantize a duration/offset to the 0.25s grid (minimum one step)."""
    return max(0.25, round(seconds * 4.0) / 4.0)


def item_appeal(item_id: str) -> float:
    """Stable per-item appeal in [0, 1), derived from the identifier."""
    digest = hashlib.sha256(item_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") / 2**32


@dataclass(frozen=True)
class SessionProfile:
    """Distribution parameters shaping synthetic sessions.

    Durations are log-normal (given as median seconds and sigma), item
    views per session are geometric.  ``engagement_scroll_coupling`` links
    an item's appeal — which also drives dwell — to the final scroll depth,
    which is what produces the attention/scroll correlation.
    """

    name: str = "custom"
    active_burst_seconds: tuple[float, float] = (8.0, 0.6)
    idle_gap_seconds: tuple[float, float] = (12.0, 0.7)
    bursts_per_page: tuple[int, int] = (1, 3)
    pages_per_session: float = 3.0
    max_pages_per_session: int = 8
    scroll_propensity: float = 0.85
    engagement_scroll_coupling: float = 0.9
    depth_floor: float = 0.12
    depth_noise: float = 0.03
    dwell_appeal_gain: tuple[float, float] = (0.6, 0.9)
    document_height: tuple[int, int] = (3000, 9000)
    screen_height: tuple[int, int] = (640, 1080)
    screen_width: tuple[int, int] = (360, 1920)
    catalog_size: int = 150
    listing_item_count: int = 24
    listing_slot_height: tuple[int, int] = (220, 320)
    listing_depth: tuple[float, float] = (0.2, 0.9)
    listing_dwell_seconds: tuple[float, float] = (12.0, 0.5)
    event_cadence_seconds: float = 1.25
    bot_fraction: float = 0.0
    is_bot: bool = False

    def validate(self) -> None:
        for name in ("scroll_propensity", "engagement_scroll_coupling", "bot_fraction",
                     "depth_floor", "depth_noise"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidProfile(f"{name} must be in [0, 1], got {value!r}")
        for name in ("active_burst_seconds", "idle_gap_seconds", "listing_dwell_seconds"):
            median, sigma = getattr(self, name)
            if median < 0 or sigma < 0:
                raise InvalidProfile(f"{name} durations must be >= 0")
        for name in ("document_height", "screen_height", "screen_width",
                     "listing_slot_height", "bursts_per_page", "listing_depth"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InvalidProfile(f"{name} range is inverted")
        if self.screen_height[0] <= 0 or self.screen_width[0] <= 0:
            raise InvalidProfile("screen dimensions must be positive")
        if self.listing_depth[0] < 0 or self.listing_depth[1] > 1:
            raise InvalidProfile("listing_depth fractions must be in [0, 1]")
        if self.pages_per_session < 1 or self.max_pages_per_session < 1:
            raise InvalidProfile("pages per session must be >= 1")
        if self.dwell_appeal_gain[0] < 0 or self.dwell_appeal_gain[1] < 0:
            raise InvalidProfile("dwell_appeal_gain components must be >= 0")
        if self.catalog_size < 1 or self.listing_item_count < 1:
            raise InvalidProfile("catalog and listing sizes must be >= 1")
        if self.event_cadence_seconds <= 0:
            raise InvalidProfile("event cadence must be > 0")


PROFILES: dict[str, SessionProfile] = {
    # Strong dwell/scroll coupling; the correlation study profile.
    "coupled": SessionProfile(
        name="coupled",
        active_burst_seconds=(8.0, 0.3),
        dwell_appeal_gain=(0.5, 1.2),
        pages_per_session=3.5,
        catalog_size=300,
    ),
    # Idle-dominant dwell, calibrated so page-load dwell inflates well past
    # ping attention (brackets the field-observed ratio).
    "idle-heavy": SessionProfile(
        name="idle-heavy",
        active_burst_seconds=(5.0, 0.5),
        idle_gap_seconds=(30.0, 0.6),
        bursts_per_page=(1, 2),
        pages_per_session=4.0,
        scroll_propensity=0.7,
    ),
    # Mixed scrolling population; tuned so roughly half the laid-out items
    # are never seen.
    "mixed": SessionProfile(
        name="mixed",
        listing_depth=(0.12, 0.97),
        listing_item_count=30,
        pages_per_session=2.5,
    ),
    "bot": SessionProfile(name="bot", is_bot=True),
    # Half the sessions are crawlers; the filtering study profile.
    "half-bot": SessionProfile(name="half-bot", bot_fraction=0.5),
}

_TUPLE_FIELDS = {
    "active_burst_seconds", "idle_gap_seconds", "bursts_per_page",
    "document_height", "screen_height", "screen_width",
    "listing_slot_height", "listing_depth", "listing_dwell_seconds",
    "dwell_appeal_gain",
}


def load_profile(name_or_path: str) -> SessionProfile:
    """Resolve a built-in profile name or load a JSON profile file.

    A JSON profile may set ``base`` to a built-in name and override any
    subset of fields.
    """
    if name_or_path in PROFILES:
        return PROFILES[name_or_path]
    path = Path(name_or_path)
    if not path.is_file():
        raise InvalidProfile(
            f"unknown profile {name_or_path!r}; built-ins: {sorted(PROFILES)}"
        )
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise InvalidProfile("profile file must hold a JSON object")
    base = PROFILES.get(data.pop("base", "coupled"))
    if base is None:
        raise InvalidProfile("unknown base profile")
    known = {f.name for f in fields(SessionProfile)}
    overrides = {}
    for key, value in data.items():
        if key not in known:
            raise InvalidProfile(f"unknown profile field {key!r}")
        overrides[key] = tuple(value) if key in _TUPLE_FIELDS else value
    profile = replace(base, **overrides)
    profile.validate()
    return profile


@dataclass(frozen=True)
class TimelineEvent:
    at: float
    name: str
    scroll: ScrollSample | None = None


@dataclass(frozen=True)
class ItemSlot:
    item_id: str
    top: int
    bottom: int


@dataclass(frozen=True)
class ListingLayout:
    """Vertical pixel extents of the items laid out on a listing page."""

    slots: tuple[ItemSlot, ...]

    def validate(self) -> None:
        seen = set()
        for slot in self.slots:
            if slot.item_id in seen:
                raise InvalidLayout(f"duplicate item {slot.item_id!r}")
            seen.add(slot.item_id)
            if slot.top < 0 or slot.bottom <= slot.top:
                raise InvalidLayout(f"bad extent for {slot.item_id!r}: {slot.top}..{slot.bottom}")

    @property
    def item_ids(self) -> list[str]:
        return [slot.item_id for slot in self.slots]


def visible_in_viewport(layout: ListingLayout, scroll_top: float, screen_height: float) -> list[str]:
    """Items whose extent intersects the half-open viewport [top, top + height)."""
    bottom = scroll_top + screen_height
    return [
        slot.item_id
        for slot in layout.slots
        if slot.top < bottom and slot.bottom > scroll_top
    ]


@dataclass(frozen=True)
class PageVisit:
    page_id: str
    kind: str
    loaded_at: float
    ends_at: float
    events: tuple[TimelineEvent, ...] = ()
    layout: ListingLayout | None = None
    screen_height: int = 0


@dataclass(frozen=True)
class SessionTimeline:
    user_id: str
    ip: str
    is_bot: bool
    pages: tuple[PageVisit, ...]

    def validate(self) -> None:
        previous_end = None
        for page in self.pages:
            if previous_end is not None and page.loaded_at < previous_end:
                raise InvalidTimeline(f"page {page.page_id!r} loads before the previous ends")
            if page.ends_at < page.loaded_at:
                raise InvalidTimeline(f"page {page.page_id!r} ends before it loads")
            last = page.loaded_at
            for event in page.events:
                if event.at < last:
                    raise InvalidTimeline(f"event order regresses on page {page.page_id!r}")
                if not page.loaded_at <= event.at <= page.ends_at:
                    raise InvalidTimeline(
                        f"event at {event.at} escapes page {page.page_id!r} "
                        f"[{page.loaded_at}, {page.ends_at}]"
                    )
                last = event.at
            previous_end = page.ends_at

    def identity_for(self, page: PageVisit) -> SessionIdentity:
        return SessionIdentity(
            entity_id=self.user_id,
            entity_type="user",
            target_entity_id=page.page_id,
            target_entity_type=page.kind,
            ip=self.ip,
        )


def _lognormal(rng: random.Random, median: float, sigma: float) -> float:
    if median <= 0:
        return 0.0
    return rng.lognormvariate(math.log(median), sigma)


def _geometric(rng: random.Random, mean: float) -> int:
    """Geometric draw with the given mean (>= 1)."""
    if mean <= 1.0:
        return 1
    p = 1.0 / mean
    u = rng.random()
    return 1 + int(math.log(1.0 - u) / math.log(1.0 - p))


def _item_page(
    rng: random.Random, profile: SessionProfile, item_id: str, loaded_at: float
) -> PageVisit:
    appeal = item_appeal(item_id)
    screen_h = rng.randint(*profile.screen_height)
    screen_w = rng.randint(*profile.screen_width)
    doc_h = rng.randint(*profile.document_height)

    events = [TimelineEvent(loaded_at, "DOMContentLoaded")]
    n_bursts = rng.randint(*profile.bursts_per_page)
    burst_median, burst_sigma = profile.active_burst_seconds
    idle_median, idle_sigma = profile.idle_gap_seconds
    # Higher-appeal items hold the user longer; that is the dwell intent
    # side of the coupling.
    gain_base, gain_slope = profile.dwell_appeal_gain
    bursts = [
        _q(_lognormal(rng, burst_median, burst_sigma) * (gain_base + gain_slope * appeal))
        for _ in range(n_bursts)
    ]
    idles = [_q(_lognormal(rng, idle_median, idle_sigma)) if idle_median > 0 else 0.0
             for _ in range(n_bursts)]

    # Users who stay longer scroll deeper: appeal drives both the dwell
    # scale above and the depth target, per the coupling coefficient.
    target_depth = profile.depth_floor + profile.engagement_scroll_coupling * appeal * (
        1.0 - profile.depth_floor
    )
    target_depth += rng.uniform(-1.0, 1.0) * profile.depth_noise
    target_depth = min(1.0, max(0.02, target_depth))
    max_scroll = max(0, int(target_depth * doc_h) - screen_h)
    scrolling = [rng.random() < profile.scroll_propensity for _ in range(n_bursts)]
    # The reading pattern: reach the intended depth within the first seconds
    # of the first scrolling burst, then stay around it.
    first_scroll_burst = next((b for b, s in zip(bursts, scrolling) if s), 0.0)
    ramp_seconds = min(first_scroll_burst, 2.5)

    t = loaded_at
    scroll_elapsed = 0.0
    scroll_pos = 0
    flavors = ("mousemove", "keydown", "mousemove", "focus", "mousemove", "visibilitychange")
    flavor_index = 0
    for burst, idle, scrolls in zip(bursts, idles, scrolling):
        offset = 0.25
        while offset <= burst:
            at = t + offset
            if scrolls and max_scroll > 0 and flavor_index % 2 == 1:
                scroll_elapsed += profile.event_cadence_seconds
                fraction = min(1.0, scroll_elapsed / ramp_seconds) if ramp_seconds else 1.0
                scroll_pos = max(scroll_pos, int(fraction * max_scroll))
                events.append(TimelineEvent(at, "scroll", ScrollSample(
                    document_height=doc_h,
                    screen_height=screen_h,
                    screen_width=screen_w,
                    scroll_top=scroll_pos,
                )))
            else:
                events.append(TimelineEvent(at, flavors[flavor_index % len(flavors)]))
            flavor_index += 1
            offset += _q(profile.event_cadence_seconds * (0.8 + 0.4 * rng.random()))
        t = t + burst + idle  # all quarter-second multiples, so the sum is exact
    unload_at = max(t, events[-1].at + 0.25)
    events.append(TimelineEvent(unload_at, "beforeunload"))
    # Navigation happens at the 5s boundary after the unload event, so a
    # page's wall time always covers the intervals it occupied (the page-load
    # method never under-measures a page it can see).
    ends_at = loaded_at + TICK_SECONDS * (int((unload_at - loaded_at) // TICK_SECONDS) + 1)
    return PageVisit(
        page_id=item_id,
        kind=ITEM_KIND,
        loaded_at=loaded_at,
        ends_at=ends_at,
        events=tuple(events),
        screen_height=screen_h,
    )


def _listing_page(
    rng: random.Random, profile: SessionProfile, listing_id: str, loaded_at: float
) -> tuple[PageVisit, list[str]]:
    """Build a listing visit; returns it plus the items the user will click."""
    screen_h = rng.randint(*profile.screen_height)
    screen_w = rng.randint(*profile.screen_width)
    slot_h = rng.randint(*profile.listing_slot_height)
    count = min(profile.listing_item_count, profile.catalog_size)
    shown_indices = rng.sample(range(profile.catalog_size), count)
    slots = tuple(
        ItemSlot(f"i{idx:04d}", i * slot_h, (i + 1) * slot_h)
        for i, idx in enumerate(shown_indices)
    )
    layout = ListingLayout(slots)
    doc_h = count * slot_h

    depth = rng.uniform(*profile.listing_depth)
    max_scroll = max(0, int(depth * doc_h) - screen_h)
    dwell = _q(_lognormal(rng, *profile.listing_dwell_seconds))
    dwell = max(dwell, 3.0)

    events = [TimelineEvent(loaded_at, "DOMContentLoaded")]
    if max_scroll > 0:
        scroll_span = min(dwell - 1.0, max(2.0, dwell * 0.6))
        steps = max(2, int(scroll_span / 0.75))
        for i in range(1, steps + 1):
            at = loaded_at + _q(i * scroll_span / steps)
            pos = int(max_scroll * i / steps)
            events.append(TimelineEvent(at, "scroll", ScrollSample(
                document_height=doc_h,
                screen_height=screen_h,
                screen_width=screen_w,
                scroll_top=pos,
            )))
    ends_at = round((loaded_at + dwell) * 4.0) / 4.0
    if events[-1].at >= ends_at:
        ends_at = events[-1].at + 0.25
    events.append(TimelineEvent(ends_at, "beforeunload"))

    viewable = set(visible_in_viewport(layout, 0, screen_h))
    viewable |= set(visible_in_viewport(layout, max_scroll, screen_h))
    for event in events:
        if event.scroll is not None:
            viewable |= set(visible_in_viewport(layout, event.scroll.scroll_top, screen_h))
    candidates = [slot.item_id for slot in slots if slot.item_id in viewable]
    wanted = max(1, min(_geometric(rng, profile.pages_per_session), profile.max_pages_per_session))
    # The most appealing viewable items win the clicks.
    candidates.sort(key=lambda c: (-item_appeal(c), c))
    clicked = candidates[:wanted]

    visit = PageVisit(
        page_id=listing_id,
        kind=LISTING_KIND,
        loaded_at=loaded_at,
        ends_at=ends_at,
        events=tuple(events),
        layout=layout,
        screen_height=screen_h,
    )
    return visit, clicked


def _bot_session(rng: random.Random, profile: SessionProfile, user_id: str,
                 ip: str, start: float) -> SessionTimeline:
    pages = []
    t = start
    count = min(_geometric(rng, profile.pages_per_session) + 1, profile.max_pages_per_session + 1)
    slot_h = rng.randint(*profile.listing_slot_height)
    n = min(profile.listing_item_count, profile.catalog_size)
    shown = rng.sample(range(profile.catalog_size), n)
    layout = ListingLayout(tuple(
        ItemSlot(f"i{idx:04d}", i * slot_h, (i + 1) * slot_h) for i, idx in enumerate(shown)
    ))
    pages.append(PageVisit(
        page_id=f"list-{user_id}", kind=LISTING_KIND, loaded_at=t,
        ends_at=t + 1.0, layout=layout, screen_height=0,
    ))
    t += 1.0
    for _ in range(count - 1):
        item_id = f"i{rng.randrange(profile.catalog_size):04d}"
        dwell = _q(rng.uniform(0.5, 4.0))
        pages.append(PageVisit(
            page_id=item_id, kind=ITEM_KIND, loaded_at=t, ends_at=t + dwell,
        ))
        t += dwell
    return SessionTimeline(user_id=user_id, ip=ip, is_bot=True, pages=tuple(pages))


def generate_session(profile: SessionProfile, seed: int, index: int = 0) -> SessionTimeline:
    """Generate one deterministic session timeline."""
    profile.validate()
    rng = random.Random(f"{seed}:{index}")
    is_bot = profile.is_bot or (profile.bot_fraction > 0 and rng.random() < profile.bot_fraction)
    start = BASE_EPOCH + index * SESSION_STAGGER_SECONDS
    if is_bot:
        user_id = f"bot{seed}-{index}"
        ip = f"172.16.{(index >> 8) & 255}.{index & 255}"
        return _bot_session(rng, profile, user_id, ip, start)

    user_id = f"u{seed}-{index}"
    ip = f"10.7.{(index >> 8) & 255}.{index & 255}"
    listing, clicked = _listing_page(rng, profile, f"list-{user_id}", start)
    pages = [listing]
    t = listing.ends_at
    for item_id in clicked:
        visit = _item_page(rng, profile, item_id, t)
        pages.append(visit)
        t = visit.ends_at
    # The session leaves through a terminal page, so the last item view has
    # a successor load and both collection methods see the same pages.
    pages.append(PageVisit(page_id=f"exit-{user_id}", kind=EXIT_KIND,
                           loaded_at=t, ends_at=t + 1.0))
    timeline = SessionTimeline(user_id=user_id, ip=ip, is_bot=False, pages=tuple(pages))
    timeline.validate()
    return timeline


def generate_sessions(profile: SessionProfile, count: int, seed: int) -> list[SessionTimeline]:
    return [generate_session(profile, seed, i) for i in range(count)]


# ---------------------------------------------------------------------------
# replays

def _replay_listing_visibility(
    timeline: SessionTimeline,
    page: PageVisit,
    layout: ListingLayout,
    transport=None,
) -> list[Event]:
    machine = PingCollector(timeline.identity_for(page), page.loaded_at, transport)
    machine.record_visible_items(visible_in_viewport(layout, 0, page.screen_height))
    emitted: list[Event] = []
    for event in page.events:
        if event.scroll is not None:
            emitted.extend(machine.observe_visible_items(
                event.at,
                visible_in_viewport(layout, event.scroll.scroll_top, event.scroll.screen_height),
            ))
        else:
            emitted.extend(machine.advance_to(event.at))
    emitted.extend(machine.unload(page.ends_at))
    return emitted


def run_pinging(timeline: SessionTimeline, *, transport=None) -> list[Event]:
    """Replay a timeline through one pinging machine per page view.

    Item pages produce engagement reports; listing pages produce
    visible-impression reports.  Bot timelines never run the collector,
    so they produce nothing.
    """
    timeline.validate()
    if timeline.is_bot:
        return []
    emitted: list[Event] = []
    for page in timeline.pages:
        if page.kind == ITEM_KIND:
            machine = PingCollector(timeline.identity_for(page), page.loaded_at, transport)
            for event in page.events:
                emitted.extend(machine.observe(event.at, event.name, event.scroll))
            emitted.extend(machine.unload(page.ends_at))
        elif page.kind == LISTING_KIND and page.layout is not None:
            emitted.extend(_replay_listing_visibility(timeline, page, page.layout, transport))
    return emitted


@dataclass(frozen=True)
class PageLoadResult:
    events: tuple[Event, ...]
    dwell_seconds: tuple[float, ...]


def run_pageload(timeline: SessionTimeline) -> PageLoadResult:
    """The page-load method: one event per load, dwell = gap to the next load.

    The final page has no successor load, so this method cannot measure it
    and its dwell is zero.
    """
    timeline.validate()
    events = []
    dwells = []
    for i, page in enumerate(timeline.pages):
        properties: dict = {}
        if page.kind == LISTING_KIND and page.layout is not None:
            properties["shownItems"] = page.layout.item_ids
        events.append(Event(
            entity_id=timeline.user_id,
            entity_type="user",
            target_entity_id=page.page_id,
            target_entity_type=page.kind,
            event_type=PAGE_LOAD,
            timestamp=page.loaded_at,
            ip=timeline.ip,
            properties=properties,
        ))
        if i + 1 < len(timeline.pages):
            dwells.append(timeline.pages[i + 1].loaded_at - page.loaded_at)
        else:
            dwells.append(0.0)
    return PageLoadResult(events=tuple(events), dwell_seconds=tuple(dwells))


@dataclass(frozen=True)
class ExposureResult:
    page_load_impressions: int
    visibility_reports: tuple[Event, ...]


def run_listing_exposure(
    timeline: SessionTimeline, layout: ListingLayout | None = None
) -> ExposureResult:
    """Count laid-out impressions per listing load versus items actually seen.

    ``layout`` overrides the per-visit layouts when given (handy for
    constructed timelines); otherwise each listing visit uses its own.
    """
    timeline.validate()
    if layout is not None:
        layout.validate()
    impressions = 0
    reports: list[Event] = []
    for page in timeline.pages:
        if page.kind != LISTING_KIND:
            continue
        effective = layout if layout is not None else page.layout
        if effective is None:
            raise InvalidLayout(f"listing page {page.page_id!r} has no layout")
        impressions += len(effective.slots)
        if not timeline.is_bot:
            reports.extend(_replay_listing_visibility(timeline, page, effective))
    return ExposureResult(page_load_impressions=impressions, visibility_reports=tuple(reports))


def session_events(timeline: SessionTimeline) -> list[Event]:
    """Everything one session contributes to the raw collection stream."""
    events = list(run_pageload(timeline).events)
    if not timeline.is_bot:
        for page in timeline.pages:
            if page.kind == ITEM_KIND:
                events.append(Event(
                    entity_id=timeline.user_id,
                    entity_type="user",
                    target_entity_id=page.page_id,
                    target_entity_type=ITEM_KIND,
                    event_type=CLICK,
                    timestamp=page.loaded_at,
                    ip=timeline.ip,
                ))
        events.extend(run_pinging(timeline))
    events.sort(key=lambda e: e.timestamp)
    return events


def simulate_events(profile: SessionProfile, count: int, seed: int) -> list[Event]:
    """Generate ``count`` sessions and merge their event streams by time."""
    events: list[Event] = []
    for index in range(count):
        events.extend(session_events(generate_session(profile, seed, index)))
    events.sort(key=lambda e: e.timestamp)
    return events


def write_log(events: Iterable[Event], path: Path | str) -> int:
    """Write events as the newline-delimited store format; returns the count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "wb") as fh:
        for event in events:
            fh.write(encode_event(event) + b"\n")
            n += 1
    return n


def post_session(
    timeline: SessionTimeline,
    endpoint: str,
    http_session,
    *,
    user_agent: str | None = None,
) -> dict[int, int]:
    """Wire mode: POST one session's events to a running ingestion service.

    Human sessions mark their requests with the collector header the way
    the real script does; bot sessions are bare page hits without it.
    Returns a status-code histogram.
    """
    from engage.server import COLLECTOR_HEADER  # local import to keep replay paths light

    headers = {
        "Content-Type": "application/json",
        "X-Forwarded-For": timeline.ip,
        "User-Agent": user_agent or (
            "ExampleCrawler/1.0 (+http://example.com/bot)" if timeline.is_bot
            else "engage-sim/0.1"
        ),
    }
    if not timeline.is_bot:
        headers[COLLECTOR_HEADER] = "1"
    statuses: dict[int, int] = {}
    for event in session_events(timeline):
        response = http_session.post(
            f"{endpoint}/v1/events", data=encode_event(event), headers=headers
        )
        statuses[response.status_code] = statuses.get(response.status_code, 0) + 1
    return statuses

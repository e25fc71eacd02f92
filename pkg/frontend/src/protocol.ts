/**
 * The pinging protocol state machine, timestamp-driven.
 *
 * DOM events accumulate into the current 5-second bucket; every tick a
 * non-empty bucket moves to the pending list; every third tick the
 * pending buckets flush as one engagement report.  Empty flushes are
 * suppressed entirely, so an idle page generates zero traffic.
 *
 * The machine never reads the clock itself: callers pass timestamps in
 * epoch seconds, which keeps it deterministic and lets the test suite
 * replay scripted sessions against frozen expectations.
 */

export const TICK_SECONDS = 5;
export const TICKS_PER_FLUSH = 3;
export const MAX_REPORT_BUCKETS = 3;

export const DOM_EVENT_NAMES = [
  "mousemove",
  "scroll",
  "beforeunload",
  "resize",
  "focus",
  "DOMContentLoaded",
  "visibilitychange",
  "keydown",
] as const;

export type DomEventName = (typeof DOM_EVENT_NAMES)[number];

export interface ScrollSample {
  document_height: number;
  screen_height: number;
  screen_width: number;
  scroll_top: number;
}

export type BucketPayload = 1 | ScrollSample;

/** One 5-second interval: event name -> payload, insertion-ordered. */
export type IntervalBucket = Map<string, BucketPayload>;

export interface ReportIdentity {
  entityId: string;
  entityType: string;
  targetEntityId: string;
  targetEntityType: string;
}

/** A wire-ready event record; the server stamps the missing ip. */
export interface WireEvent {
  entityId: string;
  entityType: string;
  targetEntityId: string;
  targetEntityType: string;
  timestamp: number;
  type: string;
  properties: Record<string, unknown>;
}

function encodeBucket(bucket: IntervalBucket): Array<Record<string, BucketPayload>> {
  const entries: Array<Record<string, BucketPayload>> = [];
  for (const [name, payload] of bucket) {
    entries.push({ [name]: payload });
  }
  return entries;
}

export class PingMachine {
  private bucket: IntervalBucket = new Map();
  private pending: IntervalBucket[] = [];
  private viewedPending: string[] = [];
  private viewedSeen = new Set<string>();
  private tickCount = 0;
  private lastTickAt: number;
  private lastFlushAt: number;

  constructor(
    readonly identity: ReportIdentity,
    readonly createdAt: number,
    private readonly transport?: (event: WireEvent) => void,
  ) {
    this.lastTickAt = createdAt;
    this.lastFlushAt = createdAt;
  }

  /** Record one DOM event; beforeunload triggers the early unload flush. */
  record(name: DomEventName, payload?: ScrollSample, now?: number): WireEvent[] {
    if (!(DOM_EVENT_NAMES as readonly string[]).includes(name)) {
      throw new Error(`unknown DOM event name: ${name}`);
    }
    if (name === "scroll") {
      if (!payload) {
        throw new Error("scroll events carry a ScrollSample payload");
      }
      const previous = this.bucket.get("scroll");
      const merged: ScrollSample =
        previous && previous !== 1
          ? { ...payload, scroll_top: Math.max(previous.scroll_top, payload.scroll_top) }
          : payload;
      // re-setting an existing key keeps its position, same as the server side
      this.bucket.set("scroll", merged);
    } else {
      if (!this.bucket.has(name)) {
        this.bucket.set(name, 1);
      }
    }
    if (name === "beforeunload" && now !== undefined) {
      return this.unload(now);
    }
    return [];
  }

  /** Mark items as seen; each id reports at most once per page view. */
  recordVisibleItems(itemIds: Iterable<string>): void {
    for (const id of itemIds) {
      if (!this.viewedSeen.has(id)) {
        this.viewedSeen.add(id);
        this.viewedPending.push(id);
      }
    }
  }

  /** Fire every 5s tick and 15s flush boundary at or before `now`. */
  advanceTo(now: number): WireEvent[] {
    const emitted: WireEvent[] = [];
    for (;;) {
      const boundary = this.createdAt + TICK_SECONDS * (this.tickCount + 1);
      if (boundary > now) {
        break;
      }
      this.tick(boundary);
      if (this.tickCount % TICKS_PER_FLUSH === 0) {
        const report = this.flush(boundary);
        if (report) emitted.push(report);
        const visibility = this.flushVisibility(boundary);
        if (visibility) emitted.push(visibility);
      }
    }
    return emitted;
  }

  observe(now: number, name: DomEventName, payload?: ScrollSample): WireEvent[] {
    const emitted = this.advanceTo(now);
    emitted.push(...this.record(name, payload, now));
    return emitted;
  }

  observeVisibleItems(now: number, itemIds: Iterable<string>): WireEvent[] {
    const emitted = this.advanceTo(now);
    this.recordVisibleItems(itemIds);
    return emitted;
  }

  /** Early flush on page exit: pending buckets plus the in-progress one. */
  unload(now: number): WireEvent[] {
    const emitted = this.advanceTo(now);
    if (this.bucket.size > 0) {
      this.pending.push(this.bucket);
      this.bucket = new Map();
    }
    const report = this.flush(now);
    if (report) emitted.push(report);
    const visibility = this.flushVisibility(now);
    if (visibility) emitted.push(visibility);
    return emitted;
  }

  private tick(now: number): void {
    if (now <= this.lastTickAt) {
      throw new Error(`tick at ${now} does not advance past ${this.lastTickAt}`);
    }
    if (this.bucket.size > 0) {
      if (this.pending.length >= MAX_REPORT_BUCKETS) {
        throw new Error("pending buckets may never exceed the report bound");
      }
      this.pending.push(this.bucket);
      this.bucket = new Map();
    }
    this.tickCount += 1;
    this.lastTickAt = now;
  }

  private flush(now: number): WireEvent | null {
    if (now < this.lastFlushAt) {
      throw new Error(`flush at ${now} precedes previous flush at ${this.lastFlushAt}`);
    }
    this.lastFlushAt = now;
    if (this.pending.length === 0) {
      return null;
    }
    const report: WireEvent = {
      ...this.identity,
      timestamp: now,
      type: "engagement_report",
      properties: { report: this.pending.map(encodeBucket) },
    };
    this.pending = [];
    this.transport?.(report);
    return report;
  }

  private flushVisibility(now: number): WireEvent | null {
    if (this.viewedPending.length === 0) {
      return null;
    }
    const report: WireEvent = {
      ...this.identity,
      timestamp: now,
      type: "visible_impression_report",
      properties: { viewedItems: this.viewedPending },
    };
    this.viewedPending = [];
    this.transport?.(report);
    return report;
  }
}

/**
 * Browser half of the pipeline: eight DOM handlers feeding the pinging
 * machine from real timers, listing-item viewability, and report
 * delivery that stays off the critical path.
 *
 * Handlers are passive and do constant work; viewport-intersection
 * checks run inside the scroll handler behind a 100ms throttle.  Item
 * pages produce engagement reports, listing pages visible-impression
 * reports.  A page left idle sends nothing at all.
 */

import type { CollectorConfig } from "./config.js";
import {
  DOM_EVENT_NAMES,
  DomEventName,
  PingMachine,
  ScrollSample,
  TICK_SECONDS,
  WireEvent,
} from "./protocol.js";
import { ReportTransport } from "./transport.js";

export interface CollectorEnvironment {
  doc: Document;
  win: Window;
  /** Epoch seconds. */
  now: () => number;
  setInterval: (fn: () => void, ms: number) => number;
  clearInterval: (id: number) => void;
  transport: Pick<ReportTransport, "send">;
}

export interface DetachHandle {
  detach(): void;
  readonly machine: PingMachine;
}

const VIEWABILITY_THROTTLE_SECONDS = 0.1;

export function attach(
  config: CollectorConfig,
  env?: Partial<CollectorEnvironment>,
): DetachHandle {
  // defaults resolve lazily so injected environments never touch globals
  const environment: CollectorEnvironment = {
    doc: env?.doc ?? document,
    win: env?.win ?? window,
    now: env?.now ?? (() => Date.now() / 1000),
    setInterval: env?.setInterval ?? ((fn, ms) => window.setInterval(fn, ms)),
    clearInterval: env?.clearInterval ?? ((id) => window.clearInterval(id)),
    transport: env?.transport ?? new ReportTransport(config.endpoint),
  };
  const { doc, win, now, transport } = environment;

  const machine = new PingMachine(
    {
      entityId: config.entityId,
      entityType: config.entityType,
      targetEntityId: config.targetEntityId,
      targetEntityType: config.targetEntityType,
    },
    now(),
  );

  const deliver = (events: WireEvent[], unloading = false) => {
    for (const event of events) {
      transport.send(event, { unloading });
    }
  };

  const scrollSample = (): ScrollSample => {
    const content = config.contentSelector
      ? doc.querySelector<HTMLElement>(config.contentSelector)
      : null;
    const documentHeight = Math.round(
      content ? content.scrollHeight : doc.documentElement.scrollHeight,
    );
    return {
      document_height: documentHeight,
      screen_height: Math.max(1, Math.round(win.innerHeight)),
      screen_width: Math.max(1, Math.round(win.innerWidth)),
      scroll_top: Math.max(0, Math.round(win.scrollY ?? 0)),
    };
  };

  const visibleItemIds = (): string[] => {
    if (!config.itemSelector) {
      return [];
    }
    const ids: string[] = [];
    const viewportHeight = win.innerHeight;
    for (const el of Array.from(doc.querySelectorAll<HTMLElement>(config.itemSelector))) {
      const rect = el.getBoundingClientRect();
      if (rect.top < viewportHeight && rect.bottom > 0) {
        const id = el.dataset.engageItemId ?? el.id;
        if (id) {
          ids.push(id);
        }
      }
    }
    return ids;
  };

  let lastViewabilityCheck = -Infinity;
  const checkViewability = (at: number, force = false) => {
    if (config.pageKind !== "listing") {
      return;
    }
    if (!force && at - lastViewabilityCheck < VIEWABILITY_THROTTLE_SECONDS) {
      return;
    }
    lastViewabilityCheck = at;
    deliver(machine.observeVisibleItems(at, visibleItemIds()));
  };

  const onDomEvent = (name: DomEventName) => {
    const at = now();
    if (name === "beforeunload") {
      const emitted =
        config.pageKind === "item" ? machine.observe(at, name) : machine.unload(at);
      deliver(emitted, true);
      return;
    }
    if (config.pageKind === "item") {
      deliver(machine.observe(at, name, name === "scroll" ? scrollSample() : undefined));
    } else {
      deliver(machine.advanceTo(at));
    }
    if (name === "scroll" || name === "resize") {
      checkViewability(at);
    }
  };

  const listeners: Array<() => void> = [];
  const listen = (target: EventTarget, name: string) => {
    const handler = () => onDomEvent(name as DomEventName);
    target.addEventListener(name, handler, { passive: true });
    listeners.push(() => target.removeEventListener(name, handler));
  };

  for (const name of DOM_EVENT_NAMES) {
    if (name === "DOMContentLoaded") {
      if (doc.readyState === "loading") {
        listen(doc, name);
      } else {
        onDomEvent(name); // already loaded when the async script ran
      }
    } else if (name === "visibilitychange") {
      listen(doc, name);
    } else {
      listen(win, name);
    }
  }

  // items visible without any scrolling still count
  checkViewability(now(), true);

  const timer = environment.setInterval(
    () => deliver(machine.advanceTo(now())),
    TICK_SECONDS * 1000,
  );

  return {
    machine,
    detach() {
      environment.clearInterval(timer);
      while (listeners.length) {
        listeners.pop()!();
      }
    },
  };
}

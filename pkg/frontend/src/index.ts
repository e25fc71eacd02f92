/**
 * Entry point: embed asynchronously and the collector wires itself up
 * from the page's data attributes, or stays inert without them.
 *
 *   <script async src="https://collect.example.com/v1/collector.js"></script>
 */

import { attach } from "./collector.js";
import { readConfig } from "./config.js";

export { attach } from "./collector.js";
export type { CollectorEnvironment, DetachHandle } from "./collector.js";
export { readConfig } from "./config.js";
export type { CollectorConfig, PageKind } from "./config.js";
export {
  DOM_EVENT_NAMES,
  MAX_REPORT_BUCKETS,
  PingMachine,
  TICK_SECONDS,
  TICKS_PER_FLUSH,
} from "./protocol.js";
export type { IntervalBucket, ReportIdentity, ScrollSample, WireEvent } from "./protocol.js";
export { COLLECTOR_HEADER, ReportTransport } from "./transport.js";

declare global {
  interface Window {
    __engageCollector?: ReturnType<typeof attach> | null;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  const config = readConfig(document);
  window.__engageCollector = config ? attach(config) : null;
}

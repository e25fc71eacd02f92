/**
 * Report delivery that never blocks the page.
 *
 * Normal flushes POST with the collector marker header; the unload path
 * prefers a keepalive fetch and falls back to sendBeacon (which cannot
 * set headers, hence the `collector=1` query marker the server also
 * accepts).  Failures get one silent retry and are then dropped:
 * losing a measurement beats visible jank.
 */

import type { WireEvent } from "./protocol.js";

export const COLLECTOR_HEADER = "X-Engage-Collector";

export interface TransportOptions {
  fetchFn?: typeof fetch;
  sendBeacon?: (url: string, data: string) => boolean;
}

export class ReportTransport {
  private readonly fetchFn?: typeof fetch;
  private readonly beacon?: (url: string, data: string) => boolean;

  constructor(private readonly endpoint: string, options: TransportOptions = {}) {
    this.fetchFn =
      options.fetchFn ?? (typeof fetch === "function" ? fetch.bind(globalThis) : undefined);
    this.beacon =
      options.sendBeacon ??
      (typeof navigator !== "undefined" && navigator.sendBeacon
        ? navigator.sendBeacon.bind(navigator)
        : undefined);
  }

  send(event: WireEvent, { unloading = false } = {}): void {
    const body = JSON.stringify(event);
    if (unloading && !this.fetchFn && this.beacon) {
      this.beacon(this.markedUrl(), body);
      return;
    }
    void this.post(body, unloading).catch(() => {
      // one retry, then drop silently
      void this.post(body, unloading).catch(() => {
        if (unloading && this.beacon) {
          this.beacon(this.markedUrl(), body);
        }
      });
    });
  }

  private markedUrl(): string {
    return this.endpoint + (this.endpoint.includes("?") ? "&" : "?") + "collector=1";
  }

  private async post(body: string, unloading: boolean): Promise<void> {
    if (!this.fetchFn) {
      throw new Error("fetch unavailable");
    }
    const response = await this.fetchFn(this.endpoint, {
      method: "POST",
      body,
      headers: { "Content-Type": "application/json", [COLLECTOR_HEADER]: "1" },
      keepalive: unloading,
    });
    if (!response.ok) {
      throw new Error(`submit failed: ${response.status}`);
    }
  }
}

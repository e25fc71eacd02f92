/**
 * Collector configuration, read from declarative markup attributes so a
 * single static script serves every page:
 *
 *   <body data-engage-entity-id="u123" data-engage-entity-type="user"
 *         data-engage-target-id="p456" data-engage-target-type="item"
 *         data-engage-page-kind="item"
 *         data-engage-content-selector="#main"
 *         data-engage-item-selector="[data-engage-item-id]">
 *
 * Pages without the identity attributes get no collector at all.
 */

export type PageKind = "item" | "listing";

export interface CollectorConfig {
  endpoint: string;
  entityId: string;
  entityType: string;
  targetEntityId: string;
  targetEntityType: string;
  pageKind: PageKind;
  contentSelector?: string;
  itemSelector?: string;
}

const DEFAULT_ENDPOINT = "/v1/events";

export function readConfig(doc: Document): CollectorConfig | null {
  const host = doc.querySelector<HTMLElement>("[data-engage-entity-id]");
  if (!host) {
    return null;
  }
  const data = host.dataset;
  const entityId = data.engageEntityId ?? "";
  const targetEntityId = data.engageTargetId ?? "";
  if (!entityId || !targetEntityId) {
    return null; // collector stays inert without a full identity
  }
  const pageKind = data.engagePageKind === "listing" ? "listing" : "item";
  return {
    endpoint: data.engageEndpoint ?? DEFAULT_ENDPOINT,
    entityId,
    entityType: data.engageEntityType ?? "user",
    targetEntityId,
    targetEntityType: data.engageTargetType ?? (pageKind === "listing" ? "listing" : "item"),
    pageKind,
    contentSelector: data.engageContentSelector,
    itemSelector: data.engageItemSelector,
  };
}

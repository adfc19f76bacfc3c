// Client-side session state. This mirror holds no authority: it is rebuilt
// from the gateway store on every (re)connect and patched by feed events in
// between. Anything rendered comes from here, so the party can never be
// shown a contract the ledger did not project to it.

import type { Entry } from "./api.js";
import type { FeedEvent } from "./sse.js";

export interface Toast {
  kind: string; // invitation | poll | result | iou | witness
  template: string;
  payload: Record<string, any>;
  offset: number;
}

const TOAST_KINDS = new Set(["invitation", "poll", "result", "iou", "witness"]);

export class SessionState {
  readonly entries = new Map<number, Entry>();
  readonly toasts: Toast[] = [];
  offset = 0;
  private dismissed = new Set<number>(); // invitation external ids hidden locally

  replaceAll(entries: Entry[], offset: number): void {
    this.entries.clear();
    for (const entry of entries) this.entries.set(entry.externalId, entry);
    this.offset = offset;
  }

  apply(event: FeedEvent): void {
    const note = event.data ?? {};
    if (typeof note.offset === "number") this.offset = Math.max(this.offset, note.offset + 1);
    if (event.type === "store-add" && typeof note.externalId === "number") {
      this.entries.set(note.externalId, {
        externalId: note.externalId,
        contractId: note.contractId,
        template: note.template,
        payload: note.payload ?? {},
      });
    } else if (event.type === "store-remove" && typeof note.externalId === "number") {
      this.entries.delete(note.externalId);
    } else if (TOAST_KINDS.has(event.type)) {
      this.toasts.push({
        kind: event.type,
        template: note.template,
        payload: note.payload ?? {},
        offset: note.offset ?? this.offset,
      });
    }
  }

  byTemplate(template: string): Entry[] {
    const out = [...this.entries.values()].filter((e) => e.template === template);
    out.sort((a, b) => a.externalId - b.externalId);
    return out;
  }

  get(externalId: number): Entry | undefined {
    return this.entries.get(externalId);
  }

  dismiss(externalId: number): void {
    this.dismissed.add(externalId);
  }

  isDismissed(externalId: number): boolean {
    return this.dismissed.has(externalId);
  }
}

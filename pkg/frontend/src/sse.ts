// Server-sent-events client over fetch streaming. Works in browsers and in
// node 20 without any dependency, which native EventSource is not.

export interface FeedEvent {
  type: string;
  id?: string;
  data: any;
}

// Incremental parser for the `id:` / `event:` / `data:` frame format.
export class SSEParser {
  private buffer = "";
  private current: { type?: string; id?: string; data?: string } = {};

  push(chunk: string): FeedEvent[] {
    this.buffer += chunk;
    const events: FeedEvent[] = [];
    let at: number;
    while ((at = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, at).replace(/\r$/, "");
      this.buffer = this.buffer.slice(at + 1);
      if (line === "") {
        const done = this.flush();
        if (done) events.push(done);
      } else if (line.startsWith(":")) {
        continue; // keepalive comment
      } else {
        const sep = line.indexOf(":");
        const field = sep < 0 ? line : line.slice(0, sep);
        const value = sep < 0 ? "" : line.slice(sep + 1).replace(/^ /, "");
        if (field === "event") this.current.type = value;
        else if (field === "id") this.current.id = value;
        else if (field === "data")
          this.current.data = (this.current.data ?? "") + value;
      }
    }
    return events;
  }

  private flush(): FeedEvent | null {
    const { type, id, data } = this.current;
    this.current = {};
    if (data === undefined) return null;
    let parsed: any = data;
    try {
      parsed = JSON.parse(data);
    } catch {
      // leave raw text in place
    }
    return { type: type ?? "message", id, data: parsed };
  }
}

export interface FeedHandlers {
  onEvent: (event: FeedEvent) => void;
  // fired on every (re)connect; the app refetches the full store here
  onConnect?: () => void | Promise<void>;
  onError?: (error: unknown) => void;
}

const RETRY_BASE_MS = 500;
const RETRY_MAX_MS = 10_000;

export class EventFeed {
  private controller: AbortController | null = null;
  private stopped = false;

  constructor(
    private readonly url: string,
    private readonly handlers: FeedHandlers,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  start(): void {
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  private async loop(): Promise<void> {
    let attempt = 0;
    while (!this.stopped) {
      this.controller = new AbortController();
      try {
        const resp = await this.fetchFn(this.url, {
          signal: this.controller.signal,
          headers: { accept: "text/event-stream" },
        });
        if (!resp.ok || !resp.body) throw new Error(`feed returned ${resp.status}`);
        attempt = 0;
        await this.handlers.onConnect?.();
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        const parser = new SSEParser();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          for (const event of parser.push(decoder.decode(value, { stream: true }))) {
            this.handlers.onEvent(event);
          }
        }
      } catch (error) {
        if (this.stopped) return;
        this.handlers.onError?.(error);
      }
      if (this.stopped) return;
      const backoff = Math.min(RETRY_MAX_MS, RETRY_BASE_MS * 2 ** attempt);
      attempt += 1;
      await new Promise((resolve) => setTimeout(resolve, backoff));
    }
  }
}

// Streaming subscription to a session's journal with reconnect-and-resume.
//
// The server frames every journal line as `data: <line>\n\n` and always
// replays from seq 1, so resuming after a drop is a client concern: events at
// or below the last seen seq are dropped, which makes reconnects (and forced
// ones) duplicate-free by construction.

import type { JournalEvent } from './types';

export interface EventStreamCallbacks {
  onEvent(event: JournalEvent): void;
  /** Stale means the subscription is down and retrying. */
  onStaleChange?(stale: boolean): void;
  onClose?(): void;
}

export interface EventStreamOptions {
  fetchImpl?: typeof fetch;
  /** Base reconnect delay in ms; doubles per attempt up to 16x. */
  backoffMs?: number;
}

const FRAME_SEPARATOR = '\n\n';
const DATA_PREFIX = 'data: ';

export class EventStream {
  private lastSeq = 0;
  private closed = false;
  private attempts = 0;
  private controller: AbortController | null = null;
  private readonly fetchImpl: typeof fetch;
  private readonly backoffMs: number;

  constructor(
    private readonly url: string,
    private readonly callbacks: EventStreamCallbacks,
    options: EventStreamOptions = {},
  ) {
    this.fetchImpl = options.fetchImpl ?? fetch;
    this.backoffMs = options.backoffMs ?? 500;
  }

  get lastSeenSeq(): number {
    return this.lastSeq;
  }

  start(): Promise<void> {
    return this.loop();
  }

  /** Drop the current connection; the loop resumes from the last seen seq. */
  forceReconnect(): void {
    this.controller?.abort();
  }

  close(): void {
    this.closed = true;
    this.controller?.abort();
    this.callbacks.onClose?.();
  }

  private async loop(): Promise<void> {
    while (!this.closed) {
      this.controller = new AbortController();
      try {
        const response = await this.fetchImpl(this.url, { signal: this.controller.signal });
        if (!response.ok || !response.body) {
          throw new Error(`event stream failed with status ${response.status}`);
        }
        this.callbacks.onStaleChange?.(false);
        this.attempts = 0;
        await this.consume(response.body);
        if (this.closed) return;
        // The server ends the stream once the session is terminal and drained;
        // stop rather than spin on reconnects.
        this.close();
        return;
      } catch (error) {
        if (this.closed) return;
        this.callbacks.onStaleChange?.(true);
        const delay = this.backoffMs * Math.min(16, 2 ** this.attempts);
        this.attempts += 1;
        await sleep(delay);
      }
    }
  }

  private async consume(body: ReadableStream<Uint8Array>): Promise<void> {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    let buffer = '';
    while (true) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let index: number;
      while ((index = buffer.indexOf(FRAME_SEPARATOR)) >= 0) {
        const frame = buffer.slice(0, index);
        buffer = buffer.slice(index + FRAME_SEPARATOR.length);
        this.handleFrame(frame);
      }
    }
  }

  private handleFrame(frame: string): void {
    if (!frame.startsWith(DATA_PREFIX)) return;
    let event: JournalEvent;
    try {
      event = JSON.parse(frame.slice(DATA_PREFIX.length)) as JournalEvent;
    } catch {
      return; // tolerate partial trailing garbage; the reconnect replays it
    }
    if (typeof event.seq !== 'number' || event.seq <= this.lastSeq) {
      return; // duplicate from a replayed stream
    }
    this.lastSeq = event.seq;
    this.callbacks.onEvent(event);
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

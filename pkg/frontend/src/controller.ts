// Wires the API client, the event stream, and the store together.
//
// One subscription per open session view; every POST is followed by a
// snapshot reconciliation so the view never outruns the server.

import { ApiError, MaadClient } from './api';
import { EventStream } from './events';
import { SessionStore, applyEvent, isTerminal, reconcile, setStale } from './store';
import type { JournalEvent } from './types';

export class SessionController {
  readonly store: SessionStore;
  private stream: EventStream | null = null;

  constructor(
    private readonly client: MaadClient,
    readonly sessionId: string,
    private readonly streamOptions: { fetchImpl?: typeof fetch; backoffMs?: number } = {},
  ) {
    this.store = new SessionStore(sessionId);
  }

  /** Subscribe to the journal; resolves when the stream ends or is closed. */
  subscribe(): Promise<void> {
    this.stream = new EventStream(
      this.client.eventsUrl(this.sessionId),
      {
        onEvent: (event: JournalEvent) => this.store.dispatch((vm) => applyEvent(vm, event)),
        onStaleChange: (stale) => this.store.dispatch((vm) => setStale(vm, stale)),
      },
      this.streamOptions,
    );
    return this.stream.start();
  }

  forceReconnect(): void {
    this.stream?.forceReconnect();
  }

  close(): void {
    this.stream?.close();
  }

  async refreshSnapshot(): Promise<void> {
    const snapshot = await this.client.getSnapshot(this.sessionId);
    this.store.dispatch((vm) => reconcile(vm, snapshot));
  }

  /** Post an answer; server errors (409/404) land in vm.error verbatim. */
  async answer(questionId: string, text: string): Promise<boolean> {
    if (!text.trim()) return false;
    try {
      const snapshot = await this.client.answerQuestion(this.sessionId, questionId, text);
      this.store.dispatch((vm) => reconcile(vm, snapshot));
      return true;
    } catch (error) {
      this.surface(error);
      return false;
    }
  }

  async verdict(decision: 'approve' | 'reject', comment: string): Promise<boolean> {
    if (!isTerminal(this.store.state)) return false;
    try {
      const snapshot = await this.client.submitVerdict(this.sessionId, decision, comment);
      this.store.dispatch((vm) => reconcile(vm, snapshot));
      return true;
    } catch (error) {
      this.surface(error);
      return false;
    }
  }

  private surface(error: unknown): void {
    const message =
      error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
    this.store.dispatch((vm) => ({ ...vm, error: message }));
  }
}

// Typed client for the session service; the console issues only these calls.

import type { ArtifactKind, SessionConfigInput, SessionSnapshot } from './types';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

type FetchLike = typeof fetch;

async function parseError(response: Response): Promise<ApiError> {
  let code = `HTTP${response.status}`;
  let message = response.statusText;
  try {
    const body = (await response.json()) as { error_code?: string; message?: string };
    if (body.error_code) code = body.error_code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(response.status, code, message);
}

export class MaadClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  createSession(srsText: string, config?: SessionConfigInput): Promise<{ session_id: string; phase: string }> {
    return this.request('POST', '/sessions', { srs_text: srsText, config });
  }

  getSnapshot(sessionId: string): Promise<SessionSnapshot> {
    return this.request('GET', `/sessions/${sessionId}`);
  }

  getArtifact<T = Record<string, unknown>>(sessionId: string, kind: ArtifactKind): Promise<T> {
    return this.request('GET', `/sessions/${sessionId}/artifacts/${kind}`);
  }

  answerQuestion(sessionId: string, questionId: string, text: string): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${sessionId}/clarifications/${questionId}/answer`, { text });
  }

  submitVerdict(sessionId: string, decision: 'approve' | 'reject', comment: string): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${sessionId}/verdict`, { decision, comment });
  }

  eventsUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/events`;
  }
}

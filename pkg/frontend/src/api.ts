/**
 * REST client for the dialog service. One base-URL setting; every
 * non-2xx response is surfaced as a typed ApiError and a network-level
 * failure as code "unreachable".
 */

import {
  ApiError,
  ApiErrorCode,
  CaseList,
  ConfigOverrides,
  HealthResponse,
  HistoryResponse,
  MessageResponse,
  SessionCreated,
} from './types.js';

const KNOWN_CODES: ReadonlySet<string> = new Set([
  'invalid_argument',
  'not_found',
  'invalid_state',
  'backend_unavailable',
  'internal',
]);

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, init);
  } catch (err) {
    throw new ApiError('unreachable', `service unreachable: ${String(err)}`);
  }
  if (!response.ok) {
    let code: ApiErrorCode = 'internal';
    let message = `HTTP ${response.status}`;
    let detail: string | undefined;
    try {
      const body = await response.json();
      if (body && typeof body.code === 'string' && KNOWN_CODES.has(body.code)) {
        code = body.code as ApiErrorCode;
      }
      if (body && typeof body.message === 'string') {
        message = body.message;
      }
      if (body && typeof body.detail === 'string') {
        detail = body.detail;
      }
    } catch {
      // non-JSON error body; keep the HTTP status message
    }
    throw new ApiError(code, message, detail);
  }
  return response.json() as Promise<T>;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/+$/, '')}${path}`;
  }

  health(): Promise<HealthResponse> {
    return request<HealthResponse>(this.url('/healthz'));
  }

  listCases(): Promise<CaseList> {
    return request<CaseList>(this.url('/corpus/cases'));
  }

  createSession(query: string, overrides?: ConfigOverrides): Promise<SessionCreated> {
    const body: Record<string, unknown> = { query };
    if (overrides && Object.keys(overrides).length > 0) {
      body.config_overrides = overrides;
    }
    return request<SessionCreated>(this.url('/sessions'), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  sendMessage(sessionId: string, text: string): Promise<MessageResponse> {
    return request<MessageResponse>(this.url(`/sessions/${sessionId}/messages`), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ text }),
    });
  }

  getHistory(sessionId: string): Promise<HistoryResponse> {
    return request<HistoryResponse>(this.url(`/sessions/${sessionId}/history`));
  }
}

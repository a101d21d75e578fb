/**
 * Wire types of the dialog service API. The UI renders these values
 * verbatim; it never recomputes scores or indices on the client side.
 */

export interface TurnPayload {
  k: number;
  human_text: string;
  j_star: number;
  subcontext_indices: number[];
  subcontext_sentences: string[];
  candidates: string[];
  rho: number[];
  selected_index: number;
  reply: string;
  low_confidence: boolean;
  used_fallback: boolean;
  duplicate_candidates: boolean;
  timing_ms: number;
}

export interface SessionCreated {
  session_id: string;
  case_id: string;
  m: number;
  reply: string;
  turn: TurnPayload;
}

export interface MessageResponse {
  reply: string;
  turn: TurnPayload;
}

export interface SessionConfig {
  P: number;
  R: number;
  w: number;
  seed: number;
}

export interface HistoryResponse {
  session_id: string;
  case_id: string;
  m: number;
  config: SessionConfig;
  turns: TurnPayload[];
}

export interface CaseInfo {
  case_id: string;
  title: string;
  m: number;
}

export interface CaseList {
  cases: CaseInfo[];
}

export interface HealthResponse {
  status: string;
  cases: number;
}

/** Overrides sent when creating a session; all fields optional. */
export interface ConfigOverrides {
  P?: number;
  R?: number;
  w?: number;
  seed?: number;
}

export type ApiErrorCode =
  | 'invalid_argument'
  | 'not_found'
  | 'invalid_state'
  | 'backend_unavailable'
  | 'internal'
  | 'unreachable';

/** Structured failure: every non-2xx body, plus network-level failures. */
export class ApiError extends Error {
  readonly code: ApiErrorCode;
  readonly detail?: string;

  constructor(code: ApiErrorCode, message: string, detail?: string) {
    super(message);
    this.name = 'ApiError';
    this.code = code;
    this.detail = detail;
  }
}

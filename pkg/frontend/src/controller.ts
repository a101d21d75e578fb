/**
 * Session state machine. Holds everything the panes render and enforces
 * the one-in-flight rule: while a message is pending, further sends are
 * rejected until the reply or the error arrives.
 */

import { ApiClient } from './api.js';
import {
  ApiError,
  ConfigOverrides,
  SessionConfig,
  TurnPayload,
} from './types.js';

export interface ChatState {
  sessionId: string | null;
  caseId: string | null;
  m: number | null;
  config: SessionConfig | null;
  turns: TurnPayload[];
  busy: boolean;
  error: ApiError | null;
}

export class BusyError extends Error {
  constructor() {
    super('a message is already in flight for this session');
    this.name = 'BusyError';
  }
}

export class ChatController {
  private state: ChatState = {
    sessionId: null,
    caseId: null,
    m: null,
    config: null,
    turns: [],
    busy: false,
    error: null,
  };
  private listeners: Array<(state: ChatState) => void> = [];

  constructor(private readonly api: ApiClient) {}

  getState(): ChatState {
    return { ...this.state, turns: [...this.state.turns] };
  }

  subscribe(listener: (state: ChatState) => void): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<ChatState>): void {
    this.state = { ...this.state, ...patch };
    const snapshot = this.getState();
    for (const listener of this.listeners) {
      listener(snapshot);
    }
  }

  /** Start a new session; replaces any existing one on success. */
  async startSession(query: string, overrides?: ConfigOverrides): Promise<void> {
    if (this.state.busy) throw new BusyError();
    this.update({ busy: true, error: null });
    try {
      const created = await this.api.createSession(query, overrides);
      const history = await this.api.getHistory(created.session_id);
      this.update({
        sessionId: created.session_id,
        caseId: created.case_id,
        m: created.m,
        config: history.config,
        turns: [created.turn],
        busy: false,
      });
    } catch (err) {
      this.update({ busy: false, error: toApiError(err) });
      throw err;
    }
  }

  /** Send one human turn. Rejects while a previous send is pending. */
  async send(text: string): Promise<void> {
    if (this.state.busy) throw new BusyError();
    if (!this.state.sessionId) {
      throw new ApiError('invalid_state', 'no session started yet');
    }
    this.update({ busy: true, error: null });
    try {
      const response = await this.api.sendMessage(this.state.sessionId, text);
      this.update({ turns: [...this.state.turns, response.turn], busy: false });
    } catch (err) {
      this.update({ busy: false, error: toApiError(err) });
      throw err;
    }
  }

  clearError(): void {
    this.update({ error: null });
  }
}

function toApiError(err: unknown): ApiError {
  if (err instanceof ApiError) return err;
  return new ApiError('internal', String(err));
}

/**
 * DOM wiring. All state lives in ChatController; this file only reads
 * form inputs, forwards them, and re-renders the three panes on every
 * state change.
 */

import { ApiClient } from './api.js';
import { BusyError, ChatController, ChatState } from './controller.js';
import { renderSessionMeta, renderTranscript, renderTransparency } from './render.js';
import { ApiError, ConfigOverrides } from './types.js';

const DEFAULT_BASE_URL = 'http://127.0.0.1:8040';

const baseUrlInput = document.getElementById('base-url') as HTMLInputElement;
const transcriptPane = document.getElementById('transcript') as HTMLDivElement;
const transparencyPane = document.getElementById('transparency') as HTMLDivElement;
const sessionMeta = document.getElementById('session-meta') as HTMLDivElement;
const banner = document.getElementById('banner') as HTMLDivElement;
const bannerText = document.getElementById('banner-text') as HTMLSpanElement;
const retryButton = document.getElementById('banner-retry') as HTMLButtonElement;
const sendForm = document.getElementById('send-form') as HTMLFormElement;
const sendInput = document.getElementById('send-input') as HTMLInputElement;
const sendButton = document.getElementById('send-button') as HTMLButtonElement;
const newForm = document.getElementById('new-session-form') as HTMLFormElement;

let controller = makeController();
let lastAction: (() => void) | null = null;

function makeController(): ChatController {
  const base = baseUrlInput.value.trim() || DEFAULT_BASE_URL;
  const fresh = new ChatController(new ApiClient(base));
  fresh.subscribe(render);
  return fresh;
}

function overridesFromForm(): ConfigOverrides {
  const overrides: ConfigOverrides = {};
  for (const key of ['P', 'R', 'w', 'seed'] as const) {
    const field = document.getElementById(`cfg-${key}`) as HTMLInputElement;
    if (field.value.trim() !== '') {
      overrides[key] = Number(field.value);
    }
  }
  return overrides;
}

function render(state: ChatState): void {
  sendInput.disabled = state.busy || state.sessionId === null;
  sendButton.disabled = state.busy || state.sessionId === null;

  if (state.error) {
    bannerText.textContent = describeError(state.error);
    retryButton.hidden = state.error.code !== 'unreachable';
    banner.hidden = false;
  } else {
    banner.hidden = true;
  }

  if (state.caseId !== null && state.m !== null && state.config !== null) {
    sessionMeta.innerHTML = renderSessionMeta(state.caseId, state.m, state.config);
  }
  transcriptPane.innerHTML = renderTranscript(state.turns);
  transcriptPane.scrollTop = transcriptPane.scrollHeight;
  if (state.caseId !== null) {
    transparencyPane.innerHTML = state.turns
      .map((turn) => renderTransparency(turn, state.caseId as string))
      .join('\n');
    transparencyPane.scrollTop = transparencyPane.scrollHeight;
  }
}

function describeError(error: ApiError): string {
  switch (error.code) {
    case 'unreachable':
      return 'Service unreachable. Is it running?';
    case 'invalid_argument':
      return `Rejected: ${error.message}`;
    case 'not_found':
      return 'Session not found on the server. Start a new one.';
    case 'backend_unavailable':
      return `Model backend unavailable: ${error.message}`;
    case 'invalid_state':
      return `Out of order: ${error.message}`;
    default:
      return error.message;
  }
}

function guarded(action: () => Promise<void>): void {
  lastAction = () => guarded(action);
  action().catch((err) => {
    if (err instanceof BusyError) return; // send box is disabled anyway
    // ApiErrors already landed in controller state; render() shows them.
  });
}

newForm.addEventListener('submit', (event) => {
  event.preventDefault();
  const queryField = document.getElementById('opening-query') as HTMLInputElement;
  const query = queryField.value.trim();
  if (!query) return;
  controller = makeController();
  guarded(() => controller.startSession(query, overridesFromForm()));
});

sendForm.addEventListener('submit', (event) => {
  event.preventDefault();
  const text = sendInput.value.trim();
  if (!text) return;
  guarded(async () => {
    await controller.send(text);
    sendInput.value = '';
  });
});

retryButton.addEventListener('click', () => {
  controller.clearError();
  if (lastAction) lastAction();
});

render(controller.getState());

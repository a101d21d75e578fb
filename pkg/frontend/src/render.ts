/**
 * Pure view builders: service payloads in, HTML strings out.
 *
 * Numeric values from the service (rho scores, j*, subcontext indices)
 * are rendered verbatim via String(...): the client never rounds,
 * recomputes or re-derives them. Bar widths are presentation-only
 * scaling of the given score.
 */

import { SessionConfig, TurnPayload } from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

/** Map a cosine-based score in [-1, 1] onto a 0..100% bar width. */
export function rhoBarWidth(rho: number): number {
  const pct = ((rho + 1) / 2) * 100;
  return Math.max(0, Math.min(100, pct));
}

export function renderTranscript(turns: TurnPayload[]): string {
  const bubbles: string[] = [];
  for (const turn of turns) {
    bubbles.push(
      `<div class="bubble human" data-turn="${turn.k}">` +
        `<span class="speaker">you</span>${escapeHtml(turn.human_text)}</div>`,
    );
    bubbles.push(
      `<div class="bubble agent" data-turn="${turn.k}">` +
        `<span class="speaker">agent</span>${escapeHtml(turn.reply)}</div>`,
    );
  }
  return bubbles.join('\n');
}

function renderFlags(turn: TurnPayload): string {
  const flags: string[] = [];
  if (turn.low_confidence) flags.push('low-confidence route');
  if (turn.used_fallback) flags.push('local fallback used');
  if (turn.duplicate_candidates) flags.push('duplicate candidates');
  if (flags.length === 0) return '';
  return `<div class="flags">${flags.map(escapeHtml).join(' · ')}</div>`;
}

function renderSubcontext(turn: TurnPayload): string {
  const rows = turn.subcontext_indices.map((index, i) => {
    const sentence = turn.subcontext_sentences[i] ?? '';
    const centered = index === turn.j_star ? ' center' : '';
    return (
      `<li class="sentence${centered}" data-index="${String(index)}">` +
      `<span class="sindex">S_${String(index)}</span>${escapeHtml(sentence)}</li>`
    );
  });
  return `<ol class="subcontext">${rows.join('')}</ol>`;
}

function renderCandidates(turn: TurnPayload): string {
  const rows = turn.candidates.map((candidate, i) => {
    const rho = turn.rho[i];
    const picked = i === turn.selected_index ? ' picked' : '';
    return (
      `<li class="candidate${picked}">` +
      `<div class="bar-track"><div class="bar" style="width: ${rhoBarWidth(rho)}%"></div></div>` +
      `<span class="rho">${String(rho)}</span>` +
      `<span class="text">${escapeHtml(candidate)}</span></li>`
    );
  });
  return `<ol class="candidates">${rows.join('')}</ol>`;
}

/** The per-agent-turn "why this reply" panel. */
export function renderTransparency(turn: TurnPayload, caseId: string): string {
  return (
    `<section class="turn-panel" data-turn="${turn.k}">` +
    `<h3>turn ${turn.k}</h3>` +
    `<dl class="route">` +
    `<dt>case</dt><dd>${escapeHtml(caseId)}</dd>` +
    `<dt>j*</dt><dd class="jstar">${String(turn.j_star)}</dd>` +
    `<dt>window</dt><dd class="window">${turn.subcontext_indices.map(String).join(', ')}</dd>` +
    `<dt>picked</dt><dd class="picked-index">${String(turn.selected_index)}</dd>` +
    `</dl>` +
    renderFlags(turn) +
    renderSubcontext(turn) +
    renderCandidates(turn) +
    `</section>`
  );
}

export function renderSessionMeta(caseId: string, m: number, config: SessionConfig): string {
  return (
    `case <strong>${escapeHtml(caseId)}</strong> (M=${String(m)}) · ` +
    `P=${String(config.P)} R=${String(config.R)} w=${String(config.w)} seed=${String(config.seed)}`
  );
}

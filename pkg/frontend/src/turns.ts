// Chat turn model and HTML rendering. Every displayed string is either a
// verbatim response field (escaped) or fixed UI chrome; nothing is
// synthesized client-side.

import type { AskParams, PipelineResponse, RetrievedRow } from "./api.js";

export type TurnStatus = "ok" | "no_answer" | "degraded";

export interface ChatTurn {
  question: string;
  status: TurnStatus;
  answer: string;
  extractive: string;
  documentTitle: string;
  articleTitle: string;
  scores: Record<string, number>;
  notes: string[];
  response: PipelineResponse;
  /** Control values this turn was submitted with; reused for evidence lookups. */
  params?: AskParams;
}

export const NO_ANSWER_MESSAGE = "No answer found in the corpus for this question.";
export const FALLBACK_BADGE = "extractive fallback";

export function turnFromResponse(question: string, response: PipelineResponse): ChatTurn {
  let status: TurnStatus = "ok";
  if (response.no_answer) {
    status = "no_answer";
  } else if (response.degradation.length > 0 || response.generator_source === "fallback") {
    status = "degraded";
  }
  return {
    question,
    status,
    answer: response.abstractive,
    extractive: response.extractive,
    documentTitle: response.document_title,
    articleTitle: response.article_title,
    scores: response.scores,
    notes: response.degradation,
    response,
  };
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Escaped article text with <mark> around each span's character range. */
export function highlightSpans(text: string, spans: [number, number][]): string {
  const ordered = [...spans].sort((a, b) => a[0] - b[0]);
  const parts: string[] = [];
  let cursor = 0;
  for (const [start, end] of ordered) {
    if (start < cursor || end > text.length) continue; // ignore out-of-range spans
    parts.push(escapeHtml(text.slice(cursor, start)));
    parts.push(`<mark>${escapeHtml(text.slice(start, end))}</mark>`);
    cursor = end;
  }
  parts.push(escapeHtml(text.slice(cursor)));
  return parts.join("");
}

export function renderTurnHtml(turn: ChatTurn): string {
  const parts = [
    `<div class="turn turn-${turn.status}">`,
    `<div class="bubble question">${escapeHtml(turn.question)}</div>`,
  ];
  if (turn.status === "no_answer") {
    parts.push(`<div class="bubble answer empty-state">${escapeHtml(NO_ANSWER_MESSAGE)}</div>`);
  } else {
    parts.push(`<div class="bubble answer">${escapeHtml(turn.answer)}</div>`);
    parts.push(`<div class="citation">${escapeHtml(turn.documentTitle)}</div>`);
    if (turn.status === "degraded") {
      parts.push(`<span class="badge">${escapeHtml(FALLBACK_BADGE)}</span>`);
    }
  }
  for (const note of turn.notes) {
    parts.push(`<div class="note">${escapeHtml(note)}</div>`);
  }
  parts.push("</div>");
  return parts.join("");
}

/** One table row per retrieved candidate, in the order the server ranked them. */
export function renderContextRowsHtml(rows: RetrievedRow[], winnerId: string | null): string {
  return rows
    .map((row, i) => {
      const cls = row.article_id === winnerId ? "context-row winner" : "context-row";
      return (
        `<tr class="${cls}" data-article-id="${escapeHtml(row.article_id)}">` +
        `<td>${i + 1}</td>` +
        `<td>${escapeHtml(row.article_id)}</td>` +
        `<td>${escapeHtml(row.title)}</td>` +
        `<td>${row.fused.toFixed(4)}</td>` +
        `<td>${row.lexical.toFixed(4)}</td>` +
        `<td>${row.dense.toFixed(4)}</td>` +
        "</tr>"
      );
    })
    .join("");
}

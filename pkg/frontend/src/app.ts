// DOM wiring: binds the form, parameter controls, chat log, and evidence
// panel to the controller. All rendering goes through turns.ts so the
// markup matches what the tests pin down.

import { QaClient, type AskParams, type FusionMode } from "./api.js";
import { ChatController, type ChatView } from "./controller.js";
import {
  escapeHtml,
  highlightSpans,
  renderContextRowsHtml,
  renderTurnHtml,
  type ChatTurn,
} from "./turns.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export function startApp(): void {
  const form = byId<HTMLFormElement>("ask-form");
  const questionInput = byId<HTMLInputElement>("question-input");
  const topkInput = byId<HTMLInputElement>("topk-input");
  const alphaInput = byId<HTMLInputElement>("alpha-input");
  const alphaValue = byId<HTMLSpanElement>("alpha-value");
  const fusionSelect = byId<HTMLSelectElement>("fusion-select");
  const submitButton = byId<HTMLButtonElement>("submit-btn");
  const chatLog = byId<HTMLDivElement>("chat-log");
  const errorBanner = byId<HTMLDivElement>("error-banner");
  const evidenceRows = byId<HTMLTableSectionElement>("evidence-rows");
  const evidenceArticle = byId<HTMLDivElement>("evidence-article");

  const client = new QaClient("");
  let latestTurn: ChatTurn | null = null;

  const view: ChatView = {
    setPending(pending) {
      for (const el of [questionInput, topkInput, alphaInput, fusionSelect, submitButton]) {
        el.disabled = pending;
      }
      submitButton.textContent = pending ? "Asking…" : "Ask";
    },
    appendTurn(turn) {
      latestTurn = turn;
      chatLog.insertAdjacentHTML("beforeend", renderTurnHtml(turn));
      chatLog.scrollTop = chatLog.scrollHeight;
      showEvidence(turn);
    },
    showError(message) {
      errorBanner.textContent = message;
      errorBanner.hidden = false;
    },
    clearError() {
      errorBanner.hidden = true;
    },
  };
  const controller = new ChatController(client, view);

  function readParams(): AskParams {
    const params: AskParams = {};
    if (topkInput.value) params.topK = Number(topkInput.value);
    if (alphaInput.value) params.alpha = Number(alphaInput.value);
    params.fusion = fusionSelect.value as FusionMode;
    return params;
  }

  function showEvidence(turn: ChatTurn): void {
    evidenceRows.innerHTML = renderContextRowsHtml(turn.response.retrieved, turn.response.article_id);
    if (turn.response.article_id !== null) {
      showArticle(turn, turn.response.article_id);
    } else {
      evidenceArticle.innerHTML = "";
    }
  }

  function showArticle(turn: ChatTurn, articleId: string): void {
    if (articleId === turn.response.article_id) {
      // winning article: decoded spans highlighted in place
      evidenceArticle.innerHTML =
        `<h3>${escapeHtml(turn.articleTitle)}</h3>` +
        `<p>${highlightSpans(turn.response.article_text, turn.response.spans)}</p>`;
      return;
    }
    evidenceArticle.innerHTML = "<p class=\"loading\">Loading…</p>";
    controller
      .contextsFor(turn)
      .then((contexts) => {
        const ctx = contexts.find((row) => row.article_id === articleId);
        evidenceArticle.innerHTML = ctx
          ? `<h3>${escapeHtml(ctx.title)}</h3><p>${escapeHtml(ctx.text)}</p>`
          : "<p>Article text not available at this depth.</p>";
      })
      .catch(() => {
        evidenceArticle.innerHTML = "<p>Could not load the article text.</p>";
      });
  }

  alphaInput.addEventListener("input", () => {
    alphaValue.textContent = alphaInput.value;
  });

  evidenceRows.addEventListener("click", (event) => {
    const row = (event.target as HTMLElement).closest("tr[data-article-id]");
    if (row && latestTurn) {
      showArticle(latestTurn, row.getAttribute("data-article-id") ?? "");
    }
  });

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void controller.submit(questionInput.value, readParams()).then((accepted) => {
      if (accepted) questionInput.value = "";
    });
  });

  void client
    .health()
    .then((info) => {
      byId<HTMLSpanElement>("corpus-info").textContent =
        `${info.articles} articles · ${info.fusion_mode}/${info.lexical_method}`;
    })
    .catch(() => {
      view.showError("The answering service is not reachable.");
    });
}

startApp();

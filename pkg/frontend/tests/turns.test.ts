import { describe, expect, it } from "vitest";

import {
  FALLBACK_BADGE,
  NO_ANSWER_MESSAGE,
  escapeHtml,
  highlightSpans,
  renderContextRowsHtml,
  renderTurnHtml,
  turnFromResponse,
} from "../src/turns.js";
import { makeNoAnswer, makeResponse } from "./fixtures.js";

describe("turnFromResponse", () => {
  it("marks a clean remote-generated answer as ok", () => {
    const turn = turnFromResponse("q", makeResponse());
    expect(turn.status).toBe("ok");
    expect(turn.answer).toBe("The tuition deposit is 200 euro.");
    expect(turn.documentTitle).toBe("Admission Regulation");
  });

  it("marks generator fallback as degraded", () => {
    const turn = turnFromResponse("q", makeResponse({ generator_source: "fallback" }));
    expect(turn.status).toBe("degraded");
  });

  it("marks responses with degradation notes as degraded", () => {
    const response = makeResponse({ degradation: ["generator fell back: timeout"] });
    const turn = turnFromResponse("q", response);
    expect(turn.status).toBe("degraded");
    expect(turn.notes).toEqual(["generator fell back: timeout"]);
  });

  it("marks no_answer responses distinctly, even with notes", () => {
    const response = makeNoAnswer();
    response.degradation = ["labeler failed on adm-1: boom"];
    expect(turnFromResponse("q", response).status).toBe("no_answer");
  });
});

describe("renderTurnHtml", () => {
  it("renders the answer and document title exactly as returned", () => {
    const response = makeResponse({
      abstractive: 'Deposit is 200 "euro" & <b>due</b> in 14 days.',
      document_title: "Admission Regulation <2024>",
    });
    const html = renderTurnHtml(turnFromResponse("How much?", response));
    expect(html).toContain(escapeHtml('Deposit is 200 "euro" & <b>due</b> in 14 days.'));
    expect(html).toContain(escapeHtml("Admission Regulation <2024>"));
    expect(html).not.toContain("<b>due</b>"); // response markup is never interpreted
  });

  it("renders the three statuses as distinct states", () => {
    const ok = renderTurnHtml(turnFromResponse("q", makeResponse()));
    const degraded = renderTurnHtml(
      turnFromResponse("q", makeResponse({ generator_source: "fallback" })),
    );
    const noAnswer = renderTurnHtml(turnFromResponse("q", makeNoAnswer()));

    expect(ok).toContain("turn-ok");
    expect(ok).not.toContain(FALLBACK_BADGE);
    expect(degraded).toContain("turn-degraded");
    expect(degraded).toContain(FALLBACK_BADGE);
    expect(noAnswer).toContain("turn-no_answer");
    expect(noAnswer).toContain(NO_ANSWER_MESSAGE);
    expect(noAnswer).not.toContain("citation");
  });

  it("shows degradation notes verbatim", () => {
    const response = makeResponse({ degradation: ["generator fell back: 502"] });
    const html = renderTurnHtml(turnFromResponse("q", response));
    expect(html).toContain("generator fell back: 502");
  });
});

describe("highlightSpans", () => {
  it("wraps each span in a mark tag", () => {
    const html = highlightSpans("the deposit is 200 euro today", [[15, 23]]);
    expect(html).toBe("the deposit is <mark>200 euro</mark> today");
  });

  it("handles multiple spans in any input order", () => {
    const html = highlightSpans("a b c d e", [
      [8, 9],
      [0, 1],
    ]);
    expect(html).toBe("<mark>a</mark> b c d <mark>e</mark>");
  });

  it("escapes text inside and outside the marks", () => {
    const html = highlightSpans("x < y & z", [[4, 5]]);
    expect(html).toBe("x &lt; <mark>y</mark> &amp; z");
  });

  it("returns plain escaped text when there are no spans", () => {
    expect(highlightSpans("a & b", [])).toBe("a &amp; b");
  });

  it("ignores spans outside the text", () => {
    expect(highlightSpans("short", [[0, 99]])).toBe("short");
  });
});

describe("renderContextRowsHtml", () => {
  it("renders one row per candidate in server order", () => {
    const response = makeResponse();
    const html = renderContextRowsHtml(response.retrieved, response.article_id);
    const rows = html.match(/<tr/g) ?? [];
    expect(rows.length).toBe(2);
    expect(html.indexOf("adm-4")).toBeLessThan(html.indexOf("adm-2"));
  });

  it("tags the winning article's row", () => {
    const response = makeResponse();
    const html = renderContextRowsHtml(response.retrieved, response.article_id);
    expect(html).toContain('class="context-row winner" data-article-id="adm-4"');
    expect(html).toContain('class="context-row" data-article-id="adm-2"');
  });

  it("shows fused, lexical, and dense scores for every row", () => {
    const response = makeResponse();
    const html = renderContextRowsHtml(response.retrieved, null);
    for (const value of ["0.9100", "8.2000", "0.7000", "0.4200", "1.1000", "0.4000"]) {
      expect(html).toContain(`<td>${value}</td>`);
    }
  });
});

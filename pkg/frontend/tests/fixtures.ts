import type { ContextRow, PipelineResponse } from "../src/api.js";

export function makeResponse(overrides: Partial<PipelineResponse> = {}): PipelineResponse {
  return {
    question: "How large is the tuition deposit?",
    no_answer: false,
    abstractive: "The tuition deposit is 200 euro.",
    extractive: "a tuition deposit of 200 euro",
    article_id: "adm-4",
    article_title: "Tuition deposit",
    document_title: "Admission Regulation",
    article_text: "Admitted candidates confirm their place by paying a tuition deposit of 200 euro.",
    spans: [[50, 79]],
    scores: { fused: 0.91, lexical: 8.2, dense: 0.7, reader: 0.8, final: 0.83 },
    generator_source: "remote",
    retrieved: [
      { article_id: "adm-4", title: "Tuition deposit", fused: 0.91, lexical: 8.2, dense: 0.7 },
      { article_id: "adm-2", title: "Application deadlines", fused: 0.42, lexical: 1.1, dense: 0.4 },
    ],
    degradation: [],
    ...overrides,
  };
}

export function makeNoAnswer(): PipelineResponse {
  return makeResponse({
    no_answer: true,
    abstractive: "",
    extractive: "",
    article_id: null,
    article_title: "",
    document_title: "",
    article_text: "",
    spans: [],
    scores: {},
    generator_source: null,
  });
}

export function makeContexts(): ContextRow[] {
  return [
    {
      article_id: "adm-4",
      title: "Tuition deposit",
      document_title: "Admission Regulation",
      text: "Admitted candidates confirm their place by paying a tuition deposit of 200 euro.",
      fused: 0.91,
      lexical: 8.2,
      dense: 0.7,
    },
    {
      article_id: "adm-2",
      title: "Application deadlines",
      document_title: "Admission Regulation",
      text: "The application portal opens on the first Monday of March.",
      fused: 0.42,
      lexical: 1.1,
      dense: 0.4,
    },
  ];
}

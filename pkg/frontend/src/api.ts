// Typed fetch client for the QA service. The UI talks to exactly three
// routes: POST /ask, POST /retrieve, GET /health.

export type FusionMode = "weight" | "multiplication" | "lexical-only" | "dense-only";

export interface AskParams {
  topK?: number;
  alpha?: number;
  fusion?: FusionMode;
}

export interface AskPayload {
  question: string;
  top_k?: number;
  alpha?: number;
  fusion?: string;
}

export interface RetrievedRow {
  article_id: string;
  title: string;
  fused: number;
  lexical: number;
  dense: number;
}

export interface ContextRow extends RetrievedRow {
  document_title: string;
  text: string;
}

export interface PipelineResponse {
  question: string;
  no_answer: boolean;
  abstractive: string;
  extractive: string;
  article_id: string | null;
  article_title: string;
  document_title: string;
  article_text: string;
  spans: [number, number][];
  scores: Record<string, number>;
  generator_source: string | null;
  retrieved: RetrievedRow[];
  degradation: string[];
}

export interface HealthInfo {
  status: string;
  articles: number;
  documents: number;
  embedding_dim: number;
  fusion_mode: string;
  lexical_method: string;
}

/** Non-2xx reply; carries the server's detail message when present. */
export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

/** Map UI control values onto the wire format, dropping unset fields. */
export function buildAskPayload(question: string, params: AskParams = {}): AskPayload {
  const payload: AskPayload = { question: question.trim() };
  if (params.topK !== undefined) payload.top_k = params.topK;
  if (params.alpha !== undefined) payload.alpha = params.alpha;
  if (params.fusion !== undefined) payload.fusion = params.fusion;
  return payload;
}

export class QaClient {
  constructor(private baseUrl: string = "") {}

  async ask(question: string, params: AskParams = {}): Promise<PipelineResponse> {
    return this.post<PipelineResponse>("/ask", buildAskPayload(question, params));
  }

  async retrieve(
    question: string,
    params: AskParams = {},
  ): Promise<{ question: string; contexts: ContextRow[] }> {
    return this.post("/retrieve", buildAskPayload(question, params));
  }

  async health(): Promise<HealthInfo> {
    const resp = await fetch(this.baseUrl + "/health");
    if (!resp.ok) throw new ApiError(resp.status, `health check failed (${resp.status})`);
    return resp.json();
  }

  private async post<T>(path: string, body: AskPayload): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = `request failed (${resp.status})`;
      try {
        const parsed = await resp.json();
        if (typeof parsed?.detail === "string") detail = parsed.detail;
      } catch {
        // keep the generic message for non-JSON error bodies
      }
      throw new ApiError(resp.status, detail);
    }
    return resp.json();
  }
}

// Typed client for the evidence search service. The console performs no
// scoring math of its own: every number shown comes from these responses.

export type ModalityMode = "All" | "Vision" | "Text";

export interface SearchRequest {
  text?: string;
  visual_vecs?: number[][];
  k: number;
  mode: ModalityMode;
  exact: boolean;
  probe?: number;
}

export interface Attribution {
  q_token_index: number;
  d_token_index: number;
  sim: number;
}

export interface Hit {
  doc_id: string;
  score: number;
  text_snippet: string;
  attributions: Attribution[];
}

export interface SearchResponse {
  hits: Hit[];
}

export interface HealthResponse {
  status: string;
  corpus_size: number;
  dim: number;
}

export interface DocResponse {
  id: string;
  kind: string;
  text?: string;
  visual_vecs?: number[][];
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function errorDetail(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    return typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return resp.statusText || "request failed";
  }
}

export class SearchClient {
  constructor(private baseUrl: string = "") {}

  // At most one search is in flight; a new submission cancels the pending one.
  private controller: AbortController | null = null;

  async search(req: SearchRequest): Promise<SearchResponse> {
    this.controller?.abort();
    this.controller = new AbortController();
    const resp = await fetch(`${this.baseUrl}/api/search`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
      signal: this.controller.signal,
    });
    if (!resp.ok) throw new ApiError(resp.status, await errorDetail(resp));
    return (await resp.json()) as SearchResponse;
  }

  async doc(docId: string): Promise<DocResponse> {
    const resp = await fetch(`${this.baseUrl}/api/doc/${encodeURIComponent(docId)}`);
    if (!resp.ok) throw new ApiError(resp.status, await errorDetail(resp));
    return (await resp.json()) as DocResponse;
  }

  async health(): Promise<HealthResponse> {
    const resp = await fetch(`${this.baseUrl}/api/health`);
    if (!resp.ok) throw new ApiError(resp.status, await errorDetail(resp));
    return (await resp.json()) as HealthResponse;
  }
}

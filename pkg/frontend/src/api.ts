/** Typed fetch client for the session service. The UI talks to the engine
 *  exclusively through these endpoints. */

export interface GridSpec {
  cols: number;
  rows: number;
  cell_w: number;
  cell_h: number;
}

export interface CellRect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface CollageImage {
  id: string;
  url: string;
  cell: CellRect;
}

export interface CollagePayload {
  images: CollageImage[];
  grid: GridSpec;
}

/** One synthesized gaze sample: [t_ms, x, y, pupil, valid]. */
export type GazeSample = [number, number, number, number, 0 | 1];

export interface SessionRequest {
  corpus: string;
  modality?: string;
  rounds?: number;
  seed?: number;
  collage_size?: number;
  target_category?: string | null;
}

export interface SessionSummary {
  complete: boolean;
  config: Record<string, unknown>;
  rounds_completed: number;
  shown: string[][];
  scores: number[][];
  eta: number[] | null;
  eta_trace: number[][];
  feature_spaces: string[];
  tensor_rounds: number[];
  n_images_shown: number;
  relevant_per_round?: number[];
  precision_curve?: number[];
}

export interface SessionView {
  session_id: string;
  round: number;
  rounds: number;
  done?: boolean;
  expires_at: number;
  config: Record<string, unknown>;
  collage: CollagePayload | null;
}

export interface FeedbackBody {
  round: number;
  clicks: string[];
  gaze?: GazeSample[] | null;
  scores?: Record<string, number> | null;
}

export interface FeedbackResponse {
  round: number;
  next_round: number;
  done: boolean;
  scores: Record<string, number>;
  collage: CollagePayload | null;
  summary: SessionSummary | null;
}

export interface SummaryResponse {
  session_id: string;
  done: boolean;
  summary: SessionSummary;
}

export interface CorpusInfo {
  name: string;
  images: number;
  features: string[];
  categories: string[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) =>
      globalThis.fetch(input, init),
  ) {}

  async createSession(body: SessionRequest): Promise<SessionView> {
    return this.request("POST", "/api/sessions", body);
  }

  async getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  async postFeedback(
    sessionId: string,
    body: FeedbackBody,
  ): Promise<FeedbackResponse> {
    return this.request("POST", `/api/sessions/${sessionId}/feedback`, body);
  }

  async getSummary(sessionId: string): Promise<SummaryResponse> {
    return this.request("GET", `/api/sessions/${sessionId}/summary`);
  }

  async listCorpora(): Promise<CorpusInfo[]> {
    const body = await this.request<{ corpora: CorpusInfo[] }>(
      "GET",
      "/api/corpora",
    );
    return body.corpora;
  }

  /** Absolute URL for a collage image's asset path. */
  assetUrl(path: string): string {
    return this.baseUrl + path;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = `${response.status} ${response.statusText}`;
      try {
        const parsed = (await response.json()) as { detail?: unknown };
        if (typeof parsed.detail === "string") detail = parsed.detail;
      } catch {
        /* non-JSON error body; keep the status line */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }
}

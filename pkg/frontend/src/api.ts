/** Typed client for the prediction service's JSON endpoints. */

export interface RankEntry {
  char: string;
  prob: number;
}

export interface EngineInfo {
  kind: string;
  lambda: number;
  beam: { size: number; depth: number };
}

export interface RankingPayload {
  ranking: RankEntry[];
  top_k: number;
  history: string;
  engine: EngineInfo;
}

/** Parsed payload plus the exact bytes the service sent. */
export interface ServiceResponse {
  payload: RankingPayload;
  raw: string;
}

export class ServiceError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ServiceError";
  }
}

interface MinimalResponse {
  ok: boolean;
  status: number;
  text(): Promise<string>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string }
) => Promise<MinimalResponse>;

export class ServiceClient {
  constructor(
    private baseUrl = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init)
  ) {}

  private async post(path: string, body: unknown): Promise<string> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const text = await resp.text();
    if (!resp.ok) {
      let detail = text;
      try {
        detail = JSON.parse(text).detail ?? text;
      } catch {
        // non-JSON error body, keep it verbatim
      }
      throw new ServiceError(resp.status, String(detail));
    }
    return text;
  }

  async predict(history: string, topK = 27): Promise<ServiceResponse> {
    const raw = await this.post("/v1/predict", { history, top_k: topK });
    return { payload: JSON.parse(raw) as RankingPayload, raw };
  }

  async keystroke(sessionId: string, char: string): Promise<ServiceResponse> {
    const raw = await this.post("/v1/session/keystroke", {
      session_id: sessionId,
      char,
    });
    return { payload: JSON.parse(raw) as RankingPayload, raw };
  }

  async reset(sessionId: string): Promise<void> {
    await this.post("/v1/session/reset", { session_id: sessionId });
  }
}

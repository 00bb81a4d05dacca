import type {
  InteractionsResponse,
  ModelInfo,
  SchoolDetail,
  SchoolSummary,
  WhatifRequest,
  WhatifResponse,
} from "./types.js";

/** Shape of fetch the client depends on; tests inject a stub. */
export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** status 0 means the server was unreachable (network error, not HTTP). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `cannot reach ${this.baseUrl}: ${String(err)}`);
    }
    if (!resp.ok) {
      let detail = `${resp.status} ${resp.statusText}`;
      try {
        const body: unknown = await resp.json();
        if (
          body &&
          typeof body === "object" &&
          typeof (body as { detail?: unknown }).detail === "string"
        ) {
          detail = (body as { detail: string }).detail;
        }
      } catch {
        // non-JSON error body: keep the status line
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  schools(): Promise<SchoolSummary[]> {
    return this.request("/schools");
  }

  school(id: string): Promise<SchoolDetail> {
    return this.request(`/schools/${encodeURIComponent(id)}`);
  }

  model(): Promise<ModelInfo> {
    return this.request("/model");
  }

  whatif(req: WhatifRequest): Promise<WhatifResponse> {
    return this.request("/whatif", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  interactions(
    schoolId: string,
    features?: string[],
  ): Promise<InteractionsResponse> {
    const params = new URLSearchParams({ school_id: schoolId });
    if (features && features.length > 0) {
      params.set("features", features.join(","));
    }
    return this.request(`/interactions?${params.toString()}`);
  }
}

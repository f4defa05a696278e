import type {
  HealthStatus,
  LiveStatus,
  LiveWindow,
  SessionPage,
  SessionRecord,
  TrendResponse,
  WaveformResponse,
} from "./types.js";

/** Error raised for any non-2xx response, carrying the service's error code. */
export class ApiRequestError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.name = "ApiRequestError";
    this.status = status;
    this.code = code;
  }
}

export interface ListSessionsQuery {
  subjectId?: string;
  from?: string;
  to?: string;
  limit?: number;
  cursor?: string;
}

export interface LiveStartRequest {
  subject_id: string;
  profile: "healthy" | "dysphagic";
  duration_s: number;
  volume_ml: number;
  seed?: number;
}

async function parseError(response: Response): Promise<ApiRequestError> {
  let code = "http_error";
  let message = `request failed with status ${response.status}`;
  try {
    const body: unknown = await response.json();
    if (typeof body === "object" && body !== null) {
      const record = body as Record<string, unknown>;
      if (typeof record.code === "string" && typeof record.message === "string") {
        code = record.code;
        message = record.message;
      } else if (typeof record.detail === "string") {
        // Routing-level errors (405, unknown path) use the framework's shape.
        message = record.detail;
      }
    }
  } catch {
    // Non-JSON error body; keep the status-based message.
  }
  return new ApiRequestError(response.status, code, message);
}

/**
 * Typed client for the session service.
 *
 * Every value the dashboard displays comes out of these responses verbatim;
 * the client performs no signal processing or scoring of its own.
 */
export class DashboardApi {
  readonly baseUrl: string;

  constructor(baseUrl = "") {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  health(): Promise<HealthStatus> {
    return this.request<HealthStatus>("/healthz");
  }

  listSessions(query: ListSessionsQuery = {}): Promise<SessionPage> {
    const params = new URLSearchParams();
    if (query.subjectId !== undefined) params.set("subject_id", query.subjectId);
    if (query.from !== undefined) params.set("from", query.from);
    if (query.to !== undefined) params.set("to", query.to);
    if (query.limit !== undefined) params.set("limit", String(query.limit));
    if (query.cursor !== undefined) params.set("cursor", query.cursor);
    const qs = params.toString();
    return this.request<SessionPage>(qs === "" ? "/sessions" : `/sessions?${qs}`);
  }

  getSession(sessionId: string): Promise<SessionRecord> {
    return this.request<SessionRecord>(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  getWaveform(
    sessionId: string,
    options: { points?: number; kind?: "raw" | "envelope" } = {},
  ): Promise<WaveformResponse> {
    const params = new URLSearchParams();
    if (options.points !== undefined) params.set("points", String(options.points));
    if (options.kind !== undefined) params.set("kind", options.kind);
    const qs = params.toString();
    const suffix = qs === "" ? "" : `?${qs}`;
    return this.request<WaveformResponse>(
      `/sessions/${encodeURIComponent(sessionId)}/waveform${suffix}`,
    );
  }

  scoreSession(sessionId: string): Promise<SessionRecord> {
    return this.post<SessionRecord>(`/sessions/${encodeURIComponent(sessionId)}/score`);
  }

  getTrend(subjectId: string): Promise<TrendResponse> {
    return this.request<TrendResponse>(`/subjects/${encodeURIComponent(subjectId)}/trend`);
  }

  liveStart(body: LiveStartRequest): Promise<LiveStatus> {
    return this.post<LiveStatus>("/live/start", body);
  }

  liveWindow(seconds?: number): Promise<LiveWindow> {
    const suffix = seconds === undefined ? "" : `?seconds=${seconds}`;
    return this.request<LiveWindow>(`/live/window${suffix}`);
  }

  liveStop(): Promise<SessionRecord> {
    return this.post<SessionRecord>("/live/stop");
  }
}

import { vi } from "vitest";
import type { SessionRecord, TrendPoint } from "../src/types.js";

export interface RecordedCall {
  method: string;
  url: URL;
  body: unknown;
}

export interface FetchRoute {
  method: string;
  /** Matched against the request's path (no query string). */
  path: string | RegExp;
  /** Response body; a function receives the recorded call. */
  reply: unknown | ((call: RecordedCall) => unknown);
  status?: number;
}

export interface FetchStub {
  calls: RecordedCall[];
  /** Recorded calls filtered by method and path substring. */
  sent(method: string, pathPart: string): RecordedCall[];
}

function jsonResponse(body: unknown, status: number): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/**
 * Installs a global fetch stub. Routes are matched first to last; an
 * unmatched request fails the test loudly.
 */
export function stubFetch(routes: FetchRoute[]): FetchStub {
  const calls: RecordedCall[] = [];
  const impl = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = new URL(String(input), "http://dashboard.test");
    const method = (init?.method ?? "GET").toUpperCase();
    let body: unknown = null;
    if (typeof init?.body === "string") {
      body = JSON.parse(init.body);
    }
    const call: RecordedCall = { method, url, body };
    calls.push(call);
    for (const route of routes) {
      const pathMatches =
        typeof route.path === "string" ? url.pathname === route.path : route.path.test(url.pathname);
      if (route.method.toUpperCase() === method && pathMatches) {
        const payload = typeof route.reply === "function" ? (route.reply as (c: RecordedCall) => unknown)(call) : route.reply;
        return jsonResponse(payload, route.status ?? 200);
      }
    }
    throw new Error(`unmatched request: ${method} ${url.pathname}${url.search}`);
  };
  vi.stubGlobal("fetch", vi.fn(impl));
  return {
    calls,
    sent(method: string, pathPart: string): RecordedCall[] {
      return calls.filter((c) => c.method === method.toUpperCase() && c.url.pathname.includes(pathPart));
    },
  };
}

/** Resolves once promise jobs queued so far have run. */
export async function flushAsync(times = 12): Promise<void> {
  for (let i = 0; i < times; i += 1) {
    await Promise.resolve();
  }
}

let recordCounter = 0;

export function makeRecord(overrides: Partial<SessionRecord> = {}): SessionRecord {
  recordCounter += 1;
  return {
    session_id: `s${String(recordCounter).padStart(4, "0")}`,
    subject_id: "S01",
    recorded_at: "2026-08-17T04:01:37.679Z",
    sample_rate_hz: 250.0,
    n_channels: 4,
    n_samples: 800,
    volume_ml: 10,
    health_index: null,
    model_version: null,
    resync_events: 0,
    ...overrides,
  };
}

export function makeTrendPoint(overrides: Partial<TrendPoint> = {}): TrendPoint {
  recordCounter += 1;
  return {
    session_id: `s${String(recordCounter).padStart(4, "0")}`,
    recorded_at: "2026-08-17T04:01:37.679Z",
    health_index: 0.75,
    volume_ml: 10,
    ...overrides,
  };
}

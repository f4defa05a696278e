import { afterEach, describe, expect, it, vi } from "vitest";
import { DashboardApi } from "../src/api.js";
import { mountDashboard } from "../src/main.js";
import { makeRecord, stubFetch, type FetchStub } from "./helpers.js";

const HEALTH = { status: "ok", sessions: 3, model_version: "cfb006dd9592a3db" };

function mountWithRecord(healthIndex: number | null): { root: HTMLElement; stub: FetchStub } {
  const record = makeRecord({ session_id: "sX", subject_id: "S01", health_index: healthIndex });
  const scored = { ...record, health_index: 0.49479271024654525, model_version: "cfb006dd9592a3db" };
  const stub = stubFetch([
    { method: "GET", path: "/healthz", reply: HEALTH },
    { method: "GET", path: "/sessions", reply: { sessions: [record], next_cursor: null } },
    { method: "POST", path: "/sessions/sX/score", reply: scored },
    {
      method: "GET",
      path: "/sessions/sX/waveform",
      reply: {
        session_id: "sX",
        kind: "raw",
        mode: "samples",
        sample_rate_hz: 250.0,
        source_samples: 2,
        times_s: [0, 0.004],
        channels: [
          [1, 2],
          [3, 4],
          [5, 6],
          [7, 8],
        ],
      },
    },
    {
      method: "GET",
      path: "/subjects/S01/trend",
      reply: {
        subject_id: "S01",
        points: [
          {
            session_id: "sX",
            recorded_at: record.recorded_at,
            health_index: 0.49479271024654525,
            volume_ml: 10,
          },
        ],
      },
    },
  ]);
  const root = document.createElement("div");
  document.body.append(root);
  mountDashboard(root, new DashboardApi());
  return { root, stub };
}

describe("dashboard composition", () => {
  afterEach(() => {
    vi.unstubAllGlobals();
    document.body.replaceChildren();
  });

  it("stacks every panel in one column, live capture first", async () => {
    const { root } = mountWithRecord(null);
    await vi.waitFor(() => {
      expect(root.querySelector(".session-row")).not.toBeNull();
    });

    const order = [...root.children].map((child) => child.className);
    expect(order).toEqual([
      "", // header carries no class
      "panel live-panel",
      "subject-filter",
      "panel session-list",
      "panel session-detail",
      "panel waveform-view",
      "panel trend-view",
    ]);
  });

  it("shows the service health summary verbatim in the header", async () => {
    const { root } = mountWithRecord(null);

    await vi.waitFor(() => {
      expect((root.querySelector(".health-pill") as HTMLElement).dataset.state).toBe("ok");
    });

    expect(root.querySelector(".health-pill")!.textContent).toBe("ok · 3 sessions · model cfb006dd");
  });

  it("opens a session into the detail, waveform, and trend panels", async () => {
    const { root, stub } = mountWithRecord(null);
    await vi.waitFor(() => {
      expect(root.querySelector(".session-open")).not.toBeNull();
    });

    (root.querySelector(".session-open") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      expect(stub.sent("GET", "/waveform").length).toBeGreaterThan(0);
      expect(stub.sent("GET", "/trend").length).toBeGreaterThan(0);
    });

    const detailText = root.querySelector(".session-detail")!.textContent!;
    expect(detailText).toContain("sX");
    expect(detailText).toContain("unscored");
  });

  it("scores through the service and displays the returned index digit for digit", async () => {
    const { root, stub } = mountWithRecord(null);
    await vi.waitFor(() => {
      expect(root.querySelector(".session-open")).not.toBeNull();
    });
    (root.querySelector(".session-open") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      expect(root.querySelector(".score-button")).not.toBeNull();
    });

    (root.querySelector(".score-button") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      expect(stub.sent("POST", "/score").length).toBe(1);
      expect(root.querySelector(".session-detail")!.textContent).toContain("0.49479271024654525");
    });

    const dot = root.querySelector<SVGCircleElement>(".trend-dot");
    expect(dot).not.toBeNull();
    expect(dot!.dataset.healthIndex).toBe("0.49479271024654525");
  });
});

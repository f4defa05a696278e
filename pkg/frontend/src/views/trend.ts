import type { DashboardApi } from "../api.js";
import { ApiRequestError } from "../api.js";
import { applyRemoteState, type RemoteData } from "../remote.js";
import type { TrendResponse } from "../types.js";
import { pointString, scaleLinear, svgElement } from "../svg.js";

export const TREND_WIDTH = 640;
export const TREND_HEIGHT = 220;
export const TREND_MARGIN = { top: 10, right: 14, bottom: 24, left: 34 } as const;
export const RISK_THRESHOLD = 0.5;

export interface TrendView {
  readonly el: HTMLElement;
  load(subjectId: string): Promise<void>;
  clear(): void;
}

/**
 * Health-index history for one subject, oldest to newest. The y axis is
 * pinned to the index's full range [0, 1] — it never rescales to the data —
 * and the region below the risk threshold is shaded for reference.
 */
export function createTrendView(api: DashboardApi): TrendView {
  const el = document.createElement("section");
  el.className = "panel trend-view";

  const heading = document.createElement("h2");
  heading.textContent = "Health-index trend";
  const body = document.createElement("div");
  body.className = "panel-body";
  body.dataset.state = "idle";
  el.append(heading, body);

  let requestSeq = 0;

  function renderTrend(trend: TrendResponse): void {
    const plotWidth = TREND_WIDTH - TREND_MARGIN.left - TREND_MARGIN.right;
    const plotHeight = TREND_HEIGHT - TREND_MARGIN.top - TREND_MARGIN.bottom;
    // Fixed domain: 0 at the plot floor, 1 at the ceiling, always.
    const y = scaleLinear(0, 1, TREND_MARGIN.top + plotHeight, TREND_MARGIN.top);
    const count = trend.points.length;
    const x = (index: number): number =>
      count <= 1
        ? TREND_MARGIN.left + plotWidth / 2
        : TREND_MARGIN.left + (index * plotWidth) / (count - 1);

    const svg = svgElement("svg", {
      viewBox: `0 0 ${TREND_WIDTH} ${TREND_HEIGHT}`,
      class: "chart trend-chart",
      role: "img",
    });

    const riskBand = svgElement("rect", {
      class: "risk-band",
      x: String(TREND_MARGIN.left),
      y: String(y(RISK_THRESHOLD)),
      width: String(plotWidth),
      height: String(y(0) - y(RISK_THRESHOLD)),
    });
    const riskLine = svgElement("line", {
      class: "risk-line",
      x1: String(TREND_MARGIN.left),
      x2: String(TREND_MARGIN.left + plotWidth),
      y1: String(y(RISK_THRESHOLD)),
      y2: String(y(RISK_THRESHOLD)),
    });
    svg.append(riskBand, riskLine);

    for (const tick of [0, RISK_THRESHOLD, 1]) {
      const label = svgElement("text", {
        class: "axis-label",
        x: String(TREND_MARGIN.left - 6),
        y: String(y(tick) + 4),
        "text-anchor": "end",
      });
      label.textContent = String(tick);
      svg.append(label);
    }

    const xs = trend.points.map((_, index) => x(index));
    const ys = trend.points.map((point) => y(point.health_index));
    if (count > 1) {
      svg.append(
        svgElement("polyline", {
          class: "trend-line",
          fill: "none",
          points: pointString(xs, ys),
        }),
      );
    }

    trend.points.forEach((point, index) => {
      const dot = svgElement("circle", {
        class: point.health_index < RISK_THRESHOLD ? "trend-dot at-risk" : "trend-dot",
        cx: String(xs[index]),
        cy: String(ys[index]),
        r: "5",
      });
      dot.dataset.sessionId = point.session_id;
      dot.dataset.healthIndex = String(point.health_index);
      dot.dataset.recordedAt = point.recorded_at;
      const tip = svgElement("title");
      tip.textContent =
        `${point.recorded_at} · index ${point.health_index}` +
        (point.volume_ml === null ? "" : ` · ${point.volume_ml} ml`);
      dot.append(tip);
      svg.append(dot);
    });

    const caption = document.createElement("p");
    caption.className = "chart-caption";
    caption.textContent = `${trend.subject_id} · ${count} scored session${count === 1 ? "" : "s"}`;
    body.append(svg, caption);
  }

  async function load(subjectId: string): Promise<void> {
    const seq = (requestSeq += 1);
    applyRemoteState(body, { state: "loading" });

    let result: RemoteData<TrendResponse>;
    try {
      const trend = await api.getTrend(subjectId);
      result = trend.points.length === 0 ? { state: "empty" } : { state: "loaded", value: trend };
    } catch (err) {
      result =
        err instanceof ApiRequestError
          ? { state: "error", code: err.code, message: err.message }
          : { state: "error", code: "network", message: String(err) };
    }
    if (seq !== requestSeq) {
      return;
    }
    if (applyRemoteState(body, result)) {
      renderTrend(result.value);
    }
  }

  return {
    el,
    load,
    clear(): void {
      requestSeq += 1;
      applyRemoteState(body, { state: "idle" });
    },
  };
}

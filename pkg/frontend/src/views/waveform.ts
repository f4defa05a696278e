import type { DashboardApi } from "../api.js";
import { ApiRequestError } from "../api.js";
import { applyRemoteState, type RemoteData } from "../remote.js";
import type { WaveformMinmax, WaveformResponse, WaveformSamples } from "../types.js";
import { extent, pointString, scaleLinear, svgElement } from "../svg.js";

export const PLOT_WIDTH = 640;
export const PLOT_HEIGHT = 240;

export interface WaveformView {
  readonly el: HTMLElement;
  /** Fetches and draws one session's signal; remembers the id for kind toggles. */
  load(sessionId: string, kind?: "raw" | "envelope"): Promise<void>;
  clear(): void;
}

function drawSamples(svg: SVGSVGElement, data: WaveformSamples): void {
  const [tLo, tHi] = extent([data.times_s]);
  const [vLo, vHi] = extent(data.channels);
  const x = scaleLinear(tLo, tHi, 0, PLOT_WIDTH);
  const y = scaleLinear(vLo, vHi, PLOT_HEIGHT, 0);
  data.channels.forEach((row, index) => {
    const line = svgElement("polyline", {
      class: `trace channel-${index}`,
      fill: "none",
      points: pointString(data.times_s.map(x), row.map(y)),
    });
    line.dataset.channel = String(index);
    line.dataset.source = "channels";
    svg.append(line);
  });
}

function drawMinmax(svg: SVGSVGElement, data: WaveformMinmax): void {
  const [tLo, tHi] = extent([data.bucket_times_s]);
  const [vLo, vHi] = extent([...data.channels_min, ...data.channels_max]);
  const x = scaleLinear(tLo, tHi, 0, PLOT_WIDTH);
  const y = scaleLinear(vLo, vHi, PLOT_HEIGHT, 0);
  const xs = data.bucket_times_s.map(x);
  data.channels_max.forEach((row, index) => {
    const hi = svgElement("polyline", {
      class: `trace trace-max channel-${index}`,
      fill: "none",
      points: pointString(xs, row.map(y)),
    });
    hi.dataset.channel = String(index);
    hi.dataset.source = "channels_max";
    svg.append(hi);
  });
  data.channels_min.forEach((row, index) => {
    const lo = svgElement("polyline", {
      class: `trace trace-min channel-${index}`,
      fill: "none",
      points: pointString(xs, row.map(y)),
    });
    lo.dataset.channel = String(index);
    lo.dataset.source = "channels_min";
    svg.append(lo);
  });
}

/**
 * Signal viewer for one session. The service chooses between raw samples and
 * min-max buckets server-side; this view only draws whichever arrived.
 */
export function createWaveformView(api: DashboardApi): WaveformView {
  const el = document.createElement("section");
  el.className = "panel waveform-view";

  const heading = document.createElement("h2");
  heading.textContent = "Waveform";

  const toggles = document.createElement("div");
  toggles.className = "kind-toggle";
  const rawButton = document.createElement("button");
  rawButton.type = "button";
  rawButton.textContent = "Raw";
  rawButton.className = "kind-raw";
  const envelopeButton = document.createElement("button");
  envelopeButton.type = "button";
  envelopeButton.textContent = "Envelope";
  envelopeButton.className = "kind-envelope";
  toggles.append(rawButton, envelopeButton);

  const body = document.createElement("div");
  body.className = "panel-body";
  body.dataset.state = "idle";

  el.append(heading, toggles, body);

  let currentId: string | null = null;
  let currentKind: "raw" | "envelope" = "raw";
  let requestSeq = 0;

  function markActiveKind(): void {
    rawButton.classList.toggle("active", currentKind === "raw");
    envelopeButton.classList.toggle("active", currentKind === "envelope");
  }

  function renderWaveform(data: WaveformResponse): void {
    const svg = svgElement("svg", {
      viewBox: `0 0 ${PLOT_WIDTH} ${PLOT_HEIGHT}`,
      preserveAspectRatio: "none",
      class: "chart waveform-chart",
      role: "img",
    });
    svg.dataset.mode = data.mode;
    if (data.mode === "samples") {
      drawSamples(svg, data);
    } else {
      drawMinmax(svg, data);
    }

    const caption = document.createElement("p");
    caption.className = "chart-caption";
    caption.textContent =
      `${data.kind} · ${data.mode} · ${data.source_samples} samples` +
      ` @ ${data.sample_rate_hz} Hz`;
    body.append(svg, caption);
  }

  async function load(sessionId: string, kind?: "raw" | "envelope"): Promise<void> {
    currentId = sessionId;
    if (kind !== undefined) {
      currentKind = kind;
    }
    markActiveKind();
    const seq = (requestSeq += 1);
    applyRemoteState(body, { state: "loading" });

    let result: RemoteData<WaveformResponse>;
    try {
      const data = await api.getWaveform(sessionId, { points: 1200, kind: currentKind });
      const empty =
        data.mode === "samples" ? data.times_s.length === 0 : data.bucket_times_s.length === 0;
      result = empty ? { state: "empty" } : { state: "loaded", value: data };
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
      renderWaveform(result.value);
    }
  }

  rawButton.addEventListener("click", () => {
    if (currentId !== null) void load(currentId, "raw");
  });
  envelopeButton.addEventListener("click", () => {
    if (currentId !== null) void load(currentId, "envelope");
  });

  markActiveKind();
  return {
    el,
    load,
    clear(): void {
      currentId = null;
      requestSeq += 1;
      applyRemoteState(body, { state: "idle" });
    },
  };
}

import type { DashboardApi } from "../api.js";
import { ApiRequestError } from "../api.js";
import type { LiveWindow, SessionRecord } from "../types.js";
import { extent, pointString, scaleLinear, svgElement } from "../svg.js";

export const POLL_INTERVAL_MS = 250;
export const LIVE_PLOT_WIDTH = 640;
export const LIVE_PLOT_HEIGHT = 200;

export interface LivePanelOptions {
  /** Called with the stored record after a capture is stopped and saved. */
  onSessionSaved?: (record: SessionRecord) => void;
}

export interface LivePanel {
  readonly el: HTMLElement;
  /** True while a capture is running (between a successful start and stop). */
  isRunning(): boolean;
}

/**
 * Live-capture controls: start a simulated recording, watch the most recent
 * window arrive at four polls per second, and stop to persist exactly one
 * session. Stop is only reachable while a capture is running.
 */
export function createLivePanel(api: DashboardApi, options: LivePanelOptions = {}): LivePanel {
  const el = document.createElement("section");
  el.className = "panel live-panel";

  const heading = document.createElement("h2");
  heading.textContent = "Live capture";

  const form = document.createElement("form");
  form.className = "live-form";

  const subjectInput = document.createElement("input");
  subjectInput.name = "subject";
  subjectInput.placeholder = "subject id";
  subjectInput.value = "WARD-A";
  subjectInput.required = true;

  const profileSelect = document.createElement("select");
  profileSelect.name = "profile";
  for (const profile of ["healthy", "dysphagic"]) {
    const option = document.createElement("option");
    option.value = profile;
    option.textContent = profile;
    profileSelect.append(option);
  }

  const volumeSelect = document.createElement("select");
  volumeSelect.name = "volume";
  for (const volume of [5, 10, 15]) {
    const option = document.createElement("option");
    option.value = String(volume);
    option.textContent = `${volume} ml`;
    volumeSelect.append(option);
  }
  volumeSelect.value = "10";

  const durationInput = document.createElement("input");
  durationInput.name = "duration";
  durationInput.type = "number";
  durationInput.min = "1";
  durationInput.step = "0.5";
  durationInput.value = "4";

  const startButton = document.createElement("button");
  startButton.type = "submit";
  startButton.className = "live-start";
  startButton.textContent = "Start";

  const stopButton = document.createElement("button");
  stopButton.type = "button";
  stopButton.className = "live-stop";
  stopButton.textContent = "Stop & save";
  stopButton.disabled = true;

  form.append(subjectInput, profileSelect, volumeSelect, durationInput, startButton, stopButton);

  const status = document.createElement("p");
  status.className = "live-status";
  status.dataset.state = "idle";
  status.textContent = "No capture running.";

  const chartHost = document.createElement("div");
  chartHost.className = "live-chart-host";

  el.append(heading, form, status, chartHost);

  let running = false;
  let stopping = false;
  let pollTimer: ReturnType<typeof setInterval> | null = null;

  function setStatus(state: "idle" | "running" | "done" | "saved" | "error", text: string): void {
    status.dataset.state = state;
    status.textContent = text;
  }

  function stopPolling(): void {
    if (pollTimer !== null) {
      clearInterval(pollTimer);
      pollTimer = null;
    }
  }

  function drawWindow(window: LiveWindow): void {
    const svg = svgElement("svg", {
      viewBox: `0 0 ${LIVE_PLOT_WIDTH} ${LIVE_PLOT_HEIGHT}`,
      preserveAspectRatio: "none",
      class: "chart live-chart",
      role: "img",
    });
    if (window.times_s.length > 0) {
      const [tLo, tHi] = extent([window.times_s]);
      const [vLo, vHi] = extent(window.channels);
      const x = scaleLinear(tLo, tHi, 0, LIVE_PLOT_WIDTH);
      const y = scaleLinear(vLo, vHi, LIVE_PLOT_HEIGHT, 0);
      window.channels.forEach((row, index) => {
        const line = svgElement("polyline", {
          class: `trace channel-${index}`,
          fill: "none",
          points: pointString(window.times_s.map(x), row.map(y)),
        });
        line.dataset.channel = String(index);
        svg.append(line);
      });
    }
    chartHost.replaceChildren(svg);
  }

  async function poll(): Promise<void> {
    let window: LiveWindow;
    try {
      window = await api.liveWindow(2.0);
    } catch (err) {
      if (err instanceof ApiRequestError && err.code === "no_live") {
        // The capture disappeared from under us (e.g. server restart).
        stopPolling();
        running = false;
        stopButton.disabled = true;
        startButton.disabled = false;
        setStatus("error", "Capture ended unexpectedly: no live recording on the server.");
      }
      return;
    }
    if (!running) {
      return; // A stop landed while this poll was in flight.
    }
    drawWindow(window);
    if (window.done) {
      stopPolling();
      setStatus("done", `Capture window complete at ${window.duration_s} s — stop to save.`);
    } else {
      setStatus("running", `Recording… ${window.elapsed_s.toFixed(1)} s of ${window.duration_s} s`);
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (running) {
      return;
    }
    const body = {
      subject_id: subjectInput.value.trim(),
      profile: profileSelect.value as "healthy" | "dysphagic",
      duration_s: Number(durationInput.value),
      volume_ml: Number(volumeSelect.value),
    };
    startButton.disabled = true;
    void api
      .liveStart(body)
      .then((live) => {
        running = true;
        stopping = false;
        stopButton.disabled = false;
        setStatus("running", `Recording ${live.subject_id} (${live.profile}) since ${live.started_at}`);
        chartHost.replaceChildren();
        pollTimer = setInterval(() => void poll(), POLL_INTERVAL_MS);
      })
      .catch((err: unknown) => {
        startButton.disabled = false;
        const text =
          err instanceof ApiRequestError ? `Start failed (${err.code}): ${err.message}` : `Start failed: ${String(err)}`;
        setStatus("error", text);
      });
  });

  stopButton.addEventListener("click", () => {
    if (!running || stopping) {
      return;
    }
    stopping = true;
    stopButton.disabled = true;
    stopPolling();
    void api
      .liveStop()
      .then((record) => {
        running = false;
        startButton.disabled = false;
        setStatus("saved", `Saved session ${record.session_id} (${record.n_samples} samples).`);
        options.onSessionSaved?.(record);
      })
      .catch((err: unknown) => {
        stopping = false;
        const text =
          err instanceof ApiRequestError ? `Stop failed (${err.code}): ${err.message}` : `Stop failed: ${String(err)}`;
        setStatus("error", text);
        if (running) {
          stopButton.disabled = false;
        }
      });
  });

  return {
    el,
    isRunning: () => running,
  };
}

import { DashboardApi, ApiRequestError } from "./api.js";
import type { SessionRecord } from "./types.js";
import { createLivePanel } from "./views/live.js";
import { createSessionList } from "./views/sessionList.js";
import { createTrendView } from "./views/trend.js";
import { createWaveformView } from "./views/waveform.js";

function fieldRow(label: string, value: string): HTMLElement {
  const row = document.createElement("div");
  row.className = "field-row";
  const labelEl = document.createElement("dt");
  labelEl.textContent = label;
  const valueEl = document.createElement("dd");
  valueEl.textContent = value;
  row.append(labelEl, valueEl);
  return row;
}

/** Builds the whole dashboard under `root`, talking only to the given service. */
export function mountDashboard(root: HTMLElement, api: DashboardApi): void {
  root.replaceChildren();
  root.className = "dashboard";

  const header = document.createElement("header");
  const title = document.createElement("h1");
  title.textContent = "Swallowing monitor";
  const healthPill = document.createElement("p");
  healthPill.className = "health-pill";
  healthPill.dataset.state = "loading";
  healthPill.textContent = "connecting…";
  header.append(title, healthPill);

  const detail = document.createElement("section");
  detail.className = "panel session-detail";
  const detailHeading = document.createElement("h2");
  detailHeading.textContent = "Session";
  const detailBody = document.createElement("div");
  detailBody.className = "panel-body";
  detailBody.dataset.state = "idle";
  detail.append(detailHeading, detailBody);

  const waveform = createWaveformView(api);
  const trend = createTrendView(api);

  async function refreshHealth(): Promise<void> {
    try {
      const health = await api.health();
      healthPill.dataset.state = "ok";
      healthPill.textContent =
        `${health.status} · ${health.sessions} sessions · ` +
        (health.model_version === null ? "no model" : `model ${health.model_version.slice(0, 8)}`);
    } catch {
      healthPill.dataset.state = "error";
      healthPill.textContent = "service unreachable";
    }
  }

  function renderDetail(record: SessionRecord): void {
    detailBody.dataset.state = "loaded";
    const fields = document.createElement("dl");
    fields.className = "session-fields";
    fields.append(
      fieldRow("Session", record.session_id),
      fieldRow("Subject", record.subject_id),
      fieldRow("Recorded", record.recorded_at),
      fieldRow("Signal", `${record.n_channels} × ${record.n_samples} @ ${record.sample_rate_hz} Hz`),
      fieldRow("Bolus", record.volume_ml === null ? "—" : `${record.volume_ml} ml`),
      fieldRow("Health index", record.health_index === null ? "unscored" : String(record.health_index)),
      fieldRow("Model", record.model_version === null ? "—" : record.model_version),
      fieldRow("Resyncs", String(record.resync_events)),
    );

    const actions = document.createElement("div");
    actions.className = "detail-actions";
    const scoreButton = document.createElement("button");
    scoreButton.type = "button";
    scoreButton.className = "score-button";
    scoreButton.textContent = record.health_index === null ? "Score" : "Re-score";
    const scoreNote = document.createElement("span");
    scoreNote.className = "score-note";
    scoreButton.addEventListener("click", () => {
      scoreButton.disabled = true;
      scoreNote.textContent = "scoring…";
      void api
        .scoreSession(record.session_id)
        .then((scored) => {
          scoreNote.textContent = "";
          renderDetail(scored);
          void sessions.refresh();
          void trend.load(scored.subject_id);
        })
        .catch((err: unknown) => {
          scoreButton.disabled = false;
          scoreNote.textContent =
            err instanceof ApiRequestError ? `failed (${err.code}): ${err.message}` : `failed: ${String(err)}`;
        });
    });
    actions.append(scoreButton, scoreNote);

    detailBody.replaceChildren(fields, actions);
  }

  function openSession(record: SessionRecord): void {
    renderDetail(record);
    void waveform.load(record.session_id);
    void trend.load(record.subject_id);
  }

  const sessions = createSessionList(api, { onSelect: openSession });
  const live = createLivePanel(api, {
    onSessionSaved: (record) => {
      void sessions.refresh();
      void refreshHealth();
      openSession(record);
    },
  });

  const filterForm = document.createElement("form");
  filterForm.className = "subject-filter";
  const filterInput = document.createElement("input");
  filterInput.placeholder = "filter by subject id";
  filterInput.name = "subject";
  const filterButton = document.createElement("button");
  filterButton.type = "submit";
  filterButton.textContent = "Filter";
  filterForm.append(filterInput, filterButton);
  filterForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void sessions.setSubjectFilter(filterInput.value.trim());
  });

  root.append(header, live.el, filterForm, sessions.el, detail, waveform.el, trend.el);

  void refreshHealth();
  void sessions.refresh();
}

function boot(): void {
  const root = document.getElementById("app");
  if (root === null) {
    return;
  }
  // Same-origin by default; ?api=http://host:port points elsewhere during development.
  const override = new URLSearchParams(window.location.search).get("api");
  mountDashboard(root, new DashboardApi(override ?? ""));
}

if (typeof document !== "undefined" && document.getElementById("app") !== null) {
  boot();
}

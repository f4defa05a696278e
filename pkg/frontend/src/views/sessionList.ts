import type { DashboardApi } from "../api.js";
import { ApiRequestError } from "../api.js";
import { applyRemoteState, type RemoteData } from "../remote.js";
import type { SessionPage, SessionRecord } from "../types.js";

export interface SessionListOptions {
  pageSize?: number;
  onSelect?: (record: SessionRecord) => void;
}

export interface SessionListView {
  readonly el: HTMLElement;
  /** Reloads the first (newest) page. */
  refresh(): Promise<void>;
  /** Applies a subject filter ("" clears it) and reloads. */
  setSubjectFilter(subjectId: string): Promise<void>;
}

function describeScore(record: SessionRecord): string {
  if (record.health_index === null) {
    return "unscored";
  }
  return String(record.health_index);
}

/**
 * Paginated, newest-first session browser. Pages are fetched with the
 * service's keyset cursor; a stack of visited cursors supports going back.
 */
export function createSessionList(api: DashboardApi, options: SessionListOptions = {}): SessionListView {
  const pageSize = options.pageSize ?? 10;

  const el = document.createElement("section");
  el.className = "panel session-list";

  const heading = document.createElement("h2");
  heading.textContent = "Sessions";
  const body = document.createElement("div");
  body.className = "panel-body";
  body.dataset.state = "idle";

  const nav = document.createElement("div");
  nav.className = "pager";
  const newerButton = document.createElement("button");
  newerButton.type = "button";
  newerButton.className = "pager-newer";
  newerButton.textContent = "← Newer";
  const olderButton = document.createElement("button");
  olderButton.type = "button";
  olderButton.className = "pager-older";
  olderButton.textContent = "Older →";
  nav.append(newerButton, olderButton);
  el.append(heading, body, nav);

  // Cursor that fetched the page currently shown is the stack top; undefined
  // marks the newest page. The next page's cursor comes from the response.
  let cursorStack: (string | undefined)[] = [undefined];
  let nextCursor: string | null = null;
  let subjectFilter = "";
  let requestSeq = 0;

  function renderPage(page: SessionPage): void {
    const listEl = document.createElement("ul");
    listEl.className = "session-rows";
    for (const record of page.sessions) {
      const row = document.createElement("li");
      row.className = "session-row";
      row.dataset.sessionId = record.session_id;

      const main = document.createElement("button");
      main.type = "button";
      main.className = "session-open";
      const title = document.createElement("span");
      title.className = "session-subject";
      title.textContent = record.subject_id;
      const when = document.createElement("span");
      when.className = "session-when";
      when.textContent = record.recorded_at;
      const score = document.createElement("span");
      score.className = record.health_index === null ? "session-score session-score-missing" : "session-score";
      score.textContent = describeScore(record);
      const size = document.createElement("span");
      size.className = "session-size";
      size.textContent =
        record.volume_ml === null
          ? `${record.n_samples} samples`
          : `${record.n_samples} samples · ${record.volume_ml} ml`;
      main.append(title, when, score, size);
      main.addEventListener("click", () => options.onSelect?.(record));
      row.append(main);
      listEl.append(row);
    }
    body.append(listEl);
  }

  function updateNav(): void {
    newerButton.disabled = cursorStack.length <= 1;
    olderButton.disabled = nextCursor === null;
  }

  async function loadCurrent(): Promise<void> {
    const seq = (requestSeq += 1);
    applyRemoteState(body, { state: "loading" });
    newerButton.disabled = true;
    olderButton.disabled = true;

    let result: RemoteData<SessionPage>;
    try {
      const cursor = cursorStack[cursorStack.length - 1];
      const page = await api.listSessions({
        limit: pageSize,
        ...(subjectFilter === "" ? {} : { subjectId: subjectFilter }),
        ...(cursor === undefined ? {} : { cursor }),
      });
      nextCursor = page.next_cursor;
      result = page.sessions.length === 0 ? { state: "empty" } : { state: "loaded", value: page };
    } catch (err) {
      nextCursor = null;
      result =
        err instanceof ApiRequestError
          ? { state: "error", code: err.code, message: err.message }
          : { state: "error", code: "network", message: String(err) };
    }
    if (seq !== requestSeq) {
      return; // A newer load superseded this one.
    }
    if (applyRemoteState(body, result)) {
      renderPage(result.value);
    }
    updateNav();
  }

  olderButton.addEventListener("click", () => {
    if (nextCursor !== null) {
      cursorStack.push(nextCursor);
      void loadCurrent();
    }
  });
  newerButton.addEventListener("click", () => {
    if (cursorStack.length > 1) {
      cursorStack.pop();
      void loadCurrent();
    }
  });

  return {
    el,
    refresh(): Promise<void> {
      cursorStack = [undefined];
      return loadCurrent();
    },
    setSubjectFilter(subjectId: string): Promise<void> {
      subjectFilter = subjectId;
      cursorStack = [undefined];
      return loadCurrent();
    },
  };
}

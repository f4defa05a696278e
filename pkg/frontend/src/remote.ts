/**
 * Lifecycle of one remote fetch. "empty" is a successful response with
 * nothing to show and is deliberately distinct from both "loading" and
 * "error" so the UI can never conflate the three.
 */
export type RemoteData<T> =
  | { state: "idle" }
  | { state: "loading" }
  | { state: "loaded"; value: T }
  | { state: "empty" }
  | { state: "error"; code: string; message: string };

export type RemoteState = RemoteData<never>["state"] | "loaded";

/**
 * Stamps the lifecycle state onto a container element (as `data-state`) and
 * fills it with the matching placeholder for non-loaded states. Returns true
 * when the caller should render the loaded value into the container.
 */
export function applyRemoteState<T>(el: HTMLElement, data: RemoteData<T>): data is { state: "loaded"; value: T } {
  el.dataset.state = data.state;
  switch (data.state) {
    case "idle":
      el.replaceChildren();
      return false;
    case "loading": {
      const note = document.createElement("p");
      note.className = "placeholder placeholder-loading";
      note.textContent = "Loading…";
      el.replaceChildren(note);
      return false;
    }
    case "empty": {
      const note = document.createElement("p");
      note.className = "placeholder placeholder-empty";
      note.textContent = "Nothing recorded yet.";
      el.replaceChildren(note);
      return false;
    }
    case "error": {
      const note = document.createElement("p");
      note.className = "placeholder placeholder-error";
      note.textContent = `Request failed (${data.code}): ${data.message}`;
      el.replaceChildren(note);
      return false;
    }
    case "loaded":
      el.replaceChildren();
      return true;
  }
}

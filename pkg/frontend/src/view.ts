import { RankingPayload } from "./api.js";

export const SPACE_GLYPH = "␣";

export interface View {
  root: HTMLElement;
  typedEl: HTMLElement;
  stripEl: HTMLOListElement;
  statusEl: HTMLElement;
}

export function buildView(root: HTMLElement): View {
  const doc = root.ownerDocument;
  root.innerHTML = "";

  const typedEl = doc.createElement("div");
  typedEl.className = "typed";

  const stripEl = doc.createElement("ol");
  stripEl.className = "ranking";

  const statusEl = doc.createElement("div");
  statusEl.className = "status";

  root.append(typedEl, stripEl, statusEl);
  return { root, typedEl, stripEl, statusEl };
}

export function renderTyped(view: View, typed: string): void {
  view.typedEl.textContent =
    typed === "" ? "start typing…" : typed.split(" ").join(SPACE_GLYPH);
  view.typedEl.classList.toggle("empty", typed === "");
}

export function renderRanking(view: View, payload: RankingPayload): void {
  const doc = view.stripEl.ownerDocument;
  view.stripEl.innerHTML = "";
  payload.ranking.forEach((entry, index) => {
    const li = doc.createElement("li");
    li.className = index < payload.top_k ? "key top" : "key";

    const charEl = doc.createElement("span");
    charEl.className = "char";
    charEl.textContent = entry.char === " " ? SPACE_GLYPH : entry.char;

    const barEl = doc.createElement("span");
    barEl.className = "bar";
    barEl.style.width = `${(entry.prob * 100).toFixed(2)}%`;

    const probEl = doc.createElement("span");
    probEl.className = "prob";
    probEl.textContent = entry.prob.toFixed(4);

    li.append(charEl, barEl, probEl);
    view.stripEl.append(li);
  });
}

export function renderStatus(view: View, message: string): void {
  view.statusEl.textContent = message;
  view.statusEl.classList.toggle("error", message !== "");
}

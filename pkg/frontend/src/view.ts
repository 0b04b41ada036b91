// Pure DOM rendering. Every function takes its container explicitly so the
// pieces can be driven and asserted in tests without the full app shell.

import { DocResponse, HealthResponse, Hit, SearchResponse } from "./api.js";
import { formatScore, simColor, verbatim } from "./format.js";

export const EMPTY_MODALITY_BANNER = "query empty under selected modality";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Ranked hit list. Row order mirrors the response; the visible score is
 *  rounded to 4 decimals and the verbatim response value rides along in
 *  data-score (and the tooltip). */
export function renderResults(
  container: HTMLElement,
  response: SearchResponse,
  onSelect?: (hit: Hit) => void,
): void {
  container.replaceChildren();
  if (response.hits.length === 0) {
    container.appendChild(el("p", "empty-state", "No evidence documents matched this query."));
    return;
  }
  const list = el("ol", "hit-list");
  for (const hit of response.hits) {
    const row = el("li", "hit-row");
    row.dataset.docId = hit.doc_id;
    row.dataset.score = verbatim(hit.score);
    const head = el("div", "hit-head");
    head.appendChild(el("span", "hit-doc-id", hit.doc_id));
    const score = el("span", "hit-score", formatScore(hit.score));
    score.title = verbatim(hit.score);
    head.appendChild(score);
    row.appendChild(head);
    row.appendChild(el("p", "hit-snippet", hit.text_snippet || "(no text)"));
    if (onSelect) {
      row.addEventListener("click", () => onSelect(hit));
    }
    list.appendChild(row);
  }
  container.appendChild(list);
}

/** Per-token match table for one hit: each real query token, the document
 *  token it matched, and the similarity as a color cell on [-1, 1]. The
 *  footer total re-sums the attributions; it matches the hit score within
 *  display rounding because the server guarantees the decomposition. */
export function renderAttributionHeatmap(container: HTMLElement, hit: Hit | null): void {
  container.replaceChildren();
  if (!hit || !hit.attributions || hit.attributions.length === 0) {
    container.hidden = true;
    return;
  }
  container.hidden = false;
  container.appendChild(el("h3", "heatmap-title", `Token matches for ${hit.doc_id}`));
  const table = el("table", "heatmap");
  const head = el("tr");
  for (const label of ["query token", "doc token", "similarity"]) {
    head.appendChild(el("th", undefined, label));
  }
  table.appendChild(head);
  for (const a of hit.attributions) {
    const tr = el("tr");
    tr.appendChild(el("td", undefined, `q[${a.q_token_index}]`));
    tr.appendChild(el("td", undefined, `d[${a.d_token_index}]`));
    const cell = el("td", "sim-cell", formatScore(a.sim));
    cell.style.backgroundColor = simColor(a.sim);
    cell.dataset.sim = verbatim(a.sim);
    tr.appendChild(cell);
    table.appendChild(tr);
  }
  container.appendChild(table);
  const total = hit.attributions.reduce((acc, a) => acc + a.sim, 0);
  const footer = el(
    "p",
    "heatmap-total",
    `total ${formatScore(total)} (hit score ${formatScore(hit.score)})`,
  );
  footer.dataset.total = formatScore(total);
  footer.dataset.score = formatScore(hit.score);
  container.appendChild(footer);
}

/** Error banner for non-2xx responses. A 422 means the modality filter
 *  emptied the query, which gets the documented wording; anything else
 *  surfaces the server's message. */
export function renderErrorBanner(container: HTMLElement, status: number, detail: string): void {
  container.replaceChildren();
  container.hidden = false;
  const text = status === 422 ? EMPTY_MODALITY_BANNER : detail;
  const banner = el("div", "error-banner", text);
  banner.dataset.status = String(status);
  if (status === 422 && detail) banner.title = detail;
  container.appendChild(banner);
}

export function clearErrorBanner(container: HTMLElement): void {
  container.replaceChildren();
  container.hidden = true;
}

export function renderDocPanel(container: HTMLElement, doc: DocResponse | null): void {
  container.replaceChildren();
  if (!doc) {
    container.hidden = true;
    return;
  }
  container.hidden = false;
  container.appendChild(el("h3", undefined, `Document ${doc.id}`));
  container.appendChild(el("p", "doc-text", doc.text ?? "(no text content)"));
  if (doc.visual_vecs) {
    container.appendChild(
      el("p", "doc-visual", `${doc.visual_vecs.length} visual vector(s) attached`),
    );
  }
}

export function renderHealth(container: HTMLElement, health: HealthResponse): void {
  container.textContent = `corpus: ${health.corpus_size} documents, embedding dim ${health.dim}`;
}

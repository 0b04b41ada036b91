// Wires the search form to the API client and the render functions.
// One search in flight at a time; prior results stay on screen until a
// new response (or error) arrives.

import { ApiError, Hit, ModalityMode, SearchClient, SearchRequest } from "./api.js";
import {
  clearErrorBanner,
  renderAttributionHeatmap,
  renderDocPanel,
  renderErrorBanner,
  renderHealth,
  renderResults,
} from "./view.js";

export interface AppElements {
  form: HTMLFormElement;
  text: HTMLTextAreaElement;
  visualFile: HTMLInputElement;
  mode: HTMLSelectElement;
  k: HTMLInputElement;
  exact: HTMLInputElement;
  probe: HTMLInputElement;
  results: HTMLElement;
  heatmap: HTMLElement;
  banner: HTMLElement;
  docPanel: HTMLElement;
  health: HTMLElement;
}

export function requiredElements(root: Document): AppElements {
  const get = (id: string) => {
    const node = root.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
  };
  return {
    form: get("search-form") as HTMLFormElement,
    text: get("query-text") as HTMLTextAreaElement,
    visualFile: get("visual-file") as HTMLInputElement,
    mode: get("mode") as HTMLSelectElement,
    k: get("top-k") as HTMLInputElement,
    exact: get("exact") as HTMLInputElement,
    probe: get("probe") as HTMLInputElement,
    results: get("results"),
    heatmap: get("heatmap"),
    banner: get("banner"),
    docPanel: get("doc-panel"),
    health: get("health"),
  };
}

async function readVisualVecs(input: HTMLInputElement): Promise<number[][] | undefined> {
  const file = input.files?.[0];
  if (!file) return undefined;
  const parsed = JSON.parse(await file.text());
  if (!Array.isArray(parsed) || !parsed.every(Array.isArray)) {
    throw new Error("visual vector file must be a JSON array of number arrays");
  }
  return parsed as number[][];
}

export function buildRequest(
  els: AppElements,
  visualVecs: number[][] | undefined,
): SearchRequest {
  const req: SearchRequest = {
    k: Math.max(1, Number(els.k.value) || 10),
    mode: els.mode.value as ModalityMode,
    exact: els.exact.checked,
  };
  if (els.text.value.trim()) req.text = els.text.value;
  if (visualVecs) req.visual_vecs = visualVecs;
  if (!els.exact.checked) req.probe = Math.max(1, Number(els.probe.value) || 32);
  return req;
}

export function startApp(root: Document, client: SearchClient): AppElements {
  const els = requiredElements(root);

  client
    .health()
    .then((h) => renderHealth(els.health, h))
    .catch(() => {
      els.health.textContent = "service unreachable";
    });

  const selectHit = (hit: Hit) => {
    renderAttributionHeatmap(els.heatmap, hit);
    client
      .doc(hit.doc_id)
      .then((doc) => renderDocPanel(els.docPanel, doc))
      .catch((err) => {
        if (err instanceof ApiError) renderErrorBanner(els.banner, err.status, err.detail);
      });
  };

  els.form.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      let req: SearchRequest;
      try {
        req = buildRequest(els, await readVisualVecs(els.visualFile));
      } catch (err) {
        renderErrorBanner(els.banner, 0, err instanceof Error ? err.message : String(err));
        return;
      }
      try {
        const response = await client.search(req);
        clearErrorBanner(els.banner);
        renderResults(els.results, response, selectHit);
        renderAttributionHeatmap(els.heatmap, response.hits[0] ?? null);
      } catch (err) {
        if (err instanceof DOMException && err.name === "AbortError") {
          return; // superseded by a newer submission
        }
        if (err instanceof ApiError) {
          renderErrorBanner(els.banner, err.status, err.detail);
        } else {
          renderErrorBanner(els.banner, 0, err instanceof Error ? err.message : String(err));
        }
      }
    })();
  });

  return els;
}

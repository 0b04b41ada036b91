// Round-trip tests against a fixture server (mocked fetch): the console
// renders exactly what the wire said, errors surface as the documented
// banner, and resubmission cancels the in-flight search.
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { SearchClient } from "../src/api.js";
import { startApp } from "../src/app.js";
import { EMPTY_MODALITY_BANNER } from "../src/view.js";

const RAW_SEARCH = `{"hits":[
  {"doc_id":"d00016","score":6.696320962039222,"text_snippet":"w00140 w00130",
   "attributions":[{"q_token_index":0,"d_token_index":6,"sim":0.866802471462606}]},
  {"doc_id":"d00001","score":4.886009579900053,"text_snippet":"case",
   "attributions":[{"q_token_index":0,"d_token_index":1,"sim":0.31}]}
]}`;

const RAW_HEALTH = `{"status":"ok","corpus_size":50,"dim":32}`;
const RAW_DOC = `{"id":"d00016","kind":"document","text":"w00140 w00130 w00100"}`;

function shell(): void {
  document.body.innerHTML = `
    <div id="health"></div>
    <form id="search-form">
      <textarea id="query-text"></textarea>
      <input id="visual-file" type="file" />
      <select id="mode">
        <option value="All" selected>All</option>
        <option value="Text">Text</option>
        <option value="Vision">Vision</option>
      </select>
      <input id="top-k" type="number" value="10" />
      <input id="exact" type="checkbox" checked />
      <input id="probe" type="number" value="32" />
      <button type="submit">go</button>
    </form>
    <div id="banner" hidden></div>
    <div id="results"></div>
    <div id="heatmap" hidden></div>
    <div id="doc-panel" hidden></div>`;
}

function jsonResponse(raw: string, status = 200): Response {
  return new Response(raw, {
    status,
    headers: { "content-type": "application/json" },
  });
}

type FetchMock = ReturnType<typeof vi.fn<typeof fetch>>;

function fixtureServer(searchRaw: string = RAW_SEARCH, searchStatus = 200): FetchMock {
  return vi.fn<typeof fetch>(async (input: RequestInfo | URL) => {
    const url = String(input);
    if (url.endsWith("/api/health")) return jsonResponse(RAW_HEALTH);
    if (url.endsWith("/api/search")) return jsonResponse(searchRaw, searchStatus);
    if (url.includes("/api/doc/")) return jsonResponse(RAW_DOC);
    return jsonResponse(`{"detail":"not found"}`, 404);
  });
}

function submitQuery(text: string): void {
  (document.getElementById("query-text") as HTMLTextAreaElement).value = text;
  (document.getElementById("search-form") as HTMLFormElement).dispatchEvent(
    new Event("submit", { cancelable: true }),
  );
}

beforeEach(shell);
afterEach(() => vi.unstubAllGlobals());

describe("console round-trip", () => {
  it("renders hits whose stored scores byte-match the response", async () => {
    vi.stubGlobal("fetch", fixtureServer());
    startApp(document, new SearchClient(""));
    submitQuery("endangered turtle");

    await vi.waitFor(() => {
      expect(document.querySelectorAll(".hit-row")).toHaveLength(2);
    });
    const rows = [...document.querySelectorAll<HTMLElement>(".hit-row")];
    expect(rows.map((r) => r.dataset.docId)).toEqual(["d00016", "d00001"]);
    for (const row of rows) {
      expect(RAW_SEARCH).toContain(`"score":${row.dataset.score}`);
    }
  });

  it("shows the attribution heatmap for the top hit, total matching its score", async () => {
    const raw = `{"hits":[{"doc_id":"d1","score":1.25,"text_snippet":"x",
      "attributions":[{"q_token_index":0,"d_token_index":3,"sim":0.75},
                      {"q_token_index":1,"d_token_index":0,"sim":0.5}]}]}`;
    vi.stubGlobal("fetch", fixtureServer(raw));
    startApp(document, new SearchClient(""));
    submitQuery("anything");

    await vi.waitFor(() => {
      expect(document.getElementById("heatmap")!.hidden).toBe(false);
    });
    const footer = document.querySelector<HTMLElement>(".heatmap-total")!;
    expect(footer.dataset.total).toBe("1.2500");
    expect(footer.dataset.total).toBe(footer.dataset.score);
  });

  it("sends the form state on the wire", async () => {
    const server = fixtureServer();
    vi.stubGlobal("fetch", server);
    startApp(document, new SearchClient(""));
    (document.getElementById("exact") as HTMLInputElement).checked = false;
    (document.getElementById("top-k") as HTMLInputElement).value = "5";
    (document.getElementById("mode") as HTMLSelectElement).value = "Text";
    submitQuery("turtle");

    await vi.waitFor(() => {
      expect(document.querySelectorAll(".hit-row").length).toBeGreaterThan(0);
    });
    const searchCall = server.mock.calls.find(([u]) => String(u).endsWith("/api/search"))!;
    const body = JSON.parse((searchCall[1] as RequestInit).body as string);
    expect(body).toEqual({ text: "turtle", k: 5, mode: "Text", exact: false, probe: 32 });
  });

  it("surfaces 422 as the documented banner and keeps prior results", async () => {
    const server = fixtureServer();
    vi.stubGlobal("fetch", server);
    startApp(document, new SearchClient(""));
    submitQuery("first query");
    await vi.waitFor(() => {
      expect(document.querySelectorAll(".hit-row")).toHaveLength(2);
    });

    server.mockImplementation(async (input: RequestInfo | URL) => {
      if (String(input).endsWith("/api/search")) {
        return jsonResponse(`{"detail":"query empty under modality 'Vision'"}`, 422);
      }
      return jsonResponse(RAW_HEALTH);
    });
    submitQuery("second query");

    await vi.waitFor(() => {
      expect(document.querySelector(".error-banner")).not.toBeNull();
    });
    const banner = document.querySelector<HTMLElement>(".error-banner")!;
    expect(banner.textContent).toBe(EMPTY_MODALITY_BANNER);
    expect(banner.dataset.status).toBe("422");
    // the previous ranked list is untouched by the failed refinement
    expect(document.querySelectorAll(".hit-row")).toHaveLength(2);
  });

  it("cancels the in-flight search when a new one is submitted", async () => {
    let firstAborted = false;
    const server = vi.fn<typeof fetch>((input: RequestInfo | URL, init?: RequestInit) => {
      const url = String(input);
      if (url.endsWith("/api/health")) return Promise.resolve(jsonResponse(RAW_HEALTH));
      if (server.mock.calls.filter(([u]) => String(u).endsWith("/api/search")).length === 1) {
        // first search hangs until its signal aborts
        return new Promise<Response>((_, reject) => {
          init?.signal?.addEventListener("abort", () => {
            firstAborted = true;
            reject(new DOMException("aborted", "AbortError"));
          });
        });
      }
      return Promise.resolve(jsonResponse(RAW_SEARCH));
    });
    vi.stubGlobal("fetch", server);
    startApp(document, new SearchClient(""));
    submitQuery("slow query");
    submitQuery("fast query");

    await vi.waitFor(() => {
      expect(document.querySelectorAll(".hit-row")).toHaveLength(2);
    });
    expect(firstAborted).toBe(true);
    expect(document.querySelector(".error-banner")).toBeNull();
  });

  it("loads the document panel when a hit is selected", async () => {
    vi.stubGlobal("fetch", fixtureServer());
    startApp(document, new SearchClient(""));
    submitQuery("turtle");
    await vi.waitFor(() => {
      expect(document.querySelectorAll(".hit-row")).toHaveLength(2);
    });
    document.querySelectorAll<HTMLElement>(".hit-row")[0].click();
    await vi.waitFor(() => {
      expect(document.getElementById("doc-panel")!.textContent).toContain("Document d00016");
    });
  });

  it("renders health on startup", async () => {
    vi.stubGlobal("fetch", fixtureServer());
    startApp(document, new SearchClient(""));
    await vi.waitFor(() => {
      expect(document.getElementById("health")!.textContent).toContain("50 documents");
    });
  });
});

import { SearchClient } from "./api.js";
import { startApp } from "./app.js";

// Served from the same origin as the search service by default; set
// window.EVRET_API_BASE before this script loads to point elsewhere.
declare global {
  interface Window {
    EVRET_API_BASE?: string;
  }
}

startApp(document, new SearchClient(window.EVRET_API_BASE ?? ""));

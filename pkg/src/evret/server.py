"""Read-only JSON search service for the moderation console.

POST /api/search   {text?, visual_vecs?, k, mode, exact, probe?}
                   -> {hits: [{doc_id, score, text_snippet, attributions}]}
GET  /api/doc/{id} -> stored corpus document
GET  /api/health   -> {status, corpus_size, dim}

Handlers are stateless over a shared immutable index and encoder; nothing
mutates server state, so concurrent requests need no coordination.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .core import CoreConfig
from .corpus import CorpusItem
from .encoder import EncoderParams, encode
from .errors import (
    DimMismatchError,
    EmptyItemError,
    EmptySequenceError,
    MissingModalitiesError,
    TooLongError,
)
from .evaluation import MODALITY_MODES, apply_modality_filter
from .index import DEFAULT_PROBE, RetrievalIndex, search_approx, search_exact

SNIPPET_CHARS = 200


class SearchRequest(BaseModel):
    text: str | None = None
    visual_vecs: list[list[float]] | None = None
    k: int = Field(default=10, ge=1)
    mode: str = Field(default="All")
    exact: bool = True
    probe: int | None = Field(default=None, ge=1)


def create_app(
    index: RetrievalIndex,
    params_q: EncoderParams,
    core_cfg: CoreConfig,
    documents: list[CorpusItem] | None = None,
    frontend_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="evret search service")
    docs_by_id = {d.id: d for d in (documents or [])}

    @app.exception_handler(RequestValidationError)
    async def _malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc.errors())})

    @app.get("/api/health")
    def health():
        return {"status": "ok", "corpus_size": index.n_docs, "dim": index.dim}

    @app.get("/api/doc/{doc_id}")
    def get_doc(doc_id: str):
        item = docs_by_id.get(doc_id)
        if item is None:
            return JSONResponse(status_code=404, content={"detail": f"unknown doc {doc_id!r}"})
        return item.to_json_obj()

    @app.post("/api/search")
    def search(req: SearchRequest):
        if req.mode not in MODALITY_MODES:
            return JSONResponse(
                status_code=400,
                content={"detail": f"mode must be one of {MODALITY_MODES}"},
            )
        if not req.text and not req.visual_vecs:
            return JSONResponse(
                status_code=422,
                content={"detail": "query empty: provide text and/or visual_vecs"},
            )
        try:
            item = CorpusItem(id="__query__", text=req.text, visual_vecs=req.visual_vecs, kind="query")
            filtered = apply_modality_filter(item, req.mode)
            if filtered is None:
                return JSONResponse(
                    status_code=422,
                    content={"detail": f"query empty under modality {req.mode!r}"},
                )
            q_matrix = encode(filtered, params_q, core_cfg).matrix
        except (MissingModalitiesError, EmptyItemError, EmptySequenceError) as e:
            return JSONResponse(status_code=422, content={"detail": str(e)})
        except (DimMismatchError, TooLongError, ValueError) as e:
            return JSONResponse(status_code=400, content={"detail": str(e)})

        if req.exact:
            hits = search_exact(index, q_matrix, req.k)
        else:
            hits = search_approx(index, q_matrix, req.k, probe=req.probe or DEFAULT_PROBE)

        payload = []
        for hit in hits.entries:
            doc = docs_by_id.get(hit.doc_id)
            snippet = (doc.text or "")[:SNIPPET_CHARS] if doc is not None else ""
            payload.append(
                {
                    "doc_id": hit.doc_id,
                    "score": hit.score,
                    "text_snippet": snippet,
                    "attributions": hit.attributions.attribution_records(),
                }
            )
        return {"hits": payload}

    if frontend_dir:
        # mounted last so /api/* stays with the handlers above; serving the
        # console from the API origin keeps the browser same-origin
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="console")

    return app

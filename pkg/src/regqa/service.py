"""HTTP service exposing the pipeline.

Endpoints:

* ``POST /ask`` -- body ``{"question": ..., "top_k"?, "alpha"?, "fusion"?}``;
  returns the full pipeline response (answer, source article, spans, scores,
  retrieved contexts, degradation notes).
* ``POST /retrieve`` -- body ``{"question": ..., "top_k"?, "alpha"?,
  "fusion"?}``; returns ranked contexts with their score breakdown.
* ``GET /health`` -- corpus size and configuration summary.

Invalid requests map to 400, upstream embedding failures to 502.  CORS is
wide open so a separately served browser UI can call the API directly.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from regqa.dense import EmbedderError
from regqa.pipeline import Pipeline


class AskRequest(BaseModel):
    question: str
    top_k: int | None = None
    alpha: float | None = None
    fusion: str | None = None


class RetrieveRequest(BaseModel):
    question: str
    top_k: int | None = None
    alpha: float | None = None
    fusion: str | None = None


def create_app(pipeline: Pipeline, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="regqa")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/ask")
    def ask(request: AskRequest) -> dict:
        try:
            response = pipeline.answer_question(
                request.question,
                top_k=request.top_k,
                alpha=request.alpha,
                fusion_mode=request.fusion,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except EmbedderError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        return response.to_dict()

    @app.post("/retrieve")
    def retrieve(request: RetrieveRequest) -> dict:
        try:
            contexts = pipeline.retrieve(
                request.question,
                top_k=request.top_k,
                alpha=request.alpha,
                fusion_mode=request.fusion,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except EmbedderError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        return {"question": request.question, "contexts": contexts}

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "articles": len(pipeline.corpus.articles),
            "documents": len(pipeline.corpus.documents),
            "embedding_dim": pipeline.store.dim,
            "fusion_mode": pipeline.cfg.fusion.mode,
            "lexical_method": pipeline.cfg.fusion.lexical_method,
        }

    if static_dir is not None and Path(static_dir).is_dir():
        # mounted last so the API routes above win
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app

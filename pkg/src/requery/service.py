"""Minimal HTTP retrieval service over immutable loaded state."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .cascade import CascadeConfig, CascadeResult, retrieve
from .corpus import QAPair
from .encoder import EncoderParams
from .sparse import SparseIndex


@dataclass
class ServiceState:
    corpus: List[QAPair]
    sparse_index: SparseIndex
    params: EncoderParams
    index_vectors: np.ndarray
    default_k: int = 50


class RetrieveRequest(BaseModel):
    question: str
    k: Optional[int] = None


def result_to_dict(result: CascadeResult) -> dict:
    return {
        "answer": result.answer,
        "chosen_id": result.chosen,
        "candidates": [
            {
                "qa_id": c.qa_id,
                "stage1_score": c.stage1_score,
                "stage2_score": c.stage2_score,
                "stage1_rank": c.stage1_rank,
                "stage2_rank": c.stage2_rank,
            }
            for c in result.candidates
        ],
    }


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="requery")

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "corpus_size": len(state.corpus),
            "embed_dim": state.params.embed_dim,
            "vector_rows": int(state.index_vectors.shape[0]),
        }

    @app.post("/retrieve")
    def retrieve_endpoint(request: RetrieveRequest):
        if not request.question.strip():
            return JSONResponse(status_code=400, content={"error": "empty question"})
        k = request.k if request.k is not None else state.default_k
        if k < 1:
            return JSONResponse(status_code=400, content={"error": "k must be >= 1"})
        result = retrieve(
            request.question,
            state.sparse_index,
            state.params,
            state.index_vectors,
            state.corpus,
            CascadeConfig(k=k),
        )
        return result_to_dict(result)

    return app

"""Two-step inference: stage-1 top-k retrieval, then restricted MIPS.

The chosen id always lies within the stage-1 top-k set, which makes
stage-1 answer recall an exact upper bound on cascade EM.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .corpus import QAPair
from .dense import mips_full, mips_restricted
from .encoder import EncoderParams, embed

NO_ANSWER_ID = -1
DEFAULT_FANOUT = 50


@dataclass(frozen=True)
class CascadeConfig:
    k: int = DEFAULT_FANOUT
    concurrent_encoders: bool = False
    workers: int = 4

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class CandidateScore:
    qa_id: int
    stage1_score: float
    stage2_score: float
    stage1_rank: int
    stage2_rank: int


@dataclass(frozen=True)
class CascadeResult:
    answer: str
    chosen: int
    candidates: Tuple[CandidateScore, ...] = ()

    @property
    def no_answer(self) -> bool:
        return self.chosen == NO_ANSWER_ID


class DenseFirstStage:
    """Full-scan dense retriever usable as a stage-1 drop-in."""

    def __init__(self, params: EncoderParams, matrix: np.ndarray):
        self.params = params
        self.matrix = matrix

    def search(self, query: str, k: int) -> List[Tuple[int, float]]:
        return mips_full(self.matrix, embed(self.params, query), k)


def retrieve(
    question: str,
    stage1,
    params: EncoderParams,
    index_vectors: np.ndarray,
    corpus: List[QAPair],
    config: Optional[CascadeConfig] = None,
) -> CascadeResult:
    """Run the cascade for one question."""
    config = config or CascadeConfig()
    if index_vectors.shape[0] != len(corpus):
        raise ValueError(
            f"vector rows ({index_vectors.shape[0]}) do not match corpus size ({len(corpus)})"
        )
    stage1_hits = stage1.search(question, config.k)
    if not stage1_hits:
        return CascadeResult(answer="", chosen=NO_ANSWER_ID)

    stage1_rank = {cid: r for r, (cid, _s) in enumerate(stage1_hits, start=1)}
    stage1_score = {cid: s for cid, s in stage1_hits}
    query_vec = embed(params, question)
    reranked = mips_restricted(
        index_vectors, query_vec, [cid for cid, _s in stage1_hits], k=len(stage1_hits)
    )
    candidates = tuple(
        CandidateScore(
            qa_id=cid,
            stage1_score=stage1_score[cid],
            stage2_score=score,
            stage1_rank=stage1_rank[cid],
            stage2_rank=r,
        )
        for r, (cid, score) in enumerate(reranked, start=1)
    )
    chosen = candidates[0].qa_id
    return CascadeResult(answer=corpus[chosen].answer, chosen=chosen, candidates=candidates)


def retrieve_batch(
    questions: List[str],
    stage1,
    params: EncoderParams,
    index_vectors: np.ndarray,
    corpus: List[QAPair],
    config: Optional[CascadeConfig] = None,
) -> List[CascadeResult]:
    """Cascade over a batch; results positionally aligned with inputs.

    With concurrent_encoders set, queries overlap on a thread pool over
    read-only state; output is identical to the sequential order.
    """
    config = config or CascadeConfig()

    def one(q: str) -> CascadeResult:
        return retrieve(q, stage1, params, index_vectors, corpus, config)

    if not questions:
        return []
    if config.concurrent_encoders:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(one, questions))
    return [one(q) for q in questions]

"""End-to-end EM evaluation, stage-1 answer recall, and Q/sec benchmarking."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .corpus import EvalQuestion, QAPair
from .textnorm import exact_match

AnswerFn = Callable[[str], str]


@dataclass
class EvalReport:
    em: float
    n: int
    recall_at_k: Dict[int, float] = field(default_factory=dict)
    per_question: Optional[List[Tuple[int, str, int]]] = None


@dataclass
class BenchReport:
    q_per_sec: float
    total_queries: int
    wall_seconds: float
    latency_p50_ms: float
    latency_p95_ms: float
    latency_p99_ms: float
    mode: str
    trials: List[float] = field(default_factory=list)  # per-trial Q/sec
    workers: int = 1
    checksum: int = 0


def eval_em(
    answer_fn: AnswerFn,
    dataset: List[EvalQuestion],
    keep_per_question: bool = False,
) -> EvalReport:
    """EM percentage of answer_fn over the dataset; no-answer scores 0."""
    if not dataset:
        raise ValueError("dataset must be non-empty")
    per_question = []
    hits = 0
    for q in dataset:
        predicted = answer_fn(q.question)
        em = exact_match(predicted, q.gold_answers) if predicted else 0
        hits += em
        if keep_per_question:
            per_question.append((q.id, predicted, em))
    return EvalReport(
        em=100.0 * hits / len(dataset),
        n=len(dataset),
        per_question=per_question if keep_per_question else None,
    )


def recall_at_k(
    stage1,
    dataset: List[EvalQuestion],
    corpus: List[QAPair],
    ks: Sequence[int],
) -> Dict[int, float]:
    """Per k: percent of questions whose stage-1 top-k holds a correct answer."""
    ks = list(ks)
    if ks != sorted(ks):
        raise ValueError("ks must be sorted ascending")
    if not dataset:
        raise ValueError("dataset must be non-empty")
    k_max = ks[-1]
    hits = {k: 0 for k in ks}
    for q in dataset:
        candidates = stage1.search(q.question, k_max)
        first_correct = None
        for rank, (cid, _score) in enumerate(candidates, start=1):
            if exact_match(corpus[cid].answer, q.gold_answers):
                first_correct = rank
                break
        if first_correct is not None:
            for k in ks:
                if first_correct <= k:
                    hits[k] += 1
    return {k: 100.0 * hits[k] / len(dataset) for k in ks}


def _nearest_rank(sorted_values: List[float], pct: float) -> float:
    idx = max(0, math.ceil(pct / 100.0 * len(sorted_values)) - 1)
    return sorted_values[idx]


def bench_throughput(
    answer_fn: AnswerFn,
    queries: List[str],
    warmup: int = 10,
    mode: str = "sequential",
    trials: int = 3,
    workers: int = 4,
) -> BenchReport:
    """Time the full batch `trials` times (mean Q/sec); warmup unmeasured.

    Answers from timed runs are folded into a checksum so the work cannot
    be optimized away.
    """
    if not queries:
        raise ValueError("queries must be non-empty")
    if mode not in ("sequential", "concurrent"):
        raise ValueError(f"unknown mode {mode!r}")

    for q in queries[:warmup]:
        answer_fn(q)

    def timed_one(q: str) -> Tuple[str, float]:
        t0 = time.perf_counter()
        answer = answer_fn(q)
        return answer, time.perf_counter() - t0

    checksum = 0
    latencies: List[float] = []
    trial_qps: List[float] = []
    total_wall = 0.0
    for _ in range(trials):
        start = time.perf_counter()
        if mode == "concurrent":
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(timed_one, queries))
        else:
            results = [timed_one(q) for q in queries]
        wall = time.perf_counter() - start
        total_wall += wall
        trial_qps.append(len(queries) / wall)
        for answer, lat in results:
            checksum = (checksum + len(answer)) & 0xFFFFFFFF
            latencies.append(lat)

    total_queries = trials * len(queries)
    latencies.sort()
    return BenchReport(
        q_per_sec=total_queries / total_wall,
        total_queries=total_queries,
        wall_seconds=total_wall,
        latency_p50_ms=_nearest_rank(latencies, 50) * 1000.0,
        latency_p95_ms=_nearest_rank(latencies, 95) * 1000.0,
        latency_p99_ms=_nearest_rank(latencies, 99) * 1000.0,
        mode=mode,
        trials=trial_qps,
        workers=workers if mode == "concurrent" else 1,
        checksum=checksum,
    )

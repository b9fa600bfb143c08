"""Distant supervision: building training examples from stage-1 candidates.

Positives follow one of four strategies:
  self         — the input question itself
  similar      — candidate whose answer best F1-matches the gold (>= min_f1)
  similar-self — candidate whose answer exactly matches the gold, else self
  same-answer  — a seeded-random candidate whose answer exactly matches

Negatives are candidates whose answers exact-match none of the golds,
taken in stage-1 rank order (hardest first) by default.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from .corpus import EvalQuestion, QAPair
from .textnorm import exact_match, token_f1

DEFAULT_NEGATIVES = 16
DEFAULT_MIN_F1 = 0.5
DEFAULT_FANOUT = 50


class Strategy(enum.Enum):
    SELF = "self"
    SIMILAR = "similar"
    SIMILAR_SELF = "similar-self"
    SAME_ANSWER = "same-answer"


@dataclass(frozen=True)
class Positive:
    kind: str  # "indexed" | "text"
    value: Union[int, str]


@dataclass(frozen=True)
class TrainingExample:
    qid: int
    query: str
    positive: Positive
    negatives: Tuple[int, ...]

    def __post_init__(self):
        if not self.negatives:
            raise ValueError("an example needs at least one negative")
        if self.positive.kind == "indexed" and self.positive.value in self.negatives:
            raise ValueError("positive id also listed as a negative")


@dataclass
class BuildSummary:
    kept: int = 0
    skipped_no_positive: int = 0
    skipped_no_negative: int = 0


def _question_rng(seed: int, qid: int) -> random.Random:
    # Stable across runs and independent of processing order.
    return random.Random((seed << 32) ^ (qid & 0xFFFFFFFF))


def select_positive(
    query: EvalQuestion,
    candidates: Sequence[Tuple[int, float]],
    corpus: List[QAPair],
    strategy: Strategy,
    min_f1: float = DEFAULT_MIN_F1,
    rng: Optional[random.Random] = None,
) -> Optional[Positive]:
    """Pick the positive sample per strategy, or None when infeasible."""
    golds = query.gold_answers
    if strategy is Strategy.SELF:
        return Positive("text", query.question)

    if strategy is Strategy.SIMILAR:
        best_id, best_f1 = None, -1.0
        for cid, _score in candidates:
            f1 = token_f1(corpus[cid].answer, golds)
            if f1 > best_f1:  # ties keep the better stage-1 rank
                best_id, best_f1 = cid, f1
        if best_id is None or best_f1 < min_f1:
            return None
        return Positive("indexed", best_id)

    matching = [cid for cid, _score in candidates if exact_match(corpus[cid].answer, golds)]
    if strategy is Strategy.SIMILAR_SELF:
        if matching:
            return Positive("indexed", matching[0])
        return Positive("text", query.question)

    if strategy is Strategy.SAME_ANSWER:
        if not matching:
            return None
        if rng is None:
            rng = random.Random(0)
        return Positive("indexed", rng.choice(matching))

    raise ValueError(f"unknown strategy {strategy!r}")


def select_negatives(
    query: EvalQuestion,
    candidates: Sequence[Tuple[int, float]],
    corpus: List[QAPair],
    positive: Optional[Positive],
    m: int = DEFAULT_NEGATIVES,
    rng: Optional[random.Random] = None,
    random_sample: bool = False,
) -> List[int]:
    """Up to m candidates whose answers exact-match no gold.

    Rank order by default (hard negatives); seeded uniform sampling when
    random_sample is set.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    excluded = positive.value if positive is not None and positive.kind == "indexed" else None
    pool = [
        cid
        for cid, _score in candidates
        if cid != excluded and not exact_match(corpus[cid].answer, query.gold_answers)
    ]
    if random_sample and len(pool) > m:
        if rng is None:
            rng = random.Random(0)
        return sorted(rng.sample(pool, m), key=pool.index)
    return pool[:m]


def build_examples(
    train_set: List[EvalQuestion],
    first_stage,
    corpus: List[QAPair],
    k: int = DEFAULT_FANOUT,
    strategy: Strategy = Strategy.SIMILAR,
    m: int = DEFAULT_NEGATIVES,
    min_f1: float = DEFAULT_MIN_F1,
    seed: int = 0,
    random_negatives: bool = False,
) -> Tuple[List[TrainingExample], BuildSummary]:
    """One example per train question with a positive and >= 1 negative."""
    summary = BuildSummary()
    examples: List[TrainingExample] = []
    for question in sorted(train_set, key=lambda q: q.id):
        rng = _question_rng(seed, question.id)
        candidates = first_stage.search(question.question, k)
        positive = select_positive(
            question, candidates, corpus, strategy, min_f1=min_f1, rng=rng
        )
        if positive is None:
            summary.skipped_no_positive += 1
            continue
        negatives = select_negatives(
            question,
            candidates,
            corpus,
            positive,
            m=m,
            rng=rng,
            random_sample=random_negatives,
        )
        if not negatives:
            summary.skipped_no_negative += 1
            continue
        examples.append(
            TrainingExample(
                qid=question.id,
                query=question.question,
                positive=positive,
                negatives=tuple(negatives),
            )
        )
        summary.kept += 1
    return examples, summary


def save_examples(examples: List[TrainingExample], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(
                json.dumps(
                    {
                        "qid": ex.qid,
                        "query": ex.query,
                        "positive": {"kind": ex.positive.kind, "value": ex.positive.value},
                        "negatives": list(ex.negatives),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_examples(path: Union[str, Path]) -> List[TrainingExample]:
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            examples.append(
                TrainingExample(
                    qid=rec["qid"],
                    query=rec["query"],
                    positive=Positive(rec["positive"]["kind"], rec["positive"]["value"]),
                    negatives=tuple(rec["negatives"]),
                )
            )
    return examples

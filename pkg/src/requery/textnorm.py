"""Answer/question normalization and the EM / token-level F1 metrics.

Normalization applies, in order: lowercase, deletion of ASCII punctuation
(any ASCII character that is neither alphanumeric nor whitespace; non-ASCII
characters are kept as-is), removal of the English articles "a"/"an"/"the"
as whole tokens, and splitting on whitespace runs.
"""

from __future__ import annotations

from collections import Counter
from typing import List, Sequence

_ARTICLES = frozenset({"a", "an", "the"})


def normalize(text: str) -> List[str]:
    """Normalize text into a list of comparison tokens."""
    lowered = text.lower()
    kept = [
        ch
        for ch in lowered
        if ord(ch) >= 128 or ch.isalnum() or ch.isspace()
    ]
    return [tok for tok in "".join(kept).split() if tok not in _ARTICLES]


def exact_match(prediction: str, golds: Sequence[str]) -> int:
    """1 iff the normalized prediction equals some normalized gold answer."""
    if not golds:
        raise ValueError("golds must be non-empty")
    pred = normalize(prediction)
    return int(any(pred == normalize(g) for g in golds))


def _f1_single(pred_tokens: List[str], gold_tokens: List[str]) -> float:
    if not pred_tokens and not gold_tokens:
        return 1.0
    common = Counter(pred_tokens) & Counter(gold_tokens)
    overlap = sum(common.values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def token_f1(prediction: str, golds: Sequence[str]) -> float:
    """Bag-of-tokens F1 between prediction and the best-matching gold."""
    if not golds:
        raise ValueError("golds must be non-empty")
    pred_tokens = normalize(prediction)
    return max(_f1_single(pred_tokens, normalize(g)) for g in golds)

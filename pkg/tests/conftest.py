"""Shared fixtures and independent oracles for the test suite.

The oracles deliberately avoid the production code paths: naive BM25
scores every document directly from token lists, and naive MIPS sorts
plain dot products.
"""

import math
import random
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from requery.corpus import QAPair
from requery.textnorm import normalize

FIXTURES = Path(__file__).parent / "fixtures"


def naive_bm25_search(corpus, query, k, k1=1.2, b=0.75):
    """Per-document BM25 scorer without an inverted index."""
    docs = [normalize(p.question) for p in corpus]
    n = len(docs)
    avgdl = sum(len(d) for d in docs) / n
    df = Counter()
    for doc in docs:
        for term in set(doc):
            df[term] += 1
    query_terms = normalize(query)
    hits = []
    for i, doc in enumerate(docs):
        tf = Counter(doc)
        score = 0.0
        for term in query_terms:
            if term not in tf:
                continue
            idf = math.log(1.0 + (n - df[term] + 0.5) / (df[term] + 0.5))
            denom = tf[term] + k1 * (1.0 - b + b * len(doc) / (avgdl or 1.0))
            score += idf * tf[term] * (k1 + 1.0) / denom
        if score > 0.0:
            hits.append((i, score))
    hits.sort(key=lambda h: (-h[1], h[0]))
    return hits[:k]


def naive_mips(matrix, query, candidate_ids, k):
    """Dot products via an explicit python loop, then a full sort."""
    hits = []
    for cid in candidate_ids:
        acc = 0.0
        for a, b in zip(matrix[cid], query):
            acc += float(a) * float(b)
        hits.append((int(cid), acc))
    hits.sort(key=lambda h: (-round(h[1], 9), h[0]))
    return hits[:k]


def random_corpus(rng, n_docs, vocab_size, max_len=8):
    vocab = [f"w{i}" for i in range(vocab_size)]
    pairs = []
    for i in range(n_docs):
        length = rng.randint(1, max_len)
        question = " ".join(rng.choice(vocab) for _ in range(length))
        pairs.append(QAPair(id=i, question=question, answer=f"ans{i}"))
    return pairs


@pytest.fixture
def tiny_corpus():
    return [
        QAPair(0, "who wrote hamlet", "shakespeare"),
        QAPair(1, "who wrote the play hamlet", "shakespeare"),
        QAPair(2, "capital of france", "paris"),
        QAPair(3, "capital of spain", "madrid"),
        QAPair(4, "who wrote war and peace", "tolstoy"),
        QAPair(5, "tallest mountain on earth", "everest"),
    ]

import numpy as np
import pytest

from requery.cascade import (
    NO_ANSWER_ID,
    CascadeConfig,
    DenseFirstStage,
    retrieve,
    retrieve_batch,
)
from requery.corpus import QAPair
from requery.encoder import EncoderParams, embed, embed_corpus, featurize, fnv1a64, init_params
from requery.sparse import build_sparse_index


def test_k1_degenerate_fanout(tiny_corpus):
    index = build_sparse_index(tiny_corpus)
    params = init_params(hash_dim=256, embed_dim=8, seed=0)
    matrix = embed_corpus(params, tiny_corpus)
    result = retrieve(
        "who wrote hamlet", index, params, matrix, tiny_corpus, CascadeConfig(k=1)
    )
    stage1_top = index.search("who wrote hamlet", 1)[0][0]
    assert result.chosen == stage1_top
    assert result.answer == tiny_corpus[stage1_top].answer


def test_empty_stage1_gives_no_answer(tiny_corpus):
    index = build_sparse_index(tiny_corpus)
    params = init_params(hash_dim=256, embed_dim=8, seed=0)
    matrix = embed_corpus(params, tiny_corpus)
    result = retrieve("zzz qqq xyzzy", index, params, matrix, tiny_corpus)
    assert result.no_answer
    assert result.chosen == NO_ANSWER_ID
    assert result.answer == ""
    assert result.candidates == ()


def test_size_mismatch_rejected(tiny_corpus):
    index = build_sparse_index(tiny_corpus)
    params = init_params(hash_dim=256, embed_dim=8, seed=0)
    matrix = embed_corpus(params, tiny_corpus)[:3]
    with pytest.raises(ValueError, match="corpus"):
        retrieve("who wrote hamlet", index, params, matrix, tiny_corpus)


def test_second_stage_overrides_first():
    """Stage 1 ranks a distractor first; crafted encoder weights prefer the
    planted paraphrase. Expected sims verified with an explicit loop."""
    corpus = [
        QAPair(0, "famous hamlet play inquiry", "distractor"),     # lexically close
        QAPair(1, "which author penned hamlet", "shakespeare"),    # true paraphrase
        QAPair(2, "capital of france", "paris"),
    ]
    query = "who famous hamlet inquiry penned"
    index = build_sparse_index(corpus)
    stage1 = index.search(query, 3)
    assert stage1[0][0] == 0  # distractor shares 3 terms, paraphrase only 2

    hash_dim, embed_dim = 4096, 2
    weights = np.zeros((embed_dim, hash_dim))
    # reward the tokens unique to the true paraphrase
    for row, token in ((0, "author"), (1, "penned")):
        weights[row, fnv1a64(token.encode(), 0) % hash_dim] = 1.0
    params = EncoderParams(hash_dim=hash_dim, embed_dim=embed_dim, weights=weights, seed=0)
    matrix = embed_corpus(params, corpus)

    # hand verification of similarities via a naive loop
    qv = embed(params, query)
    sims = [sum(float(a) * float(b) for a, b in zip(qv, matrix[p.id])) for p in corpus]
    assert sims[1] > sims[0] and sims[1] > sims[2]

    result = retrieve(query, index, params, matrix, corpus, CascadeConfig(k=3))
    assert result.chosen == 1
    assert result.answer == "shakespeare"
    assert result.candidates[0].stage2_rank == 1
    assert result.candidates[0].qa_id == 1


def test_chosen_within_stage1_set(tiny_corpus):
    index = build_sparse_index(tiny_corpus)
    params = init_params(hash_dim=256, embed_dim=8, seed=1)
    matrix = embed_corpus(params, tiny_corpus)
    for query in ["who wrote hamlet", "capital of spain", "tallest mountain"]:
        result = retrieve(query, index, params, matrix, tiny_corpus, CascadeConfig(k=3))
        stage1_ids = {cid for cid, _s in index.search(query, 3)}
        assert result.chosen in stage1_ids
        assert {c.qa_id for c in result.candidates} == stage1_ids


def test_batch_empty_and_singleton(tiny_corpus):
    index = build_sparse_index(tiny_corpus)
    params = init_params(hash_dim=256, embed_dim=8, seed=0)
    matrix = embed_corpus(params, tiny_corpus)
    assert retrieve_batch([], index, params, matrix, tiny_corpus) == []
    single = retrieve_batch(["who wrote hamlet"], index, params, matrix, tiny_corpus)
    assert single == [retrieve("who wrote hamlet", index, params, matrix, tiny_corpus)]


def test_batch_mode_equivalence(tiny_corpus):
    index = build_sparse_index(tiny_corpus)
    params = init_params(hash_dim=256, embed_dim=8, seed=0)
    matrix = embed_corpus(params, tiny_corpus)
    queries = [p.question for p in tiny_corpus] * 10 + ["no such terms anywhere"]
    sequential = retrieve_batch(
        queries, index, params, matrix, tiny_corpus, CascadeConfig(k=4)
    )
    concurrent = retrieve_batch(
        queries,
        index,
        params,
        matrix,
        tiny_corpus,
        CascadeConfig(k=4, concurrent_encoders=True),
    )
    assert sequential == concurrent


def test_dense_first_stage(tiny_corpus):
    params = init_params(hash_dim=256, embed_dim=8, seed=0)
    matrix = embed_corpus(params, tiny_corpus)
    stage1 = DenseFirstStage(params, matrix)
    hits = stage1.search("who wrote hamlet", 3)
    assert len(hits) == 3
    result = retrieve("who wrote hamlet", stage1, params, matrix, tiny_corpus)
    assert not result.no_answer

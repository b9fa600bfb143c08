"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion
lines. The shared synthetic benchmark is built once per session.
"""

import json
import math
import random
import time

import numpy as np
import pytest

from requery.cascade import CascadeConfig, retrieve, retrieve_batch
from requery.corpus import QAPair
from requery.dense import mips_full, mips_restricted
from requery.encoder import embed_corpus, init_params
from requery.evalbench import bench_throughput, eval_em, recall_at_k
from requery.sparse import build_sparse_index, sparse_search
from requery.supervision import Strategy, build_examples, save_examples
from requery.synth import generate_benchmark
from requery.textnorm import exact_match, token_f1
from requery.training import (
    TrainConfig,
    contrastive_loss,
    loss_and_grad,
    save_checkpoint,
    train,
)

from conftest import FIXTURES, naive_bm25_search, naive_mips, random_corpus
from test_training import finite_difference_grad, small_instance


HASH_DIM = 4096
EMBED_DIM = 32
INIT_SCALE = 0.01
TRAIN_CFG = TrainConfig(
    learning_rate=2.0, batch_size=32, max_epochs=12, patience=3, seed=0, cascade_k=50
)


def report(criterion, description, ok):
    print(f"[ACCEPTANCE] criterion {criterion} ({description}): {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {criterion} failed: {description}"


@pytest.fixture(scope="module")
def synth():
    bench = generate_benchmark(seed=0)
    index = build_sparse_index(bench.corpus)
    return bench, index


def train_strategy(bench, index, strategy):
    examples, _ = build_examples(
        bench.train, index, bench.corpus, k=50, strategy=strategy, m=16, seed=0
    )
    params0 = init_params(hash_dim=HASH_DIM, embed_dim=EMBED_DIM, seed=0, scale=INIT_SCALE)
    params, train_report = train(params0, examples, bench.corpus, bench.val, index, TRAIN_CFG)
    return params, train_report


@pytest.fixture(scope="module")
def trained(synth):
    bench, index = synth
    params, _ = train_strategy(bench, index, Strategy.SIMILAR)
    return params


def cascade_em(bench, index, params, k=50):
    matrix = embed_corpus(params, bench.corpus)
    config = CascadeConfig(k=k)

    def answer_fn(question):
        return retrieve(question, index, params, matrix, bench.corpus, config).answer

    return eval_em(answer_fn, bench.test).em


def test_criterion_1_metric_oracle():
    start = time.perf_counter()
    with open(FIXTURES / "metric_cases.jsonl", encoding="utf-8") as fh:
        cases = [json.loads(line) for line in fh if line.strip()]
    assert len(cases) == 20
    ok = True
    for case in cases:
        ok &= exact_match(case["prediction"], case["golds"]) == case["expected_em"]
        ok &= abs(token_f1(case["prediction"], case["golds"]) - case["expected_f1"]) <= 1e-9
    elapsed = time.perf_counter() - start
    report(1, "EM/F1 metric oracle, 20 hand-computed cases", ok and elapsed < 1.0)


def test_criterion_2_bm25_equivalence():
    start = time.perf_counter()
    rng = random.Random(202)
    ok = True
    for _ in range(100):
        corpus = random_corpus(rng, rng.randint(1, 200), rng.randint(3, 50))
        index = build_sparse_index(corpus)
        query = " ".join(
            rng.choice([f"w{i}" for i in range(50)]) for _ in range(rng.randint(1, 6))
        )
        k = rng.randint(1, len(corpus))
        got = sparse_search(index, query, k)
        want = naive_bm25_search(corpus, query, k)
        ok &= [h[0] for h in got] == [h[0] for h in want]
        ok &= all(abs(g[1] - w[1]) <= 1e-9 for g, w in zip(got, want))

    single = build_sparse_index([QAPair(0, "apple banana", "a")], k1=1.2, b=0.75)
    hand = sparse_search(single, "apple", 5)[0][1]
    ok &= abs(hand - math.log(4 / 3)) <= 1e-6
    elapsed = time.perf_counter() - start
    report(2, f"BM25 brute-force equivalence on 100 corpora ({elapsed:.1f}s)", ok and elapsed < 30)


def test_criterion_3_mips_exactness():
    start = time.perf_counter()
    rng = np.random.default_rng(303)
    ok = True
    for trial in range(1000):
        n = int(rng.integers(2, 30))
        d = int(rng.integers(1, 9))
        matrix = rng.normal(size=(n, d)).astype(np.float32)
        query = rng.normal(size=d)
        n_cand = int(rng.integers(1, n + 1))
        cands = rng.choice(n, size=n_cand, replace=False)
        k = int(rng.integers(1, n_cand + 1))
        got = mips_restricted(matrix, query, cands, k)
        want = naive_mips(matrix, query, cands, k)
        ok &= [h[0] for h in got] == [h[0] for h in want]
        if trial % 5 == 0:
            got_f = mips_full(matrix, query, k)
            want_f = naive_mips(matrix, query, range(n), k)
            ok &= [h[0] for h in got_f] == [h[0] for h in want_f]
    elapsed = time.perf_counter() - start
    report(3, f"exact MIPS vs naive sort, 1000 instances ({elapsed:.1f}s)", ok and elapsed < 10)


def test_criterion_4_gradient_check():
    start = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        params, example, corpus = small_instance(seed)
        _loss, grad = loss_and_grad(params, example, corpus)
        fd = finite_difference_grad(params, example, corpus)
        mask = (np.abs(fd) > 1e-10) | (np.abs(grad) > 1e-10)
        if mask.any():
            rel = np.abs(grad - fd)[mask] / np.maximum(np.abs(fd)[mask], 1e-8)
            worst = max(worst, float(rel.max()))
    ok = worst < 1e-4

    for m in (1, 4, 16):
        ok &= abs(contrastive_loss(0.3, [0.3] * m) - math.log(m + 1)) <= 1e-9
    base = contrastive_loss(1.1, [0.4, -0.2])
    for c in (-7.0, 0.5, 40.0):
        ok &= abs(contrastive_loss(1.1 + c, [0.4 + c, -0.2 + c]) - base) <= 1e-9
    elapsed = time.perf_counter() - start
    report(4, f"analytic gradient vs finite differences, worst rel err {worst:.2e}", ok and elapsed < 10)


def test_criterion_5_upper_bound_law(synth, trained):
    bench, index = synth
    recall = recall_at_k(index, bench.test, bench.corpus, [50])[50]
    untrained = init_params(hash_dim=HASH_DIM, embed_dim=EMBED_DIM, seed=1, scale=INIT_SCALE)
    ok = True
    for params in (trained, untrained):
        ok &= cascade_em(bench, index, params, k=50) <= recall
    report(5, "cascade EM <= stage-1 recall@50, trained and untrained", ok)


def test_criterion_6_directional_supervision(synth, trained):
    start = time.perf_counter()
    bench, index = synth

    def stage1_answer(question):
        hits = index.search(question, 1)
        return bench.corpus[hits[0][0]].answer if hits else ""

    stage1_em = eval_em(stage1_answer, bench.test).em
    similar_em = cascade_em(bench, index, trained)
    self_params, _ = train_strategy(bench, index, Strategy.SELF)
    self_em = cascade_em(bench, index, self_params)
    elapsed = time.perf_counter() - start

    print(
        f"[ACCEPTANCE] criterion 6 runs: stage1-only EM {stage1_em:.1f}, "
        f"Self EM {self_em:.1f}, Similar EM {similar_em:.1f} ({elapsed:.0f}s)"
    )
    ordering_ok = similar_em >= self_em
    print(
        f"[ACCEPTANCE] criterion 6 ordering check (Similar >= Self): "
        f"{'PASS' if ordering_ok else 'FAIL (non-blocking)'}"
    )
    blocking_ok = similar_em >= stage1_em + 5.0 and elapsed < 300
    report(6, "Similar training beats stage-1-only EM by >= 5 points", blocking_ok)


def test_criterion_7_early_stopping():
    from test_training import RiggedStage1, make_training_setup

    corpus, examples, val, _ = make_training_setup()
    stage1 = RiggedStage1(corpus, schedule=[0, 2, 2, 2])
    params0 = init_params(hash_dim=64, embed_dim=4, seed=0)
    cfg = TrainConfig(learning_rate=0.1, batch_size=2, max_epochs=10, patience=1, seed=0)
    _params, train_report = train(params0, examples, corpus, val, stage1, cfg)
    ok = (
        train_report.stopped_early
        and train_report.best_epoch == 1
        and len(train_report.epochs) == 2
    )
    report(7, "rigged validation stops at the constructed best epoch", ok)


def test_criterion_8_benchmark_sanity(synth, trained):
    bench, index = synth
    matrix = embed_corpus(trained, bench.corpus)
    queries = [q.question for q in bench.test][:100]

    def answer_fn(question):
        return retrieve(question, index, trained, matrix, bench.corpus, CascadeConfig(k=50)).answer

    bench_report = bench_throughput(answer_fn, queries, warmup=5, trials=3)
    ok = abs(bench_report.q_per_sec * bench_report.wall_seconds - bench_report.total_queries) < 1e-6
    ok &= len(bench_report.trials) == 3 and all(t > 0 for t in bench_report.trials)
    print(
        f"[ACCEPTANCE] criterion 8 throughput: {bench_report.q_per_sec:.0f} Q/sec "
        f"(per-trial {[round(t) for t in bench_report.trials]})"
    )

    batch = [q.question for q in bench.test]* 1
    batch = batch[:200] if len(batch) >= 200 else batch * (200 // len(batch) + 1)
    batch = batch[:200]
    sequential = retrieve_batch(batch, index, trained, matrix, bench.corpus, CascadeConfig(k=50))
    concurrent = retrieve_batch(
        batch, index, trained, matrix, bench.corpus, CascadeConfig(k=50, concurrent_encoders=True)
    )
    ok &= sequential == concurrent
    report(8, "Q/sec identity, 3-trial mean, concurrent == sequential", ok)


def test_criterion_9_determinism(synth, tmp_path):
    bench, _ = synth
    artifacts = []
    for run in range(2):
        index = build_sparse_index(bench.corpus)
        examples, _ = build_examples(
            bench.train, index, bench.corpus, k=50, strategy=Strategy.SIMILAR, m=16, seed=0
        )
        examples_path = tmp_path / f"examples{run}.jsonl"
        save_examples(examples, examples_path)
        params0 = init_params(hash_dim=HASH_DIM, embed_dim=EMBED_DIM, seed=0, scale=INIT_SCALE)
        cfg = TrainConfig(
            learning_rate=2.0, batch_size=32, max_epochs=3, patience=3, seed=0, cascade_k=50
        )
        params, _ = train(params0, examples, bench.corpus, bench.val, index, cfg)
        ckpt_path = tmp_path / f"model{run}.sqck"
        save_checkpoint(params, cfg, ckpt_path)
        matrix = embed_corpus(params, bench.corpus)

        def answer_fn(question):
            return retrieve(question, index, params, matrix, bench.corpus, CascadeConfig(k=50)).answer

        eval_report = eval_em(answer_fn, bench.test, keep_per_question=True)
        artifacts.append(
            (examples_path.read_bytes(), ckpt_path.read_bytes(), eval_report.em, eval_report.per_question)
        )
    ok = (
        artifacts[0][0] == artifacts[1][0]
        and artifacts[0][1] == artifacts[1][1]
        and artifacts[0][2] == artifacts[1][2]
        and artifacts[0][3] == artifacts[1][3]
    )
    report(9, "same-seed pipeline reruns are bit-identical", ok)

"""Contrastive training of the linear encoder with exact analytic gradients.

Loss per example: -log softmax of the positive similarity against the m
negative similarities. Gradients flow through both sides of every sim
(query and candidate embeddings share the encoder). Plain mini-batch
gradient descent; bit-deterministic given (seed, config, examples).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .cascade import CascadeConfig, retrieve
from .corpus import EvalQuestion, QAPair
from .encoder import (
    EncoderParams,
    SparseFeatures,
    embed_corpus,
    featurize,
)
from .supervision import TrainingExample
from .textnorm import exact_match

_CKPT_MAGIC = b"SQCK"
_CKPT_VERSION = 1


class CheckpointFormatError(ValueError):
    """Raised for malformed or unsupported checkpoint files."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    batch_size: int = 32
    max_epochs: int = 20
    patience: int = 3
    m: int = 16
    seed: int = 0
    cascade_k: int = 50

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class EpochStats:
    mean_loss: float
    val_em: float


@dataclass
class TrainReport:
    epochs: List[EpochStats] = field(default_factory=list)
    best_epoch: int = 0  # 1-based; 0 when no epoch ran
    stopped_early: bool = False


def contrastive_loss(sim_pos: float, sim_negs: Sequence[float]) -> float:
    """-log softmax of the positive against the negatives, overflow-safe."""
    if len(sim_negs) == 0:
        raise ValueError("sim_negs must be non-empty")
    sims = np.concatenate(([sim_pos], np.asarray(sim_negs, dtype=np.float64)))
    if not np.all(np.isfinite(sims)):
        raise ValueError("similarities must be finite")
    peak = sims.max()
    return float(peak + np.log(np.exp(sims - peak).sum()) - sim_pos)


def _example_features(
    params: EncoderParams, example: TrainingExample, corpus: List[QAPair]
) -> Tuple[SparseFeatures, List[SparseFeatures]]:
    query_f = featurize(example.query, params.hash_dim, params.seed)
    if example.positive.kind == "indexed":
        pos_text = corpus[example.positive.value].question
    else:
        pos_text = example.positive.value
    cand_f = [featurize(pos_text, params.hash_dim, params.seed)]
    cand_f.extend(
        featurize(corpus[cid].question, params.hash_dim, params.seed)
        for cid in example.negatives
    )
    return query_f, cand_f


def loss_and_grad(
    params: EncoderParams,
    example: TrainingExample,
    corpus: List[QAPair],
) -> Tuple[float, np.ndarray]:
    """Loss and its exact gradient w.r.t. the encoder weights.

    With query features f, candidate features g_j, embeddings u = Wf and
    v_j = Wg_j, and softmax weights p_j over s_j = u.v_j (positive is
    j = 0): dL/dW = sum_j (p_j - [j=0]) (u g_j^T + v_j f^T).
    """
    W = params.weights
    query_f, cand_f = _example_features(params, example, corpus)

    u = W[:, query_f.indices] @ query_f.values if len(query_f.indices) else np.zeros(params.embed_dim)
    v = [
        W[:, g.indices] @ g.values if len(g.indices) else np.zeros(params.embed_dim)
        for g in cand_f
    ]
    sims = np.array([u @ vj for vj in v])
    peak = sims.max()
    exp = np.exp(sims - peak)
    p = exp / exp.sum()
    loss = float(peak + np.log(exp.sum()) - sims[0])

    coef = p.copy()
    coef[0] -= 1.0

    grad = np.zeros_like(W)
    # sum_j coef_j * u g_j^T : rank-1 updates on each candidate's columns
    for cj, g in zip(coef, cand_f):
        if len(g.indices):
            grad[:, g.indices] += np.outer(u, cj * g.values)
    # (sum_j coef_j v_j) f^T
    if len(query_f.indices):
        vsum = np.zeros(params.embed_dim)
        for cj, vj in zip(coef, v):
            vsum += cj * vj
        grad[:, query_f.indices] += np.outer(vsum, query_f.values)
    return loss, grad


def _validation_em(
    params: EncoderParams,
    corpus: List[QAPair],
    val_set: List[EvalQuestion],
    first_stage,
    k: int,
) -> float:
    matrix = embed_corpus(params, corpus)
    config = CascadeConfig(k=k)
    hits = 0
    for q in val_set:
        result = retrieve(q.question, first_stage, params, matrix, corpus, config)
        if not result.no_answer and exact_match(result.answer, q.gold_answers):
            hits += 1
    return 100.0 * hits / len(val_set) if val_set else 0.0


def train(
    params0: EncoderParams,
    examples: List[TrainingExample],
    corpus: List[QAPair],
    val_set: List[EvalQuestion],
    first_stage,
    config: TrainConfig = TrainConfig(),
) -> Tuple[EncoderParams, TrainReport]:
    """Mini-batch gradient descent with early stopping on validation EM."""
    if not examples:
        raise ValueError("examples must be non-empty")
    report = TrainReport()
    if config.max_epochs == 0:
        return params0, report

    W = params0.weights.copy()
    params = EncoderParams(params0.hash_dim, params0.embed_dim, W, params0.seed)
    rng = np.random.default_rng(config.seed)
    ordered = sorted(examples, key=lambda ex: ex.qid)

    best_em = -1.0
    best_weights = W.copy()
    epochs_since_best = 0

    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(len(ordered))
        losses = []
        for start in range(0, len(ordered), config.batch_size):
            batch = [ordered[i] for i in perm[start : start + config.batch_size]]
            # fixed accumulation order (by qid) keeps the sum bit-deterministic
            batch.sort(key=lambda ex: ex.qid)
            grad_sum = np.zeros_like(W)
            for ex in batch:
                loss, grad = loss_and_grad(params, ex, corpus)
                losses.append(loss)
                grad_sum += grad
            W -= config.learning_rate * grad_sum / len(batch)

        val_em = _validation_em(params, corpus, val_set, first_stage, config.cascade_k)
        report.epochs.append(EpochStats(mean_loss=float(np.mean(losses)), val_em=val_em))

        if val_em > best_em:
            best_em = val_em
            best_weights = W.copy()
            report.best_epoch = epoch
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= config.patience:
                report.stopped_early = True
                break

    final = EncoderParams(params0.hash_dim, params0.embed_dim, best_weights, params0.seed)
    return final, report


def save_checkpoint(
    params: EncoderParams, config: TrainConfig, path: Union[str, Path]
) -> None:
    """SQCK file: magic, version, JSON config echo, then f32 weights."""
    meta = {
        "hash_dim": params.hash_dim,
        "embed_dim": params.embed_dim,
        "seed": params.seed,
        "config": {
            "learning_rate": config.learning_rate,
            "batch_size": config.batch_size,
            "max_epochs": config.max_epochs,
            "patience": config.patience,
            "m": config.m,
            "seed": config.seed,
            "cascade_k": config.cascade_k,
        },
    }
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<II", _CKPT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<QI", params.embed_dim, params.hash_dim))
        fh.write(params.weights.astype("<f4").tobytes())


def load_checkpoint(path: Union[str, Path]) -> Tuple[EncoderParams, dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _CKPT_MAGIC:
        raise CheckpointFormatError("not a checkpoint file (bad magic)")
    version, meta_len = struct.unpack_from("<II", blob, 4)
    if version != _CKPT_VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    off = 12
    meta = json.loads(blob[off : off + meta_len].decode("utf-8"))
    off += meta_len
    rows, dim = struct.unpack_from("<QI", blob, off)
    off += struct.calcsize("<QI")
    weights = (
        np.frombuffer(blob[off : off + rows * dim * 4], dtype="<f4")
        .reshape(rows, dim)
        .astype(np.float64)
    )
    params = EncoderParams(
        hash_dim=meta["hash_dim"],
        embed_dim=meta["embed_dim"],
        weights=weights,
        seed=meta["seed"],
    )
    return params, meta

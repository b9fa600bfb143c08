"""Command-line driver for the full pipeline.

Exit codes: 0 success, 1 validation error, 2 I/O error. Machine-readable
output (JSON) goes to stdout; human summaries to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import kernels
from .cascade import CascadeConfig, DenseFirstStage, retrieve, retrieve_batch
from .corpus import (
    CorpusError,
    load_eval_set,
    load_qa_corpus,
    save_qa_corpus,
)
from .encoder import (
    DEFAULT_EMBED_DIM,
    DEFAULT_HASH_DIM,
    EmbeddingFormatError,
    embed_corpus,
    init_params,
    load_embeddings,
    save_embeddings,
)
from .evalbench import bench_throughput, eval_em, recall_at_k
from .manifest import ManifestError, update_manifest, verify_manifest
from .service import ServiceState, create_app, result_to_dict
from .sparse import (
    DEFAULT_B,
    DEFAULT_K1,
    IndexFormatError,
    build_sparse_index,
    load_sparse_index,
    save_sparse_index,
)
from .supervision import Strategy, build_examples, load_examples, save_examples
from .training import (
    CheckpointFormatError,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    train,
)

_VALIDATION_ERRORS = (
    CorpusError,
    IndexFormatError,
    EmbeddingFormatError,
    CheckpointFormatError,
    ManifestError,
    ValueError,
)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _manifest_path(args) -> Optional[Path]:
    return Path(args.manifest) if getattr(args, "manifest", None) else None


def _record(args, artifacts: dict, config: Optional[dict] = None) -> None:
    manifest = _manifest_path(args)
    if manifest is not None:
        update_manifest(manifest, artifacts, config)


def _load_params(args):
    if getattr(args, "checkpoint", None):
        params, _meta = load_checkpoint(args.checkpoint)
        return params
    return init_params(
        hash_dim=args.hash_dim, embed_dim=args.dim, seed=args.seed
    )


def _load_vectors(args, params, corpus):
    if getattr(args, "embeddings", None):
        matrix = load_embeddings(args.embeddings)
        if matrix.shape[0] != len(corpus):
            raise ValueError(
                f"embedding rows ({matrix.shape[0]}) do not match corpus size ({len(corpus)})"
            )
        return matrix
    return embed_corpus(params, corpus)


def _add_encoder_flags(parser):
    parser.add_argument("--checkpoint", help="trained encoder checkpoint (SQCK)")
    parser.add_argument("--embeddings", help="precomputed index vectors (SQEM)")
    parser.add_argument("--hash-dim", type=int, default=DEFAULT_HASH_DIM)
    parser.add_argument("--dim", type=int, default=DEFAULT_EMBED_DIM)
    parser.add_argument("--seed", type=int, default=0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="requery")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a QA corpus JSONL file")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")

    p = sub.add_parser("build-sparse", help="build the BM25 index")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k1", type=float, default=DEFAULT_K1)
    p.add_argument("--b", type=float, default=DEFAULT_B)
    p.add_argument("--manifest")

    p = sub.add_parser("embed", help="build/refresh the index vector file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    _add_encoder_flags(p)
    p.add_argument("--manifest")

    p = sub.add_parser("build-examples", help="distant-supervision examples")
    p.add_argument("--corpus", required=True)
    p.add_argument("--train-set", required=True)
    p.add_argument("--sparse", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=50)
    p.add_argument(
        "--strategy",
        choices=[s.value for s in Strategy],
        default=Strategy.SIMILAR.value,
    )
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--min-f1", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--random-negatives", action="store_true")
    p.add_argument("--manifest")

    p = sub.add_parser("train", help="train the second-stage encoder")
    p.add_argument("--corpus", required=True)
    p.add_argument("--examples", required=True)
    p.add_argument("--val-set", required=True)
    p.add_argument("--sparse", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hash-dim", type=int, default=DEFAULT_HASH_DIM)
    p.add_argument("--dim", type=int, default=DEFAULT_EMBED_DIM)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-epochs", type=int, default=20)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--manifest")

    for name in ("eval", "recall", "bench", "retrieve"):
        p = sub.add_parser(name)
        p.add_argument("--corpus", required=True)
        p.add_argument("--sparse", required=True)
        p.add_argument("--manifest")
        if name != "recall":
            _add_encoder_flags(p)
        if name in ("eval", "recall"):
            p.add_argument("--eval-set", required=True)
        if name == "eval":
            p.add_argument("--k", type=int, default=50)
            p.add_argument("--per-question", action="store_true")
        if name == "recall":
            p.add_argument("--ks", default="5,10,50")
        if name == "bench":
            p.add_argument("--queries", required=True, help="eval-set JSONL of queries")
            p.add_argument("--k", type=int, default=50)
            p.add_argument("--warmup", type=int, default=10)
            p.add_argument("--mode", choices=["sequential", "concurrent"], default="sequential")
            p.add_argument("--trials", type=int, default=3)
        if name == "retrieve":
            p.add_argument("--q", required=True)
            p.add_argument("--k", type=int, default=50)

    p = sub.add_parser("serve", help="HTTP retrieval service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--sparse", required=True)
    _add_encoder_flags(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--manifest")
    return parser


def _cmd_ingest(args) -> int:
    pairs = load_qa_corpus(args.inp)
    save_qa_corpus(pairs, args.out)
    _record(args, {"corpus": args.out})
    _log(f"ingested {len(pairs)} QA pairs -> {args.out}")
    return 0


def _cmd_build_sparse(args) -> int:
    corpus = load_qa_corpus(args.corpus)
    index = build_sparse_index(corpus, k1=args.k1, b=args.b)
    save_sparse_index(index, args.out)
    _record(args, {"sparse_index": args.out}, {"k1": args.k1, "b": args.b})
    _log(f"indexed {index.doc_count} questions, {len(index.postings)} terms -> {args.out}")
    return 0


def _cmd_embed(args) -> int:
    corpus = load_qa_corpus(args.corpus)
    params = _load_params(args)
    matrix = embed_corpus(params, corpus)
    save_embeddings(matrix, args.out)
    _record(args, {"embeddings": args.out})
    _log(f"embedded {matrix.shape[0]} questions (dim {matrix.shape[1]}) -> {args.out}")
    return 0


def _cmd_build_examples(args) -> int:
    corpus = load_qa_corpus(args.corpus)
    train_set = load_eval_set(args.train_set)
    index = load_sparse_index(args.sparse)
    examples, summary = build_examples(
        train_set,
        index,
        corpus,
        k=args.k,
        strategy=Strategy(args.strategy),
        m=args.m,
        min_f1=args.min_f1,
        seed=args.seed,
        random_negatives=args.random_negatives,
    )
    save_examples(examples, args.out)
    _record(args, {"examples": args.out}, {"strategy": args.strategy, "m": args.m, "k": args.k})
    _log(
        f"kept {summary.kept}, skipped {summary.skipped_no_positive} (no positive), "
        f"{summary.skipped_no_negative} (no negative) -> {args.out}"
    )
    return 0


def _cmd_train(args) -> int:
    corpus = load_qa_corpus(args.corpus)
    examples = load_examples(args.examples)
    val_set = load_eval_set(args.val_set)
    index = load_sparse_index(args.sparse)
    params0 = init_params(hash_dim=args.hash_dim, embed_dim=args.dim, seed=args.seed)
    config = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        seed=args.seed,
        cascade_k=args.k,
    )
    params, report = train(params0, examples, corpus, val_set, index, config)
    save_checkpoint(params, config, args.out)
    _record(args, {"checkpoint": args.out}, {"train_seed": args.seed})
    print(
        json.dumps(
            {
                "epochs": [dataclasses.asdict(e) for e in report.epochs],
                "best_epoch": report.best_epoch,
                "stopped_early": report.stopped_early,
            }
        )
    )
    _log(f"trained {len(report.epochs)} epochs, best epoch {report.best_epoch} -> {args.out}")
    return 0


def _verify(args) -> None:
    manifest = _manifest_path(args)
    if manifest is not None:
        verify_manifest(manifest)


def _load_cascade_state(args):
    corpus = load_qa_corpus(args.corpus)
    index = load_sparse_index(args.sparse)
    params = _load_params(args)
    vectors = _load_vectors(args, params, corpus)
    return corpus, index, params, vectors


def _cmd_eval(args) -> int:
    _verify(args)
    corpus, index, params, vectors = _load_cascade_state(args)
    dataset = load_eval_set(args.eval_set)
    config = CascadeConfig(k=args.k)

    def answer_fn(question: str) -> str:
        return retrieve(question, index, params, vectors, corpus, config).answer

    report = eval_em(answer_fn, dataset, keep_per_question=args.per_question)
    out = {"em": report.em, "n": report.n}
    if args.per_question:
        out["per_question"] = report.per_question
    print(json.dumps(out))
    return 0


def _cmd_recall(args) -> int:
    _verify(args)
    corpus = load_qa_corpus(args.corpus)
    index = load_sparse_index(args.sparse)
    dataset = load_eval_set(args.eval_set)
    ks = sorted(int(k) for k in args.ks.split(","))
    result = recall_at_k(index, dataset, corpus, ks)
    print(json.dumps({str(k): v for k, v in result.items()}))
    return 0


def _cmd_bench(args) -> int:
    _verify(args)
    corpus, index, params, vectors = _load_cascade_state(args)
    queries = [q.question for q in load_eval_set(args.queries)]
    config = CascadeConfig(k=args.k, concurrent_encoders=(args.mode == "concurrent"))

    def answer_fn(question: str) -> str:
        return retrieve(question, index, params, vectors, corpus, config).answer

    report = bench_throughput(
        answer_fn,
        queries,
        warmup=args.warmup,
        mode=args.mode,
        trials=args.trials,
    )
    print(json.dumps(dataclasses.asdict(report) | {"kernel_backend": kernels.BACKEND}))
    return 0


def _cmd_retrieve(args) -> int:
    _verify(args)
    corpus, index, params, vectors = _load_cascade_state(args)
    result = retrieve(
        args.q, index, params, vectors, corpus, CascadeConfig(k=args.k)
    )
    print(json.dumps(result_to_dict(result)))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    _verify(args)
    corpus, index, params, vectors = _load_cascade_state(args)
    state = ServiceState(
        corpus=corpus,
        sparse_index=index,
        params=params,
        index_vectors=vectors,
        default_k=args.k,
    )
    uvicorn.run(create_app(state), host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "build-sparse": _cmd_build_sparse,
    "embed": _cmd_embed,
    "build-examples": _cmd_build_examples,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "recall": _cmd_recall,
    "bench": _cmd_bench,
    "retrieve": _cmd_retrieve,
    "serve": _cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        _log(f"error: file not found: {exc.filename or exc}")
        return 2
    except OSError as exc:
        _log(f"error: I/O failure: {exc}")
        return 2
    except _VALIDATION_ERRORS as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())

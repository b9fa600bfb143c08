#!/usr/bin/env python3
"""Compare the compiled scoring kernels against the NumPy fallback.

Runs the same BM25 search and restricted-MIPS workloads under both
backends and prints throughput for each. The fallback is forced in a
subprocess via REQUERY_KERNEL=python, because the backend is chosen at
import time.

Usage: python3 benchmarks/compare_kernels.py [--queries N]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def measure(n_queries):
    from requery import kernels
    from requery.cascade import CascadeConfig, retrieve
    from requery.encoder import embed_corpus, init_params
    from requery.sparse import build_sparse_index
    from requery.synth import generate_benchmark

    bench = generate_benchmark(seed=0)
    index = build_sparse_index(bench.corpus)
    params = init_params(hash_dim=4096, embed_dim=32, seed=0)
    matrix = embed_corpus(params, bench.corpus)
    queries = [q.question for q in bench.test]
    queries = (queries * (n_queries // len(queries) + 1))[:n_queries]
    config = CascadeConfig(k=50)

    for q in queries[:20]:  # warmup
        retrieve(q, index, params, matrix, bench.corpus, config)

    start = time.perf_counter()
    checksum = 0
    for q in queries:
        checksum += len(retrieve(q, index, params, matrix, bench.corpus, config).answer)
    wall = time.perf_counter() - start
    return {
        "backend": kernels.BACKEND,
        "queries": n_queries,
        "wall_seconds": wall,
        "q_per_sec": n_queries / wall,
        "checksum": checksum,
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--queries", type=int, default=2000)
    parser.add_argument("--emit-json", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.emit_json:
        print(json.dumps(measure(args.queries)))
        return

    results = [measure(args.queries)]
    env = dict(os.environ, REQUERY_KERNEL="python")
    out = subprocess.run(
        [sys.executable, __file__, "--queries", str(args.queries), "--emit-json"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    results.append(json.loads(out.stdout.strip().splitlines()[-1]))

    if results[0]["checksum"] != results[1]["checksum"]:
        raise SystemExit("backends disagree on retrieval output")
    for r in results:
        print(f"{r['backend']:>7}: {r['q_per_sec']:8.0f} Q/sec ({r['wall_seconds']:.2f}s for {r['queries']} queries)")
    speedup = results[0]["q_per_sec"] / results[1]["q_per_sec"]
    print(f"speedup: {speedup:.2f}x ({results[0]['backend']} over {results[1]['backend']})")


if __name__ == "__main__":
    main()

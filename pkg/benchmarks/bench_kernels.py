#!/usr/bin/env python3
"""Time the compiled kernels against the pure-Python fallback.

Loads both backends side by side (ignoring NAMEGRAPH_PURE), feeds them the
exact arrays the pipeline would produce for a generated corpus, checks that
outputs are bit-identical, and prints per-kernel timings with speedups.

Usage:
    python benchmarks/bench_kernels.py [--scale small|medium|large] [--repeats N]
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from namegraph.corpus import SynthConfig, synth_generate
from namegraph.graph import build_graph
from namegraph.kernels import pure
from namegraph.kernels.rng import derive_seed
from namegraph.textfeat import tokenize
from namegraph.walks import init_embedding_matrix, negative_table

try:
    from namegraph.kernels import _core as compiled
except ImportError:
    compiled = None

SCALES = {
    "small": SynthConfig(n_names=6, profiles_per_name=2, papers_per_profile=6),
    "medium": SynthConfig(n_names=12, profiles_per_name=3,
                          papers_per_profile=10),
    "large": SynthConfig(n_names=20, profiles_per_name=3,
                         papers_per_profile=15),
}


def timed(fn, repeats: int):
    """Best-of-N wall time and the last result."""
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_case(name, make_args, run, repeats, rows):
    """Run one kernel on both backends from identical argument copies."""
    t_pure, out_pure = timed(lambda: run(pure, *make_args()), repeats)
    t_comp, out_comp = timed(lambda: run(compiled, *make_args()), repeats)
    if isinstance(out_pure, tuple):
        identical = all(np.array_equal(a, b)
                        for a, b in zip(out_pure, out_comp))
    else:
        identical = np.array_equal(out_pure, out_comp)
    rows.append((name, t_comp, t_pure, t_pure / t_comp if t_comp else 0.0,
                 identical))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", choices=sorted(SCALES), default="medium")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)

    if compiled is None:
        sys.stderr.write("compiled extension not built; nothing to compare\n")
        return 1

    corpus, _ = synth_generate(SCALES[args.scale], seed=0)
    graph = build_graph(corpus)
    a_ip, a_ix, p_ip, p_ix = graph.author_paper_csr()
    u_ip, u_ix = graph.unified_csr()
    starts = np.array(graph.live_unified_ids(), dtype=np.int32)
    start_author = graph.live_authors()[0]

    # one padded walk matrix shared by both sgns runs, from the compiled
    # walker (bit-identical to the pure one, which the walk case verifies)
    walks = compiled.node2vec_walks(u_ip, u_ix, starts, 1.0, 1.0, 20, 10,
                                    derive_seed(0, "bench-walks"))
    n_nodes = len(u_ip) - 1
    occurrence = np.bincount(walks[walks >= 0], minlength=n_nodes)
    walk_neg = negative_table(occurrence)

    docs = [tokenize(corpus.publications[pid].abstract)
            for pid in sorted(corpus.publications)]
    vocab = sorted({t for d in docs for t in d})
    tok_id = {t: i for i, t in enumerate(vocab)}
    offsets = np.zeros(len(docs) + 1, dtype=np.int64)
    flat = []
    for i, d in enumerate(docs):
        flat.extend(tok_id[t] for t in d)
        offsets[i + 1] = len(flat)
    tokens = np.array(flat, dtype=np.int32)
    doc_counts = np.bincount(tokens, minlength=len(vocab))
    doc_neg = negative_table(doc_counts)

    rows: list[tuple] = []
    bench_case(
        "rwr_author_counts (W=10000)",
        lambda: (a_ip, a_ix, p_ip, p_ix, start_author, 0.4, 10000, 7),
        lambda impl, *a: impl.rwr_author_counts(*a),
        args.repeats, rows)
    bench_case(
        "rwr_node_counts (W=10000)",
        lambda: (u_ip, u_ix, int(starts[0]), 0.4, 10000, 7),
        lambda impl, *a: impl.rwr_node_counts(*a),
        args.repeats, rows)
    bench_case(
        f"node2vec_walks ({starts.size} starts x10, L=20)",
        lambda: (u_ip, u_ix, starts, 1.0, 2.0, 20, 10, 7),
        lambda impl, *a: impl.node2vec_walks(*a),
        args.repeats, rows)
    bench_case(
        f"sgns_train_windows ({len(walks)} walks, 2 epochs)",
        lambda: (walks, n_nodes,
                 init_embedding_matrix(n_nodes, 32, 3),
                 np.zeros((n_nodes, 32)), 5, 5, 2, 0.025, walk_neg, 7),
        lambda impl, *a: (impl.sgns_train_windows(*a), a[2], a[3]),
        args.repeats, rows)
    bench_case(
        f"sgns_train_docs ({len(docs)} docs, 5 epochs)",
        lambda: (offsets, tokens,
                 init_embedding_matrix(len(docs), 32, 4),
                 np.zeros((len(vocab), 32)), 5, 5, 0.025, doc_neg, 7),
        lambda impl, *a: (impl.sgns_train_docs(*a), a[2], a[3]),
        args.repeats, rows)

    print(f"scale={args.scale}: {graph.n_authors} author nodes, "
          f"{graph.n_papers} papers, best of {args.repeats}")
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'compiled':>10}  {'pure':>10}  "
          f"{'speedup':>8}  match")
    for name, t_comp, t_pure, speedup, identical in rows:
        print(f"{name:<{width}}  {t_comp:>9.4f}s  {t_pure:>9.4f}s  "
              f"{speedup:>7.1f}x  {'yes' if identical else 'NO'}")
    if not all(r[4] for r in rows):
        sys.stderr.write("backend outputs diverged\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Acceptance suite for the disambiguation pipeline.

Each test is one release gate and prints a single verdict line with the
measured numbers, so a full run reads as a checklist.  Oracles are either
brute force (pairwise counting), hand-computed tables (string similarity),
finite differences (gradients), or structural identities (recall of the
name baseline, disjoint-component safety).  The two benchmark gates train
real models on generated corpora and check orderings rather than absolute
scores; their generator settings and seeds are pinned.
"""

from __future__ import annotations

import os
import random
import time

import numpy as np
import pytest

from conftest import corpus_from
from namegraph.cluster_eval import (Clustering, baseline_sim,
                                    cluster_all_names, jaro_winkler,
                                    pairwise_metrics)
from namegraph.corpus import (Labeling, SynthConfig, load_ground_truth,
                              load_publications, save_publications,
                              synth_generate)
from namegraph.experiment import (ExperimentConfig, run_experiment,
                                  run_from_manifest)
from namegraph.gnn import (ARCHS, GnnConfig, build_pair_dataset,
                           supervised_scorer, train_supervised,
                           train_unsupervised)
from namegraph.graph import build_graph
from namegraph.kernels import BACKEND, derive_seed
from namegraph.textfeat import CorpusFeatures
from namegraph.walks import (RwrConfig, author_sim_cosine, rwr_merge,
                             skipgram_pair_loss)

THETA_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


def verdict(label: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[ {status} ] {label}: {detail}")
    assert ok, f"{label}: {detail}"


def _restrict(truth: Labeling, names: list[str]) -> Labeling:
    return Labeling({n: dict(truth.profiles[n]) for n in names})


def _macro_f1(graph, truth, sim, names, theta=0.5, linkage="average"):
    clustering = cluster_all_names(graph, truth, sim, theta, linkage,
                                   names=names)
    return pairwise_metrics(clustering, _restrict(truth, names)).macro_f1


# -- pairwise metric oracle ----------------------------------------------------


def _oracle_name_counts(clusters: list[list[str]],
                        profile_of: dict[str, str]):
    """All-pairs counting with no shortcuts."""
    papers = sorted(p for c in clusters for p in c)
    cluster_of = {p: i for i, c in enumerate(clusters) for p in c}
    pred = true = correct = 0
    for i, a in enumerate(papers):
        for b in papers[i + 1:]:
            same_pred = cluster_of[a] == cluster_of[b]
            same_true = profile_of[a] == profile_of[b]
            pred += same_pred
            true += same_true
            correct += same_pred and same_true
    return pred, true, correct


def _random_partition(rng: random.Random, papers: list[str],
                      style: int) -> list[list[str]]:
    if style == 0:
        return [[p] for p in papers]
    if style == 1:
        return [list(papers)]
    k = rng.randint(1, len(papers))
    groups: dict[int, list[str]] = {}
    for p in papers:
        groups.setdefault(rng.randrange(k), []).append(p)
    return list(groups.values())


def test_pairwise_metrics_match_bruteforce_counts():
    rng = random.Random(417)
    start = time.monotonic()
    n_partitions = 0
    trial = 0
    while n_partitions < 200:
        n_names = rng.randint(1, 4)
        clusters_by_name: dict[str, list[list[str]]] = {}
        truth_by_name: dict[str, dict[str, tuple[str, ...]]] = {}
        expect = {}
        for ni in range(n_names):
            name = f"name{ni}"
            papers = [f"t{trial}p{j}" for j in range(rng.randint(1, 50))]
            predicted = _random_partition(rng, papers, rng.randrange(3))
            labeled = _random_partition(rng, papers, rng.randrange(3))
            clusters_by_name[name] = predicted
            truth_by_name[name] = {f"prof{i}": tuple(sorted(c))
                                   for i, c in enumerate(labeled)}
            profile_of = {p: f"prof{i}" for i, c in enumerate(labeled)
                          for p in c}
            expect[name] = _oracle_name_counts(predicted, profile_of)
            n_partitions += 2
        trial += 1
        got = pairwise_metrics(Clustering(clusters=clusters_by_name),
                               Labeling(truth_by_name))
        precisions, recalls, f1s = [], [], []
        pooled = [0, 0, 0]
        for name in sorted(expect):
            pred, true, correct = expect[name]
            m = got.per_name[name]
            assert (m.pred_pairs, m.true_pairs, m.correct_pairs) == \
                (pred, true, correct)
            p = correct / pred if pred else 1.0
            r = correct / true if true else 1.0
            f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
            assert (m.precision, m.recall, m.f1) == (p, r, f)
            precisions.append(p)
            recalls.append(r)
            f1s.append(f)
            pooled[0] += pred
            pooled[1] += true
            pooled[2] += correct
        assert got.macro_precision == sum(precisions) / len(precisions)
        assert got.macro_recall == sum(recalls) / len(recalls)
        assert got.macro_f1 == sum(f1s) / len(f1s)
        mp = pooled[2] / pooled[0] if pooled[0] else 1.0
        mr = pooled[2] / pooled[1] if pooled[1] else 1.0
        assert got.micro_precision == mp
        assert got.micro_recall == mr
    elapsed = time.monotonic() - start
    verdict("pairwise metrics vs brute-force oracle",
            elapsed < 10.0,
            f"{n_partitions} random partitions exact, {elapsed:.1f}s")


# -- structural recall of the name baseline ------------------------------------


def test_name_baseline_recall_is_always_one():
    corpora = []
    for i, cfg in enumerate((
            SynthConfig(n_names=8, profiles_per_name=2, papers_per_profile=5),
            SynthConfig(n_names=5, profiles_per_name=3, papers_per_profile=4,
                        contamination=0.4),
            SynthConfig(n_names=6, profiles_per_name=2, papers_per_profile=6,
                        org_typo_rate=0.6))):
        corpora.append(synth_generate(cfg, seed=40 + i))
    fixture = corpus_from({
        "g1": [("M. Giffels", "CERN"), ("A. Kole", "Inst A")],
        "g2": [("M. Giffels", "RWTH Aachen"), ("A. Kole", "Inst A")],
        "g3": [("M. Giffels", "CERN"), ("B. Roland", "Inst B")],
        "g4": [("X. Chen", "MIT"), ("B. Roland", "Inst B")],
    })
    corpora.append((fixture, Labeling({
        "m_giffels": {"mg0": ("g1", "g2"), "mg1": ("g3",)},
        "x_chen": {"xc0": ("g4",)},
    })))
    worst = 1.0
    for corpus, truth in corpora:
        graph = build_graph(corpus)
        clustering = cluster_all_names(graph, truth,
                                       baseline_sim(graph, "name"), 0.5)
        metrics = pairwise_metrics(clustering, truth)
        worst = min(worst, metrics.macro_recall, metrics.micro_recall,
                    *(m.recall for m in metrics.per_name.values()))
    verdict("name-baseline pairwise recall",
            worst == 1.0,
            f"min recall {worst} over {len(corpora)} corpora (must be 1.0)")


# -- hand-computed string similarity table -------------------------------------

# values derived by hand from the match-window/transposition/prefix-boost
# definition; the first four agree with the classic record-linkage examples
JW_TABLE = [
    ("martha", "marhta", 0.9611),
    ("dixon", "dicksonx", 0.8133),
    ("dwayne", "duane", 0.8400),
    ("jellyfish", "smellyfish", 0.8963),
    ("jones", "johnson", 0.8324),
    ("abcdef", "abcdef", 1.0),
    ("", "", 1.0),
    ("nonempty", "", 0.0),
    ("", "nonempty", 0.0),
    ("a", "a", 1.0),
    ("a", "b", 0.0),
    ("ab", "ba", 0.0),
    ("abcd", "badc", 0.8333),
    ("crate", "trace", 0.7333),
    ("tsinghua university", "tsing hua university", 0.9689),
    ("stanford university", "stanford univ", 0.9368),
    ("institute of physics", "institute of phisics", 0.9695),
    ("cern", "cernn", 0.9600),
    ("mit csail", "mit csail lab", 0.9385),
    ("xyz", "abc", 0.0),
]


def test_string_similarity_matches_hand_computed_table():
    errs = [abs(jaro_winkler(a, b) - want) for a, b, want in JW_TABLE]
    worst = max(errs)
    verdict("string similarity hand oracle",
            worst < 1e-4,
            f"{len(JW_TABLE)} pairs, max abs err {worst:.2e}")


# -- walk merging never crosses components -------------------------------------


def _component_ids(graph) -> list[int]:
    comp = [-1] * graph.n_authors
    next_id = 0
    for a0 in range(graph.n_authors):
        if comp[a0] >= 0 or graph.degree(a0) == 0:
            continue
        stack = [a0]
        comp[a0] = next_id
        while stack:
            a = stack.pop()
            for p in graph.papers_of(a):
                for b in graph.authors_of(p):
                    if comp[b] < 0:
                        comp[b] = next_id
                        stack.append(b)
        next_id += 1
    return comp


def test_disjoint_components_are_never_merged():
    rng = random.Random(99)
    total_merges = 0
    crossings = 0
    for g in range(50):
        cfg = SynthConfig(n_names=rng.randint(3, 6),
                          profiles_per_name=rng.randint(2, 3),
                          papers_per_profile=rng.randint(3, 6),
                          org_typo_rate=rng.choice((0.0, 0.3, 0.6)))
        corpus, _ = synth_generate(cfg, seed=rng.randrange(10 ** 6))
        graph = build_graph(corpus)
        comp = _component_ids(graph)
        # aggressive walk settings to maximize merge pressure
        records = rwr_merge(graph, RwrConfig(alpha=0.4, epochs=2,
                                             walk_length=3000,
                                             visit_threshold=1,
                                             seed=1000 + g))
        total_merges += len(records)
        crossings += sum(1 for r in records
                         if comp[r.source] != comp[r.other])
    verdict("disjoint components never merge",
            crossings == 0 and total_merges > 0,
            f"{total_merges} merges over 50 graphs, {crossings} crossed "
            f"a component boundary")


# -- gradient checks ------------------------------------------------------------


def _rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-10)


def _skipgram_fd_error() -> float:
    rng = np.random.default_rng(31)
    u = rng.normal(size=10) * 0.4
    v = rng.normal(size=10) * 0.4
    negs = rng.normal(size=(4, 10)) * 0.4
    _, du, dv, dnegs = skipgram_pair_loss(u, v, negs)
    eps = 1e-6
    worst = 0.0

    def fd(arr, idx, rebuild):
        arr_p, arr_m = arr.copy(), arr.copy()
        arr_p[idx] += eps
        arr_m[idx] -= eps
        return (skipgram_pair_loss(*rebuild(arr_p))[0]
                - skipgram_pair_loss(*rebuild(arr_m))[0]) / (2 * eps)

    for k in range(10):
        worst = max(worst, _rel_err(fd(u, k, lambda x: (x, v, negs)), du[k]))
        worst = max(worst, _rel_err(fd(v, k, lambda x: (u, x, negs)), dv[k]))
    for k in ((0, 2), (3, 7)):
        worst = max(worst,
                    _rel_err(fd(negs, k, lambda x: (u, v, x)), dnegs[k]))
    return worst


def test_analytic_gradients_match_finite_differences():
    start = time.monotonic()
    worst_by = {"skipgram": _skipgram_fd_error()}

    corpus, truth = synth_generate(
        SynthConfig(n_names=4, profiles_per_name=2, papers_per_profile=4,
                    org_typo_rate=0.5), seed=11)
    graph = build_graph(corpus)
    feats = CorpusFeatures.train(corpus, dim=8, epochs=2, seed=1)
    x = feats.feature_matrix(graph, corpus)
    pairs = build_pair_dataset(graph, truth, truth.names(), seed=2)
    for arch in ARCHS:
        cfg = GnnConfig(arch=arch, hidden=8, out_dim=8, fanouts=(3, 2),
                        epochs=1, seed=5)
        _, _, rep_u = train_unsupervised(graph, x, cfg)
        _, rep_s = train_supervised(graph, x, pairs, cfg)
        worst_by[f"{arch}-hinge"] = rep_u.grad_check
        worst_by[f"{arch}-nll"] = rep_s.grad_check
    lit = GnnConfig(arch="graphsage", hidden=8, out_dim=8, fanouts=(3, 2),
                    epochs=1, seed=5, literal_margin=True)
    _, _, rep_lit = train_unsupervised(graph, x, lit)
    worst_by["graphsage-hinge-literal"] = rep_lit.grad_check

    elapsed = time.monotonic() - start
    worst = max(worst_by.values())
    verdict("analytic gradients vs central differences",
            worst < 1e-4 and elapsed < 30.0,
            f"max rel err {worst:.2e} over {len(worst_by)} losses "
            f"({', '.join(sorted(worst_by))}), {elapsed:.1f}s")


# -- zero-threshold walk pipeline collapses to the name baseline ----------------


def _write_inputs(tmp_path, corpus, truth):
    pubs = str(tmp_path / "publications.json")
    labels = str(tmp_path / "labels.json")
    save_publications(corpus, pubs)
    truth.save(labels)
    return pubs, labels


def test_zero_threshold_walk_clustering_equals_name_baseline(tmp_path):
    corpus, truth = synth_generate(
        SynthConfig(n_names=8, profiles_per_name=2, papers_per_profile=5),
        seed=7)
    pubs, labels = _write_inputs(tmp_path, corpus, truth)
    common = dict(publications=pubs, labels=labels, theta=0.0,
                  n2v_walk_length=10, n2v_walks_per_node=5, emb_dim=16,
                  emb_epochs=2, seed=3)
    run_experiment(ExperimentConfig(method="node2vec",
                                    out_dir=str(tmp_path / "walk"), **common))
    run_experiment(ExperimentConfig(method="cluster-by-name",
                                    out_dir=str(tmp_path / "base"), **common))
    walk_bytes = (tmp_path / "walk" / "clustering.json").read_bytes()
    base_bytes = (tmp_path / "base" / "clustering.json").read_bytes()
    verdict("zero-threshold walk clustering equals name baseline",
            walk_bytes == base_bytes,
            f"clustering files identical ({len(walk_bytes)} bytes)")


# -- manifest replay -------------------------------------------------------------


def test_manifest_replay_is_byte_identical(tmp_path):
    corpus, truth = synth_generate(
        SynthConfig(n_names=6, profiles_per_name=2, papers_per_profile=4,
                    org_typo_rate=0.4), seed=21)
    pubs, labels = _write_inputs(tmp_path, corpus, truth)
    same = []
    for method, extra in (
            ("gnn-sup:graphsage", dict(feat_dim=8, feat_epochs=2,
                                       gnn_hidden=8, gnn_out_dim=8,
                                       gnn_fanouts=(3, 2), gnn_epochs=2,
                                       gnn_batch_size=32)),
            ("node2vec", dict(n2v_walk_length=10, n2v_walks_per_node=5,
                              emb_dim=16, emb_epochs=2))):
        out = tmp_path / method.replace(":", "_")
        run_experiment(ExperimentConfig(
            publications=pubs, labels=labels, method=method, seed=9,
            deterministic=True, out_dir=str(out), **extra))
        artifacts = ("clustering.json", "metrics.csv")
        before = [(out / a).read_bytes() for a in artifacts]
        run_from_manifest(str(out / "manifest.json"))
        same.extend((out / a).read_bytes() == b
                    for a, b in zip(artifacts, before))
    verdict("manifest replay is byte-identical",
            all(same),
            f"{sum(same)}/{len(same)} artifacts matched across 2 methods")


# -- generated benchmark: method ordering ----------------------------------------

BENCH = SynthConfig(n_names=20, profiles_per_name=3, papers_per_profile=15,
                    org_typo_rate=0.3)
GRAPH_ARCHS = ("gcn", "graphsage", "pinsage")
N_SEEDS = 5


def _bench_instance(cfg: SynthConfig, synth_seed: int, run_seed: int):
    corpus, truth = synth_generate(cfg, seed=synth_seed)
    names = truth.names()
    graph = build_graph(corpus)
    feats = CorpusFeatures.train(corpus, dim=16, epochs=40,
                                 seed=derive_seed(run_seed, "features"))
    x = feats.feature_matrix(graph, corpus)
    return corpus, truth, names, graph, x


def _train_scorer(graph, truth, x, train_names, arch, seed,
                  epochs=60, lr=0.25):
    pairs = build_pair_dataset(graph, truth, train_names,
                               seed=derive_seed(seed, "pairs"))
    cfg = GnnConfig(arch=arch, hidden=32, out_dim=32, epochs=epochs, lr=lr,
                    seed=derive_seed(seed, "gnn"))
    params, _ = train_supervised(graph, x, pairs, cfg)
    return supervised_scorer(graph, x, params, cfg,
                             seed=derive_seed(seed, "score"))


def test_benchmark_orders_methods_as_expected():
    start = time.monotonic()
    f1 = {m: [] for m in ("cluster-by-name", "cluster-by-name-org",
                          "gcn", "graphsage", "pinsage", "mlp")}
    rwr_precisions = []
    for s in range(N_SEEDS):
        _, truth, names, graph, x = _bench_instance(BENCH, 100 + s, s)
        train_names, eval_names = names[:15], names[15:]

        f1["cluster-by-name"].append(_macro_f1(
            graph, truth, baseline_sim(graph, "name"), eval_names))
        f1["cluster-by-name-org"].append(_macro_f1(
            graph, truth, baseline_sim(graph, "name-org"), eval_names))

        merged = graph.copy()
        rwr_merge(merged, RwrConfig(seed=derive_seed(s, "rwr")))
        clusters = {name: merged.clustering_for_name(name,
                                                     truth.papers_of(name))
                    for name in names}
        rwr_metrics = pairwise_metrics(Clustering(clusters=clusters), truth)
        rwr_precisions.append(rwr_metrics.macro_precision)

        for arch in GRAPH_ARCHS + ("mlp",):
            scorer = _train_scorer(graph, truth, x, train_names, arch, s)
            f1[arch].append(_macro_f1(graph, truth, scorer, eval_names))

    mean = {m: sum(v) / len(v) for m, v in f1.items()}
    best_graph = max(mean[a] for a in GRAPH_ARCHS)
    lift = best_graph - mean["cluster-by-name"]
    mlp_gap = abs(mean["mlp"] - mean["cluster-by-name-org"])
    arch_spread = max(mean[a] for a in GRAPH_ARCHS) - \
        min(mean[a] for a in GRAPH_ARCHS)
    min_rwr = min(rwr_precisions)
    elapsed = time.monotonic() - start

    # the wall-time bound is a property of the compiled kernels; the pure
    # fallback computes bit-identical scores without the speed contract
    in_time = elapsed < 600.0 or BACKEND != "compiled"
    ok = (min_rwr >= 0.9 and lift >= 0.15 and mlp_gap <= 0.1
          and arch_spread <= 0.1 and in_time)
    verdict("benchmark method ordering",
            ok,
            f"walk-merge precision min {min_rwr:.3f} (>=0.9); "
            f"best graph arch F1 {best_graph:.3f} vs name baseline "
            f"{mean['cluster-by-name']:.3f}, lift {lift:.3f} (>=0.15); "
            f"|mlp - name+org| {mlp_gap:.3f} (<=0.1); "
            f"graph-arch spread {arch_spread:.3f} (<=0.1); "
            f"{N_SEEDS} seeds in {elapsed:.0f}s (<600 on {BACKEND})")


# -- threshold sensitivity: trained scorer vs raw cosine --------------------------

CONTRAST_BENCH = SynthConfig(n_names=20, profiles_per_name=3,
                             papers_per_profile=15, org_typo_rate=0.3,
                             contamination=0.4)


def _cluster_counts(graph, truth, sim, eval_names):
    return [cluster_all_names(graph, truth, sim, theta, linkage="single",
                              names=eval_names).n_clusters()
            for theta in THETA_GRID]


def test_supervised_scores_spread_while_cosines_stay_skewed():
    sup_summary, uns_summary = [], []
    ok = True
    for s in range(N_SEEDS):
        _, truth, names, graph, x = _bench_instance(CONTRAST_BENCH, 300 + s, s)
        train_names, eval_names = names[:15], names[15:]

        scorer = _train_scorer(graph, truth, x, train_names, "graphsage", s)
        sup_counts = _cluster_counts(graph, truth, scorer, eval_names)
        monotone = all(a <= b for a, b in zip(sup_counts, sup_counts[1:]))
        sup_distinct = len(set(sup_counts))

        # converged cosine similarities pile up near the ranking margin, so
        # most of the grid cannot tell them apart
        ucfg = GnnConfig(arch="graphsage", hidden=32, out_dim=32, epochs=60,
                         margin=0.2, seed=derive_seed(s, "gnn"))
        emb, _, _ = train_unsupervised(graph, x, ucfg)

        def cosine_sim(a, b):
            return 0.5 * (1.0 + author_sim_cosine(emb, a, b))

        uns_counts = _cluster_counts(graph, truth, cosine_sim, eval_names)
        uns_distinct = len(set(uns_counts))

        sup_summary.append(f"s{s}:{sup_distinct}{'+' if monotone else '!'}")
        uns_summary.append(f"s{s}:{uns_distinct}")
        ok = ok and monotone and sup_distinct >= 4 and uns_distinct <= 3
    verdict("threshold sensitivity contrast",
            ok,
            f"supervised distinct counts {' '.join(sup_summary)} "
            f"(need >=4, monotone); unsupervised {' '.join(uns_summary)} "
            f"(need <=3) over theta {THETA_GRID[0]}..{THETA_GRID[-1]}")


# -- optional check against a real labeled sample --------------------------------


def test_real_dataset_report_when_available():
    root = os.environ.get("NAMEGRAPH_REAL_DATA", "")
    if not root:
        pytest.skip("set NAMEGRAPH_REAL_DATA to a directory holding "
                    "publications.json and labels.json to enable")
    corpus = load_publications(os.path.join(root, "publications.json"))
    truth = load_ground_truth(os.path.join(root, "labels.json"),
                              corpus=corpus)
    graph = build_graph(corpus)
    lines = []
    for kind, label in (("name", "cluster-by-name"),
                        ("name-org", "cluster-by-name-org")):
        clustering = cluster_all_names(graph, truth,
                                       baseline_sim(graph, kind), 0.5)
        m = pairwise_metrics(clustering, truth)
        lines.append(f"{label}: P={m.macro_precision:.3f} "
                     f"R={m.macro_recall:.3f} F1={m.macro_f1:.3f}")
    merged = graph.copy()
    rwr_merge(merged, RwrConfig(seed=0))
    clusters = {name: merged.clustering_for_name(name, truth.papers_of(name))
                for name in truth.names()}
    m = pairwise_metrics(Clustering(clusters=clusters), truth)
    lines.append(f"rwr-merge: P={m.macro_precision:.3f} "
                 f"R={m.macro_recall:.3f} F1={m.macro_f1:.3f}")
    # informational only; nothing to enforce without the published split
    verdict("real dataset report", True, "; ".join(lines))

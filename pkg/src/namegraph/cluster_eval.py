"""Greedy threshold clustering and pairwise evaluation.

Clustering walks a name's papers in id order and attaches each paper to the
best-scoring existing cluster when that score clears the threshold, else
opens a new cluster.  Evaluation counts unordered same-cluster paper pairs
against labeled profiles, per name, with macro and pooled summaries.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

from namegraph.corpus import Labeling
from namegraph.errors import ConfigError, DataError
from namegraph.graph import AuthorNode

LINKAGES = ("single", "average", "complete")


def jaro_winkler(s1: str, s2: str, prefix_scale: float = 0.1,
                 max_prefix: int = 4) -> float:
    """Jaro-Winkler similarity in [0, 1].

    Matches live within a window of floor(max_len / 2) - 1; transpositions
    are half the out-of-order matches.  The prefix boost always applies.
    Two empty strings score 1, one empty string scores 0.
    """
    if s1 == s2:
        return 1.0
    if not s1 or not s2:
        return 0.0
    len1, len2 = len(s1), len(s2)
    window = max(max(len1, len2) // 2 - 1, 0)

    matched1 = [False] * len1
    matched2 = [False] * len2
    matches = 0
    for i in range(len1):
        lo = max(0, i - window)
        hi = min(len2, i + window + 1)
        for j in range(lo, hi):
            if not matched2[j] and s1[i] == s2[j]:
                matched1[i] = True
                matched2[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0

    transpositions = 0
    j = 0
    for i in range(len1):
        if matched1[i]:
            while not matched2[j]:
                j += 1
            if s1[i] != s2[j]:
                transpositions += 1
            j += 1
    transpositions //= 2

    jaro = (matches / len1 + matches / len2
            + (matches - transpositions) / matches) / 3.0
    prefix = 0
    for a, b in zip(s1, s2):
        if a != b or prefix == max_prefix:
            break
        prefix += 1
    return jaro + prefix * prefix_scale * (1.0 - jaro)


def author_sim_name(a: AuthorNode, b: AuthorNode) -> float:
    """1 when the normalized names agree, else 0."""
    return 1.0 if a.name == b.name else 0.0


def author_sim_name_org(a: AuthorNode, b: AuthorNode,
                        org_threshold: float = 0.9,
                        plain_jaro: bool = False) -> float:
    """1 when names agree and affiliations are near-identical.

    Affiliations compare by Jaro-Winkler over the normalized org keys; two
    empty orgs count as identical, one empty org as entirely different.
    plain_jaro drops the prefix boost (the formula-literal variant).
    """
    if a.name != b.name:
        return 0.0
    if a.org == "" and b.org == "":
        return 1.0
    if a.org == "" or b.org == "":
        return 0.0
    scale = 0.0 if plain_jaro else 0.1
    return 1.0 if jaro_winkler(a.org, b.org, prefix_scale=scale) > org_threshold else 0.0


def cluster_papers(paper_ids: list[str], author_of: dict[str, int],
                   sim: Callable[[int, int], float], theta: float,
                   linkage: str = "average") -> list[list[str]]:
    """Greedy threshold clustering of one name's papers.

    Papers are visited in sorted id order.  A paper scores against each
    existing cluster via the linkage over the cluster's distinct member
    author nodes; it joins the best cluster when the score strictly exceeds
    theta, ties going to the lowest cluster index, else starts a new one.
    Papers without an author node never match anything and end up alone.
    """
    if linkage not in LINKAGES:
        raise ConfigError(f"unknown linkage {linkage!r}")
    clusters: list[list[str]] = []
    members: list[set[int]] = []
    cache: dict[tuple[int, int], float] = {}

    def pair_score(u: int | None, v: int) -> float:
        if u is None:
            return 0.0
        key = (u, v) if u <= v else (v, u)
        if key not in cache:
            cache[key] = sim(key[0], key[1])
        return cache[key]

    for pid in sorted(paper_ids):
        node = author_of.get(pid)
        best_idx = -1
        best_score = theta
        for idx, nodes in enumerate(members):
            scores = [pair_score(node, v) for v in sorted(nodes)]
            if not scores:
                score = 0.0
            elif linkage == "single":
                score = max(scores)
            elif linkage == "complete":
                score = min(scores)
            else:
                score = sum(scores) / len(scores)
            if score > best_score:
                best_idx = idx
                best_score = score
        if best_idx >= 0:
            clusters[best_idx].append(pid)
            if node is not None:
                members[best_idx].add(node)
        else:
            clusters.append([pid])
            members.append(set() if node is None else {node})
    return [sorted(c) for c in clusters]


@dataclass
class Clustering:
    """Predicted clusters per name, with run provenance."""

    clusters: dict[str, list[list[str]]]
    method: str = ""
    theta: float | None = None
    linkage: str = ""
    seed: int | None = None

    def n_clusters(self) -> int:
        return sum(len(v) for v in self.clusters.values())

    def to_labeling(self) -> Labeling:
        return Labeling({
            name: {str(i): tuple(cluster) for i, cluster in enumerate(parts)}
            for name, parts in self.clusters.items()})

    def save(self, path: str) -> None:
        """Write in the ground-truth JSON shape (cluster index as profile id)."""
        self.to_labeling().save(path)

    @staticmethod
    def from_labeling(labeling: Labeling, method: str = "") -> "Clustering":
        return Clustering(
            clusters={name: [list(papers)
                             for papers in labeling.profiles[name].values()]
                      for name in labeling.names()},
            method=method)


@dataclass
class NameMetrics:
    precision: float
    recall: float
    f1: float
    n_papers: int
    pred_pairs: int
    true_pairs: int
    correct_pairs: int
    precision_defined: bool = True
    recall_defined: bool = True


@dataclass
class PairwiseMetrics:
    """Pairwise precision/recall/F1 per name plus macro and pooled summaries."""

    per_name: dict[str, NameMetrics] = field(default_factory=dict)
    macro_precision: float = 0.0
    macro_recall: float = 0.0
    macro_f1: float = 0.0
    micro_precision: float = 0.0
    micro_recall: float = 0.0
    micro_f1: float = 0.0

    def to_dict(self) -> dict:
        return {
            "per_name": {
                name: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "n_papers": m.n_papers,
                    "pred_pairs": m.pred_pairs,
                    "true_pairs": m.true_pairs,
                    "correct_pairs": m.correct_pairs,
                    "precision_defined": m.precision_defined,
                    "recall_defined": m.recall_defined,
                } for name, m in sorted(self.per_name.items())},
            "macro": {"precision": self.macro_precision,
                      "recall": self.macro_recall,
                      "f1": self.macro_f1},
            "micro": {"precision": self.micro_precision,
                      "recall": self.micro_recall,
                      "f1": self.micro_f1},
        }


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2.0 * p * r / (p + r)


def pairwise_metrics(predicted: Clustering, truth: Labeling) -> PairwiseMetrics:
    """Score a predicted clustering against labeled profiles.

    Names and per-name paper sets must coincide exactly.  A name with no
    predicted (or no true) pairs gets precision (or recall) 1.0, marked
    undefined in the per-name record.
    """
    pred_names = sorted(predicted.clusters)
    true_names = truth.names()
    if pred_names != true_names:
        raise DataError(
            f"predicted names {pred_names[:3]}...({len(pred_names)}) do not "
            f"match labeled names ({len(true_names)})")

    out = PairwiseMetrics()
    total_pred = total_true = total_correct = 0
    for name in true_names:
        clusters = predicted.clusters[name]
        pred_papers = sorted(p for c in clusters for p in c)
        if len(set(pred_papers)) != len(pred_papers):
            raise DataError(f"name {name!r}: paper in two predicted clusters")
        true_papers = truth.papers_of(name)
        if pred_papers != true_papers:
            raise DataError(
                f"name {name!r}: predicted papers do not cover the labeled "
                f"set ({len(pred_papers)} vs {len(true_papers)})")

        profile_of = truth.profile_of(name)
        pred_pairs = sum(len(c) * (len(c) - 1) // 2 for c in clusters)
        true_sizes: dict[str, int] = {}
        for prof in profile_of.values():
            true_sizes[prof] = true_sizes.get(prof, 0) + 1
        true_pairs = sum(n * (n - 1) // 2 for n in true_sizes.values())
        correct = 0
        for cluster in clusters:
            cell: dict[str, int] = {}
            for pid in cluster:
                prof = profile_of[pid]
                cell[prof] = cell.get(prof, 0) + 1
            correct += sum(n * (n - 1) // 2 for n in cell.values())

        p_defined = pred_pairs > 0
        r_defined = true_pairs > 0
        precision = correct / pred_pairs if p_defined else 1.0
        recall = correct / true_pairs if r_defined else 1.0
        out.per_name[name] = NameMetrics(
            precision=precision, recall=recall, f1=_f1(precision, recall),
            n_papers=len(true_papers), pred_pairs=pred_pairs,
            true_pairs=true_pairs, correct_pairs=correct,
            precision_defined=p_defined, recall_defined=r_defined)
        total_pred += pred_pairs
        total_true += true_pairs
        total_correct += correct

    n = len(out.per_name)
    if n:
        out.macro_precision = sum(m.precision for m in out.per_name.values()) / n
        out.macro_recall = sum(m.recall for m in out.per_name.values()) / n
        out.macro_f1 = sum(m.f1 for m in out.per_name.values()) / n
    out.micro_precision = total_correct / total_pred if total_pred else 1.0
    out.micro_recall = total_correct / total_true if total_true else 1.0
    out.micro_f1 = _f1(out.micro_precision, out.micro_recall)
    return out


def write_metrics_csv(metrics_by_method: dict[str, PairwiseMetrics],
                      path: str) -> None:
    """One row per (method, name) plus MACRO and MICRO summary rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "name", "pairwise_precision",
                         "pairwise_recall", "pairwise_f1"])
        for method in sorted(metrics_by_method):
            m = metrics_by_method[method]
            for name, nm in sorted(m.per_name.items()):
                writer.writerow([method, name, f"{nm.precision:.6f}",
                                 f"{nm.recall:.6f}", f"{nm.f1:.6f}"])
            writer.writerow([method, "MACRO", f"{m.macro_precision:.6f}",
                             f"{m.macro_recall:.6f}", f"{m.macro_f1:.6f}"])
            writer.writerow([method, "MICRO", f"{m.micro_precision:.6f}",
                             f"{m.micro_recall:.6f}", f"{m.micro_f1:.6f}"])


def baseline_sim(graph, kind: str,
                 plain_jaro: bool = False) -> Callable[[int, int], float]:
    """Node-id similarity for the string baselines."""
    if kind == "name":
        return lambda a, b: author_sim_name(graph.authors[a], graph.authors[b])
    if kind == "name-org":
        return lambda a, b: author_sim_name_org(
            graph.authors[a], graph.authors[b], plain_jaro=plain_jaro)
    raise ConfigError(f"unknown baseline {kind!r}")


def cluster_all_names(graph, truth: Labeling, sim: Callable[[int, int], float],
                      theta: float, linkage: str = "average",
                      names: list[str] | None = None,
                      method: str = "") -> Clustering:
    """Cluster the labeled papers of each name with one similarity."""
    out: dict[str, list[list[str]]] = {}
    for name in (names if names is not None else truth.names()):
        papers = truth.papers_of(name)
        author_of = graph.name_author_of(name, papers)
        out[name] = cluster_papers(papers, author_of, sim, theta, linkage)
    return Clustering(clusters=out, method=method, theta=theta, linkage=linkage)


def run_baselines(graph, truth: Labeling, theta: float = 0.5,
                  linkage: str = "average") -> dict[str, PairwiseMetrics]:
    """Evaluate both string baselines on every labeled name."""
    results = {}
    for method, kind in (("cluster-by-name", "name"),
                         ("cluster-by-name-org", "name-org")):
        clustering = cluster_all_names(
            graph, truth, baseline_sim(graph, kind), theta, linkage,
            method=method)
        results[method] = pairwise_metrics(clustering, truth)
    return results

"""Random-walk machinery: restart-walk author merging, biased node walks,
and skip-gram embeddings over the walk corpus.

The merging pass runs a restart walk from every author node and fuses the
start node with every same-name node whose visit count clears a threshold.
Visit counts live on author nodes only, because each non-restart step hops
author -> paper -> coauthor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from namegraph import kernels
from namegraph.errors import ConfigError, DataError, ModelError, WalkError
from namegraph.graph import BipartiteGraph, MergeRecord
from namegraph.kernels import SplitMix64, derive_seed


@dataclass
class RwrConfig:
    """Settings for restart-walk merging."""

    alpha: float = 0.4
    epochs: int = 1
    walk_length: int = 10000
    visit_threshold: int = 3
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must be in [0, 1]")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.walk_length < 1:
            raise ConfigError("walk_length must be >= 1")
        if self.visit_threshold < 1:
            raise ConfigError("visit_threshold must be >= 1")


def rwr_visit_counts(graph: BipartiteGraph, start: int, alpha: float,
                     walk_length: int, seed: int) -> np.ndarray:
    """Author-node visit counts of one restart walk from `start`.

    Each step restarts at `start` with probability alpha or hops to a uniform
    coauthor through a uniform shared paper; the occupied node is counted
    either way, so the counts sum to walk_length.
    """
    start = graph.resolve(start)
    if graph.degree(start) == 0:
        raise WalkError(f"author node {start} has no incident edges")
    a_indptr, a_indices, p_indptr, p_indices = graph.author_paper_csr()
    return kernels.rwr_author_counts(a_indptr, a_indices, p_indptr, p_indices,
                                     start, alpha, walk_length, seed)


def rwr_merge(graph: BipartiteGraph, config: RwrConfig | None = None,
              seed: int | None = None) -> list[MergeRecord]:
    """Merge same-name author nodes that a restart walk visits often.

    Every epoch walks from each live author node in ascending id order and
    merges the start with every same-name node whose count exceeds the
    threshold, applying merges immediately.  Returns the merge records this
    call produced; the graph keeps them in its own log too.  The config's
    seed applies unless an explicit one is given.
    """
    if config is None:
        config = RwrConfig()
    config.validate()
    if seed is None:
        seed = config.seed
    log_start = len(graph.merge_log)
    for epoch in range(1, config.epochs + 1):
        for node in sorted(graph.live_authors()):
            if graph.resolve(node) != node:
                continue  # merged away earlier in this epoch
            if graph.degree(node) == 0:
                continue
            counts = rwr_visit_counts(
                graph, node, config.alpha, config.walk_length,
                derive_seed(seed, "rwr", epoch, node))
            name = graph.authors[node].name
            for cand in graph.name_nodes(name):
                if cand == node or graph.resolve(cand) != cand:
                    continue
                c = int(counts[cand])
                if c > config.visit_threshold:
                    node = graph.merge(node, cand, epoch=epoch, trigger=c)
    return graph.merge_log[log_start:]


class WalkCorpus:
    """Fixed-shape matrix of node walks, -1 padded past each walk's end."""

    def __init__(self, walks: np.ndarray, n_nodes: int, params: dict) -> None:
        self.walks = walks
        self.n_nodes = n_nodes
        self.params = params

    def __len__(self) -> int:
        return self.walks.shape[0]

    def lengths(self) -> np.ndarray:
        return (self.walks >= 0).sum(axis=1)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("namegraph-walks\t1\n")
            fh.write(json.dumps({"n_nodes": self.n_nodes,
                                 "params": self.params}, sort_keys=True))
            fh.write("\n")
            for row in self.walks:
                nodes = row[row >= 0]
                fh.write(" ".join(str(int(x)) for x in nodes))
                fh.write("\n")

    @staticmethod
    def load(path: str) -> "WalkCorpus":
        try:
            with open(path, encoding="utf-8") as fh:
                header = fh.readline().rstrip("\n")
                if header != "namegraph-walks\t1":
                    raise DataError(f"{path}: not a walk corpus file")
                meta = json.loads(fh.readline())
                rows = [[int(x) for x in line.split()] for line in fh
                        if line.strip()]
        except (OSError, ValueError) as exc:
            raise DataError(f"{path}: cannot read walk corpus ({exc})") from exc
        length = meta["params"].get("walk_length", max(map(len, rows), default=1))
        walks = np.full((len(rows), length), -1, dtype=np.int32)
        for i, row in enumerate(rows):
            walks[i, :len(row)] = row
        return WalkCorpus(walks, meta["n_nodes"], meta["params"])


def node2vec_corpus(graph: BipartiteGraph, p: float = 1.0, q: float = 1.0,
                    walk_length: int = 10, walks_per_node: int = 20,
                    seed: int = 0) -> WalkCorpus:
    """Second-order biased walks from every live node of the flat id space."""
    if p <= 0 or q <= 0:
        raise ConfigError("p and q must be positive")
    if walk_length < 1 or walks_per_node < 1:
        raise ConfigError("walk_length and walks_per_node must be >= 1")
    indptr, indices = graph.unified_csr()
    starts = np.array(graph.live_unified_ids(), dtype=np.int32)
    if starts.size == 0:
        raise WalkError("graph has no nodes to walk from")
    walks = kernels.node2vec_walks(indptr, indices, starts, p, q, walk_length,
                                   walks_per_node,
                                   derive_seed(seed, "node2vec"))
    params = {"p": p, "q": q, "walk_length": walk_length,
              "walks_per_node": walks_per_node, "seed": seed}
    return WalkCorpus(walks, len(indptr) - 1, params)


def init_embedding_matrix(n: int, dim: int, seed: int) -> np.ndarray:
    """Deterministic uniform(-0.5, 0.5)/dim initialization."""
    rng = SplitMix64(seed)
    out = np.empty((n, dim), dtype=np.float64)
    for i in range(n):
        for k in range(dim):
            out[i, k] = (rng.next_double() - 0.5) / dim
    return out


def negative_table(counts: np.ndarray) -> np.ndarray:
    """Normalized cumulative unigram^0.75 distribution for negative draws."""
    weights = np.asarray(counts, dtype=np.float64) ** 0.75
    total = weights.sum()
    if total <= 0:
        raise ModelError("negative-sampling distribution has no mass")
    cum = np.cumsum(weights)
    return cum / cum[-1]


class NodeEmbeddings:
    """Dense vectors for the nodes covered by an embedding run."""

    def __init__(self, vectors: np.ndarray, covered: set[int],
                 meta: dict | None = None) -> None:
        self.vectors = vectors
        self.covered = covered
        self.meta = meta or {}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def vector(self, node: int) -> np.ndarray:
        if node not in self.covered:
            raise ModelError(f"node {node} has no embedding")
        return self.vectors[node]

    def save(self, path: str) -> None:
        np.savez(path, vectors=self.vectors,
                 covered=np.array(sorted(self.covered), dtype=np.int64),
                 meta=json.dumps(self.meta, sort_keys=True))

    @staticmethod
    def load(path: str) -> "NodeEmbeddings":
        try:
            with np.load(path, allow_pickle=False) as data:
                return NodeEmbeddings(
                    data["vectors"],
                    set(int(x) for x in data["covered"]),
                    json.loads(str(data["meta"])))
        except (OSError, KeyError, ValueError) as exc:
            raise DataError(f"{path}: cannot load embeddings ({exc})") from exc


def train_skipgram(corpus: WalkCorpus, dim: int = 100, window: int = 5,
                   negatives: int = 5, epochs: int = 5, lr: float = 0.025,
                   seed: int = 0) -> NodeEmbeddings:
    """Skip-gram with negative sampling over a walk corpus.

    Returns input vectors for every node that appears in at least one walk;
    other rows keep their initialization but are not exposed.
    """
    if dim < 1 or window < 1 or negatives < 1 or epochs < 1:
        raise ConfigError("dim, window, negatives, and epochs must be >= 1")
    if lr <= 0:
        raise ConfigError("learning rate must be positive")
    visited = corpus.walks[corpus.walks >= 0]
    if visited.size == 0:
        raise ModelError("walk corpus is empty")
    occurrence = np.bincount(visited, minlength=corpus.n_nodes)
    neg_cum = negative_table(occurrence)
    w_in = init_embedding_matrix(corpus.n_nodes, dim,
                                 derive_seed(seed, "sgns-init"))
    w_out = np.zeros((corpus.n_nodes, dim), dtype=np.float64)
    losses = kernels.sgns_train_windows(
        corpus.walks, corpus.n_nodes, w_in, w_out, window, negatives, epochs,
        lr, neg_cum, derive_seed(seed, "sgns-train"))
    covered = {int(x) for x in np.unique(visited)}
    meta = {"kind": "skipgram", "dim": dim, "window": window,
            "negatives": negatives, "epochs": epochs, "lr": lr, "seed": seed,
            "losses": [float(x) for x in losses]}
    return NodeEmbeddings(w_in, covered, meta)


def author_sim_cosine(embeddings: NodeEmbeddings, a: int, b: int) -> float:
    """Cosine similarity of two embedded nodes; zero vectors score 0."""
    va, vb = embeddings.vector(a), embeddings.vector(b)
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


def skipgram_pair_loss(u: np.ndarray, v: np.ndarray,
                       negs: np.ndarray) -> tuple[float, np.ndarray,
                                                  np.ndarray, np.ndarray]:
    """Loss and analytic gradients of one positive pair against negatives.

    Mirrors the kernel update arithmetic: loss = -log sigmoid(u.v)
    - sum_j log sigmoid(-u.n_j).  Returns (loss, du, dv, dnegs).
    """
    def sigmoid(x):
        return 1.0 / (1.0 + np.exp(-np.clip(x, -35.0, 35.0)))

    s_pos = sigmoid(float(u @ v))
    loss = -np.log(s_pos)
    du = (s_pos - 1.0) * v
    dv = (s_pos - 1.0) * u
    dnegs = np.zeros_like(negs)
    for j in range(negs.shape[0]):
        s_neg = sigmoid(float(u @ negs[j]))
        loss += -np.log(1.0 - s_neg)
        du = du + s_neg * negs[j]
        dnegs[j] = s_neg * u
    return float(loss), du, dv, dnegs

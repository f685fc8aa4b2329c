"""Graph neural encoders over the author-publication graph, trained with
plain float64 numpy and hand-written backprop.

Four encoder bodies share one interface: `graphsage` (mean pooling over
sampled neighborhoods), `pinsage` (visit-count-weighted pooling over the
same samples), `gcn` (full-graph symmetric-normalized propagation), and
`mlp` (features only, no message passing).  Every encoder projects raw
features through a shared input matrix, applies L biasless layers with ReLU
between them and none after the last, and L2-normalizes rows (zero rows stay
zero).

Training modes: an unsupervised hinge on cosine scores of coauthor pairs
against random negatives, and a supervised siamese head over node pairs with
a two-way softmax.  Both run plain SGD and verify their gradients against
central differences before the first step.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from namegraph import kernels
from namegraph.corpus import Labeling
from namegraph.errors import ConfigError, DataError, ModelError
from namegraph.graph import BipartiteGraph
from namegraph.kernels import SplitMix64, derive_seed
from namegraph.walks import NodeEmbeddings

ARCHS = ("graphsage", "gcn", "pinsage", "mlp")


@dataclass
class GnnConfig:
    arch: str = "graphsage"
    hidden: int = 64
    out_dim: int = 64
    fanouts: tuple[int, ...] = (10, 5)
    epochs: int = 5
    batch_size: int = 128
    lr: float = 0.05
    margin: float = 0.4
    literal_margin: bool = False
    negatives_ratio: float = 1.0
    head_hidden: int = 32
    pinsage_alpha: float = 0.2
    pinsage_walk_length: int = 200
    seed: int = 0

    @property
    def n_layers(self) -> int:
        return len(self.fanouts)

    def validate(self) -> None:
        if self.arch not in ARCHS:
            raise ConfigError(f"unknown arch {self.arch!r}; "
                              f"expected one of {', '.join(ARCHS)}")
        if self.hidden < 1 or self.out_dim < 1 or self.head_hidden < 1:
            raise ConfigError("layer widths must be >= 1")
        if not self.fanouts or any(f < 1 for f in self.fanouts):
            raise ConfigError("fanouts must be a non-empty tuple of ints >= 1")
        if len(self.fanouts) not in (1, 2):
            raise ConfigError("only 1- or 2-layer encoders are supported")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")
        if self.margin < 0:
            raise ConfigError("margin must be >= 0")
        if self.negatives_ratio <= 0:
            raise ConfigError("negatives_ratio must be positive")
        if not 0.0 <= self.pinsage_alpha <= 1.0:
            raise ConfigError("pinsage_alpha must be in [0, 1]")
        if self.pinsage_walk_length < 1:
            raise ConfigError("pinsage_walk_length must be >= 1")


# -- parameters -------------------------------------------------------------


def _glorot(rng: SplitMix64, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    out = np.empty((fan_in, fan_out), dtype=np.float64)
    for i in range(fan_in):
        for j in range(fan_out):
            out[i, j] = (rng.next_double() * 2.0 - 1.0) * bound
    return out


def init_params(cfg: GnnConfig, feature_dim: int,
                with_head: bool = False) -> dict[str, np.ndarray]:
    """Fresh parameter dict; the encoder is biasless, the head is not."""
    cfg.validate()
    rng = SplitMix64(derive_seed(cfg.seed, "init", cfg.arch))
    h, d, L = cfg.hidden, cfg.out_dim, cfg.n_layers
    params: dict[str, np.ndarray] = {"proj": _glorot(rng, feature_dim, h)}
    for l in range(1, L + 1):
        out = d if l == L else h
        if cfg.arch in ("graphsage", "pinsage"):
            params[f"l{l}_neigh"] = _glorot(rng, h, h)
            params[f"l{l}_self"] = _glorot(rng, 2 * h, out)
        else:
            params[f"l{l}"] = _glorot(rng, h, out)
    if with_head:
        params["head_w1"] = _glorot(rng, 2 * d, cfg.head_hidden)
        params["head_b1"] = np.zeros(cfg.head_hidden, dtype=np.float64)
        params["head_w2"] = _glorot(rng, cfg.head_hidden, 2)
        params["head_b2"] = np.zeros(2, dtype=np.float64)
    return params


def zero_grads(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.items()}


def params_checksum(params: dict[str, np.ndarray]) -> str:
    digest = hashlib.sha256()
    for k in sorted(params):
        digest.update(k.encode("utf-8"))
        digest.update(str(params[k].shape).encode("utf-8"))
        digest.update(params[k].tobytes())
    return digest.hexdigest()


def save_params(path: str, params: dict[str, np.ndarray],
                meta: dict) -> None:
    payload = dict(meta)
    payload.setdefault("format", "namegraph-gnn")
    payload.setdefault("version", 1)
    np.savez(path, meta=json.dumps(payload, sort_keys=True), **params)


def load_params(path: str,
                expected_arch: str | None = None) -> tuple[dict, dict]:
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            if meta.get("format") != "namegraph-gnn":
                raise DataError(f"{path}: not an encoder parameter file")
            params = {k: data[k] for k in data.files if k != "meta"}
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"{path}: cannot load parameters ({exc})") from exc
    if expected_arch is not None and meta.get("arch") != expected_arch:
        raise ModelError(f"{path}: holds a {meta.get('arch')!r} encoder, "
                         f"expected {expected_arch!r}")
    return params, meta


# -- neighborhood sampling ---------------------------------------------------


@dataclass
class SampledBatch:
    """Node pyramid for one minibatch of a sampled encoder.

    Level 0 holds the batch nodes; level i+1 holds fanouts[i] child slots
    per level-i node, right-padded with weight-zero dummies when a node has
    fewer neighbors (or none).
    """

    node_levels: list[np.ndarray]
    x_levels: list[np.ndarray]
    w_levels: list[np.ndarray]


def _sample_level(indptr, indices, parents: np.ndarray, fanout: int,
                  rng: SplitMix64, edge_weights: np.ndarray | None):
    children = np.zeros(parents.size * fanout, dtype=np.int64)
    weights = np.zeros((parents.size, fanout), dtype=np.float64)
    for i, node in enumerate(parents):
        lo, hi = int(indptr[node]), int(indptr[node + 1])
        deg = hi - lo
        if deg == 0:
            continue
        if deg <= fanout:
            sel = list(range(deg))
        else:
            pool = list(range(deg))
            sel = []
            for k in range(fanout):
                j = k + rng.next_below(deg - k)
                pool[k], pool[j] = pool[j], pool[k]
                sel.append(pool[k])
        row = np.empty(len(sel), dtype=np.float64)
        for k, s in enumerate(sel):
            children[i * fanout + k] = indices[lo + s]
            row[k] = 1.0 if edge_weights is None else edge_weights[lo + s]
        total = row.sum()
        if total > 0:
            weights[i, :len(sel)] = row / total
    return children, weights


def sample_neighborhood(graph: BipartiteGraph, node: int,
                        fanouts: tuple[int, ...],
                        seed: int = 0) -> list[list[int]]:
    """Layered uniform neighbor sample rooted at one node of the flat id
    space.  Level 0 is the node itself; padded dummy slots are omitted."""
    indptr, indices = graph.unified_csr()
    if not 0 <= node < len(indptr) - 1:
        raise ConfigError(f"node {node} out of range")
    rng = SplitMix64(derive_seed(seed, "sample", node))
    levels = [[int(node)]]
    parents = np.array([node], dtype=np.int64)
    alive = np.array([True])
    for f in fanouts:
        children, weights = _sample_level(indptr, indices, parents, f, rng,
                                          None)
        # padded slots reuse node id 0; mask them and their descendants out
        keep = (weights.reshape(-1) > 0) & np.repeat(alive, f)
        levels.append([int(c) for c, k in zip(children, keep) if k])
        parents = children
        alive = keep
    return levels


def pinsage_edge_weights(graph: BipartiteGraph, alpha: float = 0.2,
                         walk_length: int = 200,
                         seed: int = 0) -> np.ndarray:
    """Visit-count weight for every edge slot of the flat CSR.

    A restart walk from each node scores how much probability mass flows to
    each neighbor; +1 smoothing keeps unvisited neighbors selectable.
    """
    indptr, indices = graph.unified_csr()
    out = np.ones(indices.size, dtype=np.float64)
    for node in range(len(indptr) - 1):
        lo, hi = int(indptr[node]), int(indptr[node + 1])
        if hi == lo:
            continue
        counts = kernels.rwr_node_counts(
            indptr, indices, node, alpha, walk_length,
            derive_seed(seed, "pinsage", node))
        out[lo:hi] += counts[indices[lo:hi]]
    return out


class BatchBuilder:
    """Turns node lists into encoder inputs for one graph snapshot."""

    def __init__(self, graph: BipartiteGraph, features: np.ndarray,
                 cfg: GnnConfig) -> None:
        cfg.validate()
        indptr, _ = graph.unified_csr()
        if features.shape[0] != len(indptr) - 1:
            raise ModelError(
                f"feature matrix has {features.shape[0]} rows for "
                f"{len(indptr) - 1} graph slots")
        self.graph = graph
        self.x = features
        self.cfg = cfg
        self.edge_weights = None
        if cfg.arch == "pinsage":
            self.edge_weights = pinsage_edge_weights(
                graph, cfg.pinsage_alpha, cfg.pinsage_walk_length, cfg.seed)
        self.a_hat = gcn_matrix(graph) if cfg.arch == "gcn" else None

    def build(self, nodes, seed: int):
        nodes = np.asarray(nodes, dtype=np.int64)
        if self.cfg.arch in ("gcn", "mlp"):
            return nodes
        indptr, indices = self.graph.unified_csr()
        rng = SplitMix64(seed)
        node_levels = [nodes]
        w_levels = []
        for f in self.cfg.fanouts:
            children, weights = _sample_level(indptr, indices,
                                              node_levels[-1], f, rng,
                                              self.edge_weights)
            node_levels.append(children)
            w_levels.append(weights)
        x_levels = [self.x[lvl] for lvl in node_levels]
        return SampledBatch(node_levels, x_levels, w_levels)


# -- encoder forward/backward ------------------------------------------------


def gcn_matrix(graph: BipartiteGraph) -> sp.csr_matrix:
    """Symmetric-normalized adjacency with self loops over the flat space."""
    indptr, indices = graph.unified_csr()
    n = len(indptr) - 1
    adj = sp.csr_matrix((np.ones(indices.size), indices, indptr),
                        shape=(n, n))
    adj = adj + sp.identity(n, format="csr")
    inv_sqrt = 1.0 / np.sqrt(np.asarray(adj.sum(axis=1)).ravel())
    d = sp.diags(inv_sqrt)
    return (d @ adj @ d).tocsr()


def _forward_sampled(params: dict, cfg: GnnConfig, batch: SampledBatch):
    L = cfg.n_layers
    h = [x @ params["proj"] for x in batch.x_levels]
    cache = {"h0": list(h), "layers": []}
    for l in range(1, L + 1):
        wn, ws = params[f"l{l}_neigh"], params[f"l{l}_self"]
        new_h, lvl_cache = [], []
        for i in range(L - l + 1):
            child = h[i + 1]
            msg_pre = child @ wn
            msg = np.maximum(msg_pre, 0.0)
            b = h[i].shape[0]
            f = batch.w_levels[i].shape[1]
            pooled = np.einsum("bf,bfk->bk", batch.w_levels[i],
                               msg.reshape(b, f, -1))
            cat = np.concatenate([h[i], pooled], axis=1)
            out_pre = cat @ ws
            out = out_pre if l == L else np.maximum(out_pre, 0.0)
            new_h.append(out)
            lvl_cache.append((child, msg_pre, cat, out_pre))
        cache["layers"].append(lvl_cache)
        h = new_h
    return h[0], cache


def _backward_sampled(params: dict, cfg: GnnConfig, batch: SampledBatch,
                      cache: dict, d_out: np.ndarray, grads: dict) -> None:
    L, hidden = cfg.n_layers, cfg.hidden
    d_h = [d_out]
    for l in range(L, 0, -1):
        wn, ws = params[f"l{l}_neigh"], params[f"l{l}_self"]
        lvl_cache = cache["layers"][l - 1]
        d_prev: list[np.ndarray | None] = [None] * (L - l + 2)
        for i, d in enumerate(d_h):
            child, msg_pre, cat, out_pre = lvl_cache[i]
            d_pre = d if l == L else d * (out_pre > 0)
            grads[f"l{l}_self"] += cat.T @ d_pre
            d_cat = d_pre @ ws.T
            d_self, d_pooled = d_cat[:, :hidden], d_cat[:, hidden:]
            w = batch.w_levels[i]
            d_msg = np.einsum("bf,bk->bfk", w, d_pooled).reshape(
                child.shape[0], -1)
            d_msg_pre = d_msg * (msg_pre > 0)
            grads[f"l{l}_neigh"] += child.T @ d_msg_pre
            d_child = d_msg_pre @ wn.T
            d_prev[i] = d_self if d_prev[i] is None else d_prev[i] + d_self
            d_prev[i + 1] = d_child
        d_h = [d if d is not None else np.zeros((0, hidden))
               for d in d_prev]
    for i, d in enumerate(d_h):
        grads["proj"] += batch.x_levels[i].T @ d


def _forward_dense(params: dict, cfg: GnnConfig, x_rows: np.ndarray):
    """MLP body: shared projection then L dense layers on each row."""
    h = x_rows @ params["proj"]
    cache = {"h0": h, "layers": []}
    for l in range(1, cfg.n_layers + 1):
        pre = h @ params[f"l{l}"]
        out = pre if l == cfg.n_layers else np.maximum(pre, 0.0)
        cache["layers"].append((h, pre))
        h = out
    return h, cache


def _backward_dense(params: dict, cfg: GnnConfig, x_rows: np.ndarray,
                    cache: dict, d_out: np.ndarray, grads: dict) -> None:
    d = d_out
    for l in range(cfg.n_layers, 0, -1):
        h_in, pre = cache["layers"][l - 1]
        d_pre = d if l == cfg.n_layers else d * (pre > 0)
        grads[f"l{l}"] += h_in.T @ d_pre
        d = d_pre @ params[f"l{l}"].T
    grads["proj"] += x_rows.T @ d


def _forward_gcn(params: dict, cfg: GnnConfig, a_hat: sp.csr_matrix,
                 x: np.ndarray, rows: np.ndarray):
    h = x @ params["proj"]
    cache = {"h0": h, "layers": []}
    for l in range(1, cfg.n_layers + 1):
        s = a_hat @ h
        pre = s @ params[f"l{l}"]
        out = pre if l == cfg.n_layers else np.maximum(pre, 0.0)
        cache["layers"].append((s, pre))
        h = out
    cache["full_out"] = h
    return h[rows], cache


def _backward_gcn(params: dict, cfg: GnnConfig, a_hat: sp.csr_matrix,
                  x: np.ndarray, rows: np.ndarray, cache: dict,
                  d_out: np.ndarray, grads: dict) -> None:
    d_full = np.zeros(cache["full_out"].shape, dtype=np.float64)
    np.add.at(d_full, rows, d_out)
    d = d_full
    for l in range(cfg.n_layers, 0, -1):
        s, pre = cache["layers"][l - 1]
        d_pre = d if l == cfg.n_layers else d * (pre > 0)
        grads[f"l{l}"] += s.T @ d_pre
        d = a_hat.T @ (d_pre @ params[f"l{l}"].T)
    grads["proj"] += x.T @ d


def l2_normalize(y: np.ndarray):
    norms = np.linalg.norm(y, axis=1)
    z = np.zeros_like(y)
    mask = norms > 0
    z[mask] = y[mask] / norms[mask, None]
    return z, norms


def l2_normalize_backward(z: np.ndarray, norms: np.ndarray,
                          dz: np.ndarray) -> np.ndarray:
    dy = np.zeros_like(dz)
    mask = norms > 0
    dots = (z[mask] * dz[mask]).sum(axis=1, keepdims=True)
    dy[mask] = (dz[mask] - z[mask] * dots) / norms[mask, None]
    return dy


class Encoder:
    """Forward/backward dispatch for one architecture over one snapshot."""

    def __init__(self, builder: BatchBuilder) -> None:
        self.builder = builder
        self.cfg = builder.cfg

    def forward(self, params: dict, batch):
        if self.cfg.arch in ("graphsage", "pinsage"):
            y, cache = _forward_sampled(params, self.cfg, batch)
        elif self.cfg.arch == "mlp":
            y, cache = _forward_dense(params, self.cfg, self.builder.x[batch])
        else:
            y, cache = _forward_gcn(params, self.cfg, self.builder.a_hat,
                                    self.builder.x, batch)
        z, norms = l2_normalize(y)
        cache["z"], cache["norms"] = z, norms
        return z, cache

    def backward(self, params: dict, batch, cache, dz: np.ndarray,
                 grads: dict) -> None:
        dy = l2_normalize_backward(cache["z"], cache["norms"], dz)
        if self.cfg.arch in ("graphsage", "pinsage"):
            _backward_sampled(params, self.cfg, batch, cache, dy, grads)
        elif self.cfg.arch == "mlp":
            _backward_dense(params, self.cfg, self.builder.x[batch], cache,
                            dy, grads)
        else:
            _backward_gcn(params, self.cfg, self.builder.a_hat,
                          self.builder.x, batch, cache, dy, grads)

    def encode(self, params: dict, nodes, seed: int,
               chunk: int = 256) -> np.ndarray:
        """Inference pass; neighborhoods are resampled deterministically."""
        nodes = np.asarray(nodes, dtype=np.int64)
        out = np.empty((nodes.size, self.cfg.out_dim), dtype=np.float64)
        for start in range(0, nodes.size, chunk):
            part = nodes[start:start + chunk]
            batch = self.builder.build(part, derive_seed(seed, "enc", start))
            out[start:start + chunk], _ = self.forward(params, batch)
        return out


# -- losses -------------------------------------------------------------------


def hinge_loss(z_src: np.ndarray, z_dst: np.ndarray, z_neg: np.ndarray,
               margin: float, literal: bool = False):
    """Margin ranking loss on cosine scores of unit rows.

    Default form penalizes a negative scoring within `margin` of the
    positive: mean(max(0, s_neg - s_pos + margin)).  The literal variant
    flips the roles, rewarding distant positives instead; it is kept for
    reproducing runs defined against that sign convention.
    """
    s_pos = (z_src * z_dst).sum(axis=1)
    s_neg = (z_src * z_neg).sum(axis=1)
    raw = (s_pos - s_neg - margin) if literal else (s_neg - s_pos + margin)
    per_pair = np.maximum(raw, 0.0)
    loss = float(per_pair.mean()) if per_pair.size else 0.0
    m = max(per_pair.size, 1)
    active = (per_pair > 0).astype(np.float64) / m
    sign = 1.0 if literal else -1.0
    ds_pos = sign * active
    ds_neg = -sign * active
    dz_src = ds_pos[:, None] * z_dst + ds_neg[:, None] * z_neg
    dz_dst = ds_pos[:, None] * z_src
    dz_neg = ds_neg[:, None] * z_src
    return loss, dz_src, dz_dst, dz_neg


def siamese_forward(params: dict, z1: np.ndarray, z2: np.ndarray):
    """Two-way classifier over a symmetric pair representation."""
    u = np.abs(z1 - z2)
    v = z1 * z2
    f = np.concatenate([u, v], axis=1)
    a1 = f @ params["head_w1"] + params["head_b1"]
    r1 = np.maximum(a1, 0.0)
    logits = r1 @ params["head_w2"] + params["head_b2"]
    return logits, (z1, z2, f, a1, r1)


def nll_loss(logits: np.ndarray, labels: np.ndarray):
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    m = logits.shape[0]
    loss = float(-log_probs[np.arange(m), labels].mean())
    d_logits = np.exp(log_probs)
    d_logits[np.arange(m), labels] -= 1.0
    return loss, d_logits / m


def siamese_backward(params: dict, cache, d_logits: np.ndarray,
                     grads: dict):
    z1, z2, f, a1, r1 = cache
    grads["head_w2"] += r1.T @ d_logits
    grads["head_b2"] += d_logits.sum(axis=0)
    d_r1 = d_logits @ params["head_w2"].T
    d_a1 = d_r1 * (a1 > 0)
    grads["head_w1"] += f.T @ d_a1
    grads["head_b1"] += d_a1.sum(axis=0)
    d_f = d_a1 @ params["head_w1"].T
    d = z1.shape[1]
    du, dv = d_f[:, :d], d_f[:, d:]
    sign = np.sign(z1 - z2)
    dz1 = sign * du + z2 * dv
    dz2 = -sign * du + z1 * dv
    return dz1, dz2


def pair_probability(params: dict, z1: np.ndarray,
                     z2: np.ndarray) -> np.ndarray:
    """P(same person) for each row pair; symmetric in its arguments."""
    logits, _ = siamese_forward(params, z1, z2)
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e[:, 1] / e.sum(axis=1)


# -- gradient verification -----------------------------------------------------


def gradient_check(loss_fn, params: dict[str, np.ndarray],
                   grads: dict[str, np.ndarray], n_samples: int = 24,
                   eps: float = 1e-5, seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients
    over sampled coordinates.

    Coordinates that straddle a ReLU or hinge kink (detected by disagreeing
    one-sided slopes) are skipped and redrawn, since no subgradient can match
    a finite difference there.
    """
    keys = sorted(k for k in params if k in grads)
    sizes = [params[k].size for k in keys]
    total = sum(sizes)
    rng = SplitMix64(derive_seed(seed, "grad-check"))
    f0 = loss_fn(params)
    worst = 0.0
    checked = 0
    for _ in range(n_samples * 10):
        if checked >= n_samples:
            break
        flat = rng.next_below(total)
        for k, size in zip(keys, sizes):
            if flat < size:
                break
            flat -= size
        idx = np.unravel_index(flat, params[k].shape)
        orig = params[k][idx]
        params[k][idx] = orig + eps
        f_plus = loss_fn(params)
        params[k][idx] = orig - eps
        f_minus = loss_fn(params)
        params[k][idx] = orig
        d_plus = (f_plus - f0) / eps
        d_minus = (f0 - f_minus) / eps
        if abs(d_plus - d_minus) > 0.02 * (abs(d_plus) + abs(d_minus)) + 1e-8:
            continue  # kink between the probes; redraw
        numeric = (f_plus - f_minus) / (2.0 * eps)
        analytic = float(grads[k][idx])
        err = abs(numeric - analytic) / max(abs(numeric), abs(analytic), 1e-6)
        worst = max(worst, err)
        checked += 1
    if checked == 0:
        raise ModelError("every sampled coordinate sat on a kink; "
                         "gradients could not be verified")
    return worst


# -- pair datasets ---------------------------------------------------------------


def node_profile_map(graph: BipartiteGraph, labeling: Labeling,
                     name: str) -> dict[int, str]:
    """Author node -> profile id, for nodes whose papers sit in exactly one
    profile of the name."""
    paper_profile: dict[str, str] = {}
    for profile, pids in labeling.profiles.get(name, {}).items():
        for pid in pids:
            paper_profile[pid] = profile
    out: dict[int, str] = {}
    for node in graph.name_nodes(name):
        hits = {paper_profile[graph.paper_ids[p]]
                for p in graph.papers_of(node)
                if graph.paper_ids[p] in paper_profile}
        if len(hits) == 1:
            out[node] = hits.pop()
    return out


def build_pair_dataset(graph: BipartiteGraph, labeling: Labeling,
                       names: list[str], negatives_ratio: float = 1.0,
                       seed: int = 0) -> list[tuple[int, int, int]]:
    """Labeled author-node pairs for siamese training.

    Positives: same-profile node pairs within each name.  Negatives: sampled
    same-name cross-profile pairs first (the hard cases), topped up with
    cross-name pairs, about `negatives_ratio` negatives per positive.
    """
    if negatives_ratio <= 0:
        raise ConfigError("negatives_ratio must be positive")
    rng = SplitMix64(derive_seed(seed, "pairs"))
    positives: list[tuple[int, int, int]] = []
    same_name_neg: list[tuple[int, int, int]] = []
    labeled_by_name: list[list[int]] = []
    for name in sorted(names):
        assignment = node_profile_map(graph, labeling, name)
        nodes = sorted(assignment)
        labeled_by_name.append(nodes)
        for i, a in enumerate(nodes):
            for b in nodes[i + 1:]:
                if assignment[a] == assignment[b]:
                    positives.append((a, b, 1))
                else:
                    same_name_neg.append((a, b, 0))
    if not positives:
        raise ModelError("no positive pairs; every profile has one node")
    n_neg = max(1, round(negatives_ratio * len(positives)))
    take_same = min(len(same_name_neg), (n_neg + 1) // 2)
    picked: list[tuple[int, int, int]] = []
    pool = list(same_name_neg)
    for _ in range(take_same):
        j = rng.next_below(len(pool))
        picked.append(pool.pop(j))
    groups = [g for g in labeled_by_name if g]
    seen = set((a, b) for a, b, _ in picked)
    attempts = 0
    while len(picked) < n_neg and len(groups) > 1 and attempts < 50 * n_neg:
        attempts += 1
        gi = rng.next_below(len(groups))
        gj = rng.next_below(len(groups))
        if gi == gj:
            continue
        a = groups[gi][rng.next_below(len(groups[gi]))]
        b = groups[gj][rng.next_below(len(groups[gj]))]
        a, b = (a, b) if a < b else (b, a)
        if (a, b) in seen:
            continue
        seen.add((a, b))
        picked.append((a, b, 0))
    return positives + picked


# -- training ------------------------------------------------------------------


@dataclass
class TrainReport:
    arch: str
    mode: str
    seed: int
    n_pairs: int
    epoch_losses: list[float] = field(default_factory=list)
    grad_check: float = float("nan")
    checksum: str = ""


def _coauthor_sets(graph: BipartiteGraph) -> dict[int, set[int]]:
    out: dict[int, set[int]] = {}
    for a in graph.live_authors():
        peers: set[int] = set()
        for p in graph.papers_of(a):
            peers.update(graph.authors_of(p))
        peers.discard(a)
        out[a] = peers
    return out


def _unsup_triples(graph: BipartiteGraph, coauthors: dict[int, set[int]],
                   rng: SplitMix64) -> list[tuple[int, int, int]]:
    """One (anchor, coauthor, random far node) triple per eligible author."""
    live = graph.live_authors()
    triples = []
    for a in live:
        peers = sorted(coauthors[a])
        if not peers:
            continue
        dst = peers[rng.next_below(len(peers))]
        neg = a
        for _ in range(20):
            cand = live[rng.next_below(len(live))]
            if cand != a and cand not in coauthors[a]:
                neg = cand
                break
        if neg == a:
            continue
        triples.append((a, dst, neg))
    return triples


def _sgd_step(params: dict, grads: dict, lr: float) -> None:
    for k, g in grads.items():
        params[k] -= lr * g


def train_unsupervised(graph: BipartiteGraph, features: np.ndarray,
                       cfg: GnnConfig) -> tuple[NodeEmbeddings, dict,
                                                TrainReport]:
    """Hinge-trained encoder; returns author-node embeddings, the trained
    parameters, and a report with the pre-training gradient check."""
    cfg.validate()
    builder = BatchBuilder(graph, features, cfg)
    encoder = Encoder(builder)
    params = init_params(cfg, features.shape[1], with_head=False)
    coauthors = _coauthor_sets(graph)
    report = TrainReport(arch=cfg.arch, mode="unsupervised", seed=cfg.seed,
                         n_pairs=0)

    probe = _unsup_triples(graph, coauthors,
                           SplitMix64(derive_seed(cfg.seed, "probe")))[:8]
    if not probe:
        raise ModelError("graph has no coauthor pairs to train on")
    report.grad_check = _check_unsup_gradients(encoder, params, cfg, probe)

    for epoch in range(cfg.epochs):
        rng = SplitMix64(derive_seed(cfg.seed, "unsup", epoch))
        triples = _unsup_triples(graph, coauthors, rng)
        for i in range(len(triples) - 1, 0, -1):
            j = rng.next_below(i + 1)
            triples[i], triples[j] = triples[j], triples[i]
        total, count = 0.0, 0
        for lo in range(0, len(triples), cfg.batch_size):
            chunk = triples[lo:lo + cfg.batch_size]
            loss = _unsup_step(encoder, params, cfg, chunk,
                               derive_seed(cfg.seed, "batch", epoch, lo))
            total += loss * len(chunk)
            count += len(chunk)
        report.epoch_losses.append(total / count if count else 0.0)
        report.n_pairs = count
    report.checksum = params_checksum(params)

    live = graph.live_authors()
    z = encoder.encode(params, live, derive_seed(cfg.seed, "final"))
    vectors = np.zeros((graph.n_authors, cfg.out_dim), dtype=np.float64)
    vectors[live] = z
    emb = NodeEmbeddings(vectors, set(live),
                         {"kind": f"gnn-unsup-{cfg.arch}", "seed": cfg.seed})
    return emb, params, report


def _unsup_batches(encoder: Encoder, triples, seed: int):
    srcs = [t[0] for t in triples]
    dsts = [t[1] for t in triples]
    negs = [t[2] for t in triples]
    b_src = encoder.builder.build(srcs, derive_seed(seed, "src"))
    b_dst = encoder.builder.build(dsts, derive_seed(seed, "dst"))
    b_neg = encoder.builder.build(negs, derive_seed(seed, "neg"))
    return b_src, b_dst, b_neg


def _unsup_step(encoder: Encoder, params: dict, cfg: GnnConfig, triples,
                seed: int) -> float:
    b_src, b_dst, b_neg = _unsup_batches(encoder, triples, seed)
    z_src, c_src = encoder.forward(params, b_src)
    z_dst, c_dst = encoder.forward(params, b_dst)
    z_neg, c_neg = encoder.forward(params, b_neg)
    loss, dz_src, dz_dst, dz_neg = hinge_loss(z_src, z_dst, z_neg,
                                              cfg.margin, cfg.literal_margin)
    grads = zero_grads(params)
    encoder.backward(params, b_src, c_src, dz_src, grads)
    encoder.backward(params, b_dst, c_dst, dz_dst, grads)
    encoder.backward(params, b_neg, c_neg, dz_neg, grads)
    _sgd_step(params, grads, cfg.lr)
    return loss


def _check_unsup_gradients(encoder: Encoder, params: dict, cfg: GnnConfig,
                           probe) -> float:
    seed = derive_seed(cfg.seed, "probe-batch")
    b_src, b_dst, b_neg = _unsup_batches(encoder, probe, seed)

    def loss_fn(p):
        z_src, _ = encoder.forward(p, b_src)
        z_dst, _ = encoder.forward(p, b_dst)
        z_neg, _ = encoder.forward(p, b_neg)
        return hinge_loss(z_src, z_dst, z_neg, cfg.margin,
                          cfg.literal_margin)[0]

    z_src, c_src = encoder.forward(params, b_src)
    z_dst, c_dst = encoder.forward(params, b_dst)
    z_neg, c_neg = encoder.forward(params, b_neg)
    _, dz_src, dz_dst, dz_neg = hinge_loss(z_src, z_dst, z_neg, cfg.margin,
                                           cfg.literal_margin)
    grads = zero_grads(params)
    encoder.backward(params, b_src, c_src, dz_src, grads)
    encoder.backward(params, b_dst, c_dst, dz_dst, grads)
    encoder.backward(params, b_neg, c_neg, dz_neg, grads)
    return gradient_check(loss_fn, params, grads, seed=cfg.seed)


def train_supervised(graph: BipartiteGraph, features: np.ndarray,
                     pairs: list[tuple[int, int, int]],
                     cfg: GnnConfig) -> tuple[dict, TrainReport]:
    """Siamese training over labeled author-node pairs."""
    cfg.validate()
    if not pairs:
        raise ModelError("empty pair dataset")
    builder = BatchBuilder(graph, features, cfg)
    encoder = Encoder(builder)
    params = init_params(cfg, features.shape[1], with_head=True)
    report = TrainReport(arch=cfg.arch, mode="supervised", seed=cfg.seed,
                         n_pairs=len(pairs))

    report.grad_check = _check_sup_gradients(encoder, params, cfg, pairs[:8])

    order = list(range(len(pairs)))
    for epoch in range(cfg.epochs):
        rng = SplitMix64(derive_seed(cfg.seed, "sup", epoch))
        for i in range(len(order) - 1, 0, -1):
            j = rng.next_below(i + 1)
            order[i], order[j] = order[j], order[i]
        total, count = 0.0, 0
        for lo in range(0, len(order), cfg.batch_size):
            chunk = [pairs[k] for k in order[lo:lo + cfg.batch_size]]
            loss = _sup_step(encoder, params, cfg, chunk,
                             derive_seed(cfg.seed, "sbatch", epoch, lo))
            total += loss * len(chunk)
            count += len(chunk)
        report.epoch_losses.append(total / count if count else 0.0)
    report.checksum = params_checksum(params)
    return params, report


def _sup_forward(encoder: Encoder, pairs, seed: int):
    lefts = [p[0] for p in pairs]
    rights = [p[1] for p in pairs]
    labels = np.array([p[2] for p in pairs], dtype=np.int64)
    b_l = encoder.builder.build(lefts, derive_seed(seed, "left"))
    b_r = encoder.builder.build(rights, derive_seed(seed, "right"))
    return b_l, b_r, labels


def _sup_step(encoder: Encoder, params: dict, cfg: GnnConfig, pairs,
              seed: int) -> float:
    b_l, b_r, labels = _sup_forward(encoder, pairs, seed)
    z1, c1 = encoder.forward(params, b_l)
    z2, c2 = encoder.forward(params, b_r)
    logits, head_cache = siamese_forward(params, z1, z2)
    loss, d_logits = nll_loss(logits, labels)
    grads = zero_grads(params)
    dz1, dz2 = siamese_backward(params, head_cache, d_logits, grads)
    encoder.backward(params, b_l, c1, dz1, grads)
    encoder.backward(params, b_r, c2, dz2, grads)
    _sgd_step(params, grads, cfg.lr)
    return loss


def _check_sup_gradients(encoder: Encoder, params: dict, cfg: GnnConfig,
                         pairs) -> float:
    seed = derive_seed(cfg.seed, "sprobe")
    b_l, b_r, labels = _sup_forward(encoder, pairs, seed)

    def loss_fn(p):
        z1, _ = encoder.forward(p, b_l)
        z2, _ = encoder.forward(p, b_r)
        logits, _ = siamese_forward(p, z1, z2)
        return nll_loss(logits, labels)[0]

    z1, c1 = encoder.forward(params, b_l)
    z2, c2 = encoder.forward(params, b_r)
    logits, head_cache = siamese_forward(params, z1, z2)
    _, d_logits = nll_loss(logits, labels)
    grads = zero_grads(params)
    dz1, dz2 = siamese_backward(params, head_cache, d_logits, grads)
    encoder.backward(params, b_l, c1, dz1, grads)
    encoder.backward(params, b_r, c2, dz2, grads)
    return gradient_check(loss_fn, params, grads, seed=cfg.seed)


def supervised_scorer(graph: BipartiteGraph, features: np.ndarray,
                      params: dict, cfg: GnnConfig, seed: int = 0):
    """Pair score function over author nodes, with embeddings cached so the
    score is exactly symmetric and repeat lookups are free."""
    builder = BatchBuilder(graph, features, cfg)
    encoder = Encoder(builder)
    cache: dict[int, np.ndarray] = {}

    def ensure(nodes):
        todo = [n for n in nodes if n not in cache]
        if todo:
            z = encoder.encode(params, todo, derive_seed(seed, "score"))
            for n, row in zip(todo, z):
                cache[n] = row

    def score(a: int, b: int) -> float:
        ensure([a, b])
        return float(pair_probability(
            params, cache[a][None, :], cache[b][None, :])[0])

    return score

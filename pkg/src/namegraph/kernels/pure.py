"""Pure-Python reference kernels.

These are the hot loops of the package: restart walks, biased random walks,
and negative-sampling embedding updates.  The compiled extension
(`namegraph.kernels._core`) implements the same functions with identical
arithmetic, operation order, and RNG draws, so outputs match bit for bit.
The pure versions are the portable fallback and the readable specification
of kernel behaviour.
"""

from __future__ import annotations

import math

import numpy as np

from namegraph.kernels.rng import SplitMix64

_DOT_CLAMP = 35.0


def rwr_author_counts(a2p_indptr, a2p_indices, p2a_indptr, p2a_indices,
                      start: int, alpha: float, walk_length: int, seed: int):
    """Run one restart walk over the author side of a bipartite graph.

    Each step either restarts at `start` with probability alpha or makes a
    two-hop move (author -> uniform paper -> uniform coauthor).  The node
    occupied after the step is counted, restarts included, so the counts
    always sum to walk_length.  Returns int64 visit counts per author node.
    """
    n_authors = len(a2p_indptr) - 1
    counts = np.zeros(n_authors, dtype=np.int64)
    rng = SplitMix64(seed)
    cur = start
    for _ in range(walk_length):
        if rng.next_double() < alpha:
            cur = start
        else:
            lo = a2p_indptr[cur]
            deg = a2p_indptr[cur + 1] - lo
            paper = a2p_indices[lo + rng.next_below(deg)]
            plo = p2a_indptr[paper]
            pdeg = p2a_indptr[paper + 1] - plo
            cur = p2a_indices[plo + rng.next_below(pdeg)]
        counts[cur] += 1
    return counts


def rwr_node_counts(indptr, indices, start: int, alpha: float,
                    walk_length: int, seed: int):
    """One-hop restart walk on a flat adjacency; counts every node visited.

    Used to estimate visit-based neighbor importance for weighted pooling.
    """
    n = len(indptr) - 1
    counts = np.zeros(n, dtype=np.int64)
    rng = SplitMix64(seed)
    cur = start
    for _ in range(walk_length):
        if rng.next_double() < alpha:
            cur = start
        else:
            lo = indptr[cur]
            deg = indptr[cur + 1] - lo
            cur = indices[lo + rng.next_below(deg)]
        counts[cur] += 1
    return counts


def _has_edge(indptr, indices, u: int, v: int) -> bool:
    """Binary search for v in the sorted adjacency row of u."""
    lo = indptr[u]
    hi = indptr[u + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        if indices[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[u + 1] and indices[lo] == v


def node2vec_transition_probs(indptr, indices, prev: int, cur: int,
                              p: float, q: float):
    """Transition distribution over cur's neighbors given the previous node.

    Weights: 1/p to return to prev, 1 to a neighbor of prev, 1/q otherwise.
    Returned probabilities align with the sorted adjacency row of cur.
    """
    lo = indptr[cur]
    deg = indptr[cur + 1] - lo
    weights = np.empty(deg, dtype=np.float64)
    for j in range(deg):
        x = indices[lo + j]
        if x == prev:
            weights[j] = 1.0 / p
        elif _has_edge(indptr, indices, prev, x):
            weights[j] = 1.0
        else:
            weights[j] = 1.0 / q
    return weights / weights.sum()


def node2vec_walks(indptr, indices, starts, p: float, q: float,
                   walk_length: int, walks_per_node: int, seed: int):
    """Generate second-order biased walks from every start node.

    Returns an int32 matrix of shape (len(starts) * walks_per_node,
    walk_length) padded with -1 past the end of each walk.  A start node of
    degree zero yields a length-1 walk.
    """
    n_starts = len(starts)
    walks = np.full((n_starts * walks_per_node, walk_length), -1, dtype=np.int32)
    max_deg = 0
    for i in range(len(indptr) - 1):
        d = indptr[i + 1] - indptr[i]
        if d > max_deg:
            max_deg = d
    cum = np.empty(max(max_deg, 1), dtype=np.float64)
    rng = SplitMix64(seed)
    row = 0
    for _ in range(walks_per_node):
        for s_i in range(n_starts):
            start = starts[s_i]
            walks[row, 0] = start
            lo = indptr[start]
            deg = indptr[start + 1] - lo
            if deg == 0:
                row += 1
                continue
            walks[row, 1] = indices[lo + rng.next_below(deg)]
            for pos in range(2, walk_length):
                prev = walks[row, pos - 2]
                cur = walks[row, pos - 1]
                lo = indptr[cur]
                deg = indptr[cur + 1] - lo
                total = 0.0
                for j in range(deg):
                    x = indices[lo + j]
                    if x == prev:
                        w = 1.0 / p
                    elif _has_edge(indptr, indices, prev, x):
                        w = 1.0
                    else:
                        w = 1.0 / q
                    total += w
                    cum[j] = total
                u = rng.next_double() * total
                j = 0
                while j < deg - 1 and cum[j] <= u:
                    j += 1
                walks[row, pos] = indices[lo + j]
            row += 1
    return walks


def _sample_cum(cum, rng: SplitMix64) -> int:
    """Draw an index from a normalized cumulative distribution (last == 1)."""
    u = rng.next_double()
    lo = 0
    hi = len(cum) - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


def _sgns_pair(w_src, w_dst, src: int, dst: int, neg_cum, n_neg: int,
               lr: float, rng: SplitMix64, grad_src) -> float:
    """One negative-sampling update: src row predicts dst against n_neg noise
    rows.  Gradients are taken at the pre-update parameters; the accumulated
    source gradient is applied once at the end.  Returns the pair loss."""
    dim = w_src.shape[1]
    u = w_src[src]
    for k in range(dim):
        grad_src[k] = 0.0
    loss = 0.0

    v = w_dst[dst]
    s = 0.0
    for k in range(dim):
        s += u[k] * v[k]
    if s > _DOT_CLAMP:
        s = _DOT_CLAMP
    elif s < -_DOT_CLAMP:
        s = -_DOT_CLAMP
    sig = 1.0 / (1.0 + math.exp(-s))
    loss += -math.log(sig)
    g = sig - 1.0
    for k in range(dim):
        grad_src[k] += g * v[k]
        v[k] -= lr * g * u[k]

    for _ in range(n_neg):
        tgt = _sample_cum(neg_cum, rng)
        if tgt == dst:
            continue
        v = w_dst[tgt]
        s = 0.0
        for k in range(dim):
            s += u[k] * v[k]
        if s > _DOT_CLAMP:
            s = _DOT_CLAMP
        elif s < -_DOT_CLAMP:
            s = -_DOT_CLAMP
        sig_n = 1.0 / (1.0 + math.exp(s))
        loss += -math.log(sig_n)
        g = 1.0 - sig_n
        for k in range(dim):
            grad_src[k] += g * v[k]
            v[k] -= lr * g * u[k]

    for k in range(dim):
        u[k] -= lr * grad_src[k]
    return loss


def sgns_train_windows(walks, n_nodes: int, w_in, w_out, window: int,
                       n_neg: int, epochs: int, lr0: float, neg_cum,
                       seed: int):
    """Skip-gram with negative sampling over a padded walk matrix.

    The learning rate decays linearly per center position down to a floor of
    lr0 * 1e-4.  Updates run in walk order; determinism comes from the seeded
    RNG.  Returns the mean pair loss per epoch (float64[epochs]).
    """
    n_walks, walk_length = walks.shape
    total_positions = 0
    for w in range(n_walks):
        for i in range(walk_length):
            if walks[w, i] < 0:
                break
            total_positions += 1
    denom = float(epochs * total_positions + 1)
    lr_floor = lr0 * 1e-4
    rng = SplitMix64(seed)
    grad_src = np.zeros(w_in.shape[1], dtype=np.float64)
    losses = np.zeros(epochs, dtype=np.float64)
    pos_counter = 0
    for epoch in range(epochs):
        loss_acc = 0.0
        pairs = 0
        for w in range(n_walks):
            for i in range(walk_length):
                center = walks[w, i]
                if center < 0:
                    break
                lr = lr0 * (1.0 - pos_counter / denom)
                if lr < lr_floor:
                    lr = lr_floor
                j_lo = i - window
                if j_lo < 0:
                    j_lo = 0
                j_hi = i + window + 1
                if j_hi > walk_length:
                    j_hi = walk_length
                for j in range(j_lo, j_hi):
                    if j == i or walks[w, j] < 0:
                        continue
                    loss_acc += _sgns_pair(w_in, w_out, center, walks[w, j],
                                           neg_cum, n_neg, lr, rng, grad_src)
                    pairs += 1
                pos_counter += 1
        losses[epoch] = loss_acc / pairs if pairs > 0 else 0.0
    return losses


def sgns_train_docs(doc_offsets, tokens, w_doc, w_tok, n_neg: int,
                    epochs: int, lr0: float, neg_cum, seed: int):
    """Distributed bag-of-words training: each document vector predicts each
    of its tokens with negative sampling.  Same schedule and update rule as
    sgns_train_windows.  Returns mean pair loss per epoch."""
    n_docs = len(doc_offsets) - 1
    total_tokens = int(doc_offsets[n_docs])
    denom = float(epochs * total_tokens + 1)
    lr_floor = lr0 * 1e-4
    rng = SplitMix64(seed)
    grad_src = np.zeros(w_doc.shape[1], dtype=np.float64)
    losses = np.zeros(epochs, dtype=np.float64)
    counter = 0
    for epoch in range(epochs):
        loss_acc = 0.0
        pairs = 0
        for d in range(n_docs):
            for t in range(doc_offsets[d], doc_offsets[d + 1]):
                lr = lr0 * (1.0 - counter / denom)
                if lr < lr_floor:
                    lr = lr_floor
                loss_acc += _sgns_pair(w_doc, w_tok, d, tokens[t], neg_cum,
                                       n_neg, lr, rng, grad_src)
                pairs += 1
                counter += 1
        losses[epoch] = loss_acc / pairs if pairs > 0 else 0.0
    return losses

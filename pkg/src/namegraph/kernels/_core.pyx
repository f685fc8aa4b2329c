# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels.  Mirrors namegraph.kernels.pure exactly: same RNG, same
arithmetic, same operation order, so both backends return identical bytes.
Any change here must be made in pure.py as well."""

import numpy as np

from libc.math cimport exp, log

cdef double _DOT_CLAMP = 35.0
cdef double _TWO53_INV = 1.0 / 9007199254740992.0
cdef unsigned long long _GAMMA = <unsigned long long> 0x9E3779B97F4A7C15ULL
cdef unsigned long long _MIX1 = <unsigned long long> 0xBF58476D1CE4E5B9ULL
cdef unsigned long long _MIX2 = <unsigned long long> 0x94D049BB133111EBULL


cdef inline unsigned long long _next_u64(unsigned long long *state) noexcept nogil:
    state[0] = state[0] + _GAMMA
    cdef unsigned long long z = state[0]
    z = (z ^ (z >> 30)) * _MIX1
    z = (z ^ (z >> 27)) * _MIX2
    return z ^ (z >> 31)


cdef inline double _next_double(unsigned long long *state) noexcept nogil:
    return <double> (_next_u64(state) >> 11) * _TWO53_INV


cdef inline unsigned long long _next_below(unsigned long long *state,
                                           unsigned long long n) noexcept nogil:
    return ((_next_u64(state) >> 32) * n) >> 32


def rwr_author_counts(const long long[::1] a2p_indptr, const int[::1] a2p_indices,
                      const long long[::1] p2a_indptr, const int[::1] p2a_indices,
                      long long start, double alpha, long long walk_length,
                      unsigned long long seed):
    cdef long long n_authors = a2p_indptr.shape[0] - 1
    counts_arr = np.zeros(n_authors, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    cdef unsigned long long state = seed
    cdef long long cur = start
    cdef long long step, lo, deg, paper, plo, pdeg
    for step in range(walk_length):
        if _next_double(&state) < alpha:
            cur = start
        else:
            lo = a2p_indptr[cur]
            deg = a2p_indptr[cur + 1] - lo
            paper = a2p_indices[lo + <long long> _next_below(&state, <unsigned long long> deg)]
            plo = p2a_indptr[paper]
            pdeg = p2a_indptr[paper + 1] - plo
            cur = p2a_indices[plo + <long long> _next_below(&state, <unsigned long long> pdeg)]
        counts[cur] += 1
    return counts_arr


def rwr_node_counts(const long long[::1] indptr, const int[::1] indices,
                    long long start, double alpha, long long walk_length,
                    unsigned long long seed):
    cdef long long n = indptr.shape[0] - 1
    counts_arr = np.zeros(n, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    cdef unsigned long long state = seed
    cdef long long cur = start
    cdef long long step, lo, deg
    for step in range(walk_length):
        if _next_double(&state) < alpha:
            cur = start
        else:
            lo = indptr[cur]
            deg = indptr[cur + 1] - lo
            cur = indices[lo + <long long> _next_below(&state, <unsigned long long> deg)]
        counts[cur] += 1
    return counts_arr


cdef inline bint _has_edge(const long long[::1] indptr, const int[::1] indices,
                           long long u, long long v) noexcept nogil:
    cdef long long lo = indptr[u]
    cdef long long hi = indptr[u + 1]
    cdef long long mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if indices[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[u + 1] and indices[lo] == v


def node2vec_walks(const long long[::1] indptr, const int[::1] indices,
                   const int[::1] starts, double p, double q,
                   long long walk_length, long long walks_per_node,
                   unsigned long long seed):
    cdef long long n_starts = starts.shape[0]
    walks_arr = np.full((n_starts * walks_per_node, walk_length), -1, dtype=np.int32)
    cdef int[:, ::1] walks = walks_arr
    cdef long long n = indptr.shape[0] - 1
    cdef long long max_deg = 0
    cdef long long i, d
    for i in range(n):
        d = indptr[i + 1] - indptr[i]
        if d > max_deg:
            max_deg = d
    cum_arr = np.empty(max(max_deg, 1), dtype=np.float64)
    cdef double[::1] cum = cum_arr
    cdef unsigned long long state = seed
    cdef long long row = 0
    cdef long long r, s_i, start, lo, deg, pos, prev, cur, j, x
    cdef double total, w, u
    for r in range(walks_per_node):
        for s_i in range(n_starts):
            start = starts[s_i]
            walks[row, 0] = <int> start
            lo = indptr[start]
            deg = indptr[start + 1] - lo
            if deg == 0:
                row += 1
                continue
            walks[row, 1] = indices[lo + <long long> _next_below(&state, <unsigned long long> deg)]
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
                u = _next_double(&state) * total
                j = 0
                while j < deg - 1 and cum[j] <= u:
                    j += 1
                walks[row, pos] = indices[lo + j]
            row += 1
    return walks_arr


cdef inline long long _sample_cum(const double[::1] cum,
                                  unsigned long long *state) noexcept nogil:
    cdef double u = _next_double(state)
    cdef long long lo = 0
    cdef long long hi = cum.shape[0] - 1
    cdef long long mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline double _sgns_pair(double[:, ::1] w_src, double[:, ::1] w_dst,
                              long long src, long long dst,
                              const double[::1] neg_cum, long long n_neg,
                              double lr, unsigned long long *state,
                              double[::1] grad_src) noexcept nogil:
    cdef long long dim = w_src.shape[1]
    cdef long long k, neg, tgt
    cdef double loss = 0.0
    cdef double s, sig, sig_n, g
    for k in range(dim):
        grad_src[k] = 0.0

    s = 0.0
    for k in range(dim):
        s += w_src[src, k] * w_dst[dst, k]
    if s > _DOT_CLAMP:
        s = _DOT_CLAMP
    elif s < -_DOT_CLAMP:
        s = -_DOT_CLAMP
    sig = 1.0 / (1.0 + exp(-s))
    loss += -log(sig)
    g = sig - 1.0
    for k in range(dim):
        grad_src[k] += g * w_dst[dst, k]
        w_dst[dst, k] -= lr * g * w_src[src, k]

    for neg in range(n_neg):
        tgt = _sample_cum(neg_cum, state)
        if tgt == dst:
            continue
        s = 0.0
        for k in range(dim):
            s += w_src[src, k] * w_dst[tgt, k]
        if s > _DOT_CLAMP:
            s = _DOT_CLAMP
        elif s < -_DOT_CLAMP:
            s = -_DOT_CLAMP
        sig_n = 1.0 / (1.0 + exp(s))
        loss += -log(sig_n)
        g = 1.0 - sig_n
        for k in range(dim):
            grad_src[k] += g * w_dst[tgt, k]
            w_dst[tgt, k] -= lr * g * w_src[src, k]

    for k in range(dim):
        w_src[src, k] -= lr * grad_src[k]
    return loss


def sgns_train_windows(const int[:, ::1] walks, long long n_nodes,
                       double[:, ::1] w_in, double[:, ::1] w_out,
                       long long window, long long n_neg, long long epochs,
                       double lr0, const double[::1] neg_cum,
                       unsigned long long seed):
    cdef long long n_walks = walks.shape[0]
    cdef long long walk_length = walks.shape[1]
    cdef long long total_positions = 0
    cdef long long w, i
    for w in range(n_walks):
        for i in range(walk_length):
            if walks[w, i] < 0:
                break
            total_positions += 1
    cdef double denom = <double> (epochs * total_positions + 1)
    cdef double lr_floor = lr0 * 1e-4
    cdef unsigned long long state = seed
    grad_arr = np.zeros(w_in.shape[1], dtype=np.float64)
    cdef double[::1] grad_src = grad_arr
    losses_arr = np.zeros(epochs, dtype=np.float64)
    cdef double[::1] losses = losses_arr
    cdef long long pos_counter = 0
    cdef long long epoch, center, j_lo, j_hi, j, pairs
    cdef double loss_acc, lr
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
                                           neg_cum, n_neg, lr, &state, grad_src)
                    pairs += 1
                pos_counter += 1
        losses[epoch] = loss_acc / pairs if pairs > 0 else 0.0
    return losses_arr


def sgns_train_docs(const long long[::1] doc_offsets, const int[::1] tokens,
                    double[:, ::1] w_doc, double[:, ::1] w_tok,
                    long long n_neg, long long epochs, double lr0,
                    const double[::1] neg_cum, unsigned long long seed):
    cdef long long n_docs = doc_offsets.shape[0] - 1
    cdef long long total_tokens = doc_offsets[n_docs]
    cdef double denom = <double> (epochs * total_tokens + 1)
    cdef double lr_floor = lr0 * 1e-4
    cdef unsigned long long state = seed
    grad_arr = np.zeros(w_doc.shape[1], dtype=np.float64)
    cdef double[::1] grad_src = grad_arr
    losses_arr = np.zeros(epochs, dtype=np.float64)
    cdef double[::1] losses = losses_arr
    cdef long long counter = 0
    cdef long long epoch, d, t, pairs
    cdef double loss_acc, lr
    for epoch in range(epochs):
        loss_acc = 0.0
        pairs = 0
        for d in range(n_docs):
            for t in range(doc_offsets[d], doc_offsets[d + 1]):
                lr = lr0 * (1.0 - counter / denom)
                if lr < lr_floor:
                    lr = lr_floor
                loss_acc += _sgns_pair(w_doc, w_tok, d, tokens[t], neg_cum,
                                       n_neg, lr, &state, grad_src)
                pairs += 1
                counter += 1
        losses[epoch] = loss_acc / pairs if pairs > 0 else 0.0
    return losses_arr

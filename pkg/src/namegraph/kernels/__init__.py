"""Kernel backend selection.

The compiled extension is preferred when present; set NAMEGRAPH_PURE=1 to
force the pure-Python fallback.  Both backends share the RNG defined in
rng.py and produce bit-identical outputs.
"""

from __future__ import annotations

import os

from namegraph.kernels.rng import MASK64, SplitMix64, derive_seed
from namegraph.kernels.pure import node2vec_transition_probs

if os.environ.get("NAMEGRAPH_PURE"):
    from namegraph.kernels import pure as _impl

    BACKEND = "pure"
else:
    try:
        from namegraph.kernels import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from namegraph.kernels import pure as _impl

        BACKEND = "pure"

rwr_author_counts = _impl.rwr_author_counts
rwr_node_counts = _impl.rwr_node_counts
node2vec_walks = _impl.node2vec_walks
sgns_train_windows = _impl.sgns_train_windows
sgns_train_docs = _impl.sgns_train_docs

__all__ = [
    "BACKEND",
    "MASK64",
    "SplitMix64",
    "derive_seed",
    "node2vec_transition_probs",
    "node2vec_walks",
    "rwr_author_counts",
    "rwr_node_counts",
    "sgns_train_docs",
    "sgns_train_windows",
]

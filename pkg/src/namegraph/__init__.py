"""namegraph: author name disambiguation on bipartite author-publication
graphs.

The package groups publications that share an ambiguous author name into
per-person clusters.  It offers string baselines, restart-walk node merging,
biased random-walk embeddings, and small graph neural scorers, all evaluated
with pairwise precision/recall/F1 against labeled profiles.
"""

__version__ = "0.1.0"

from namegraph.kernels import BACKEND

__all__ = ["BACKEND", "__version__"]

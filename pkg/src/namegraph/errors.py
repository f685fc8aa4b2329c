"""Exception hierarchy.  Every error carries a short machine-readable code so
the command-line layer can emit one parseable failure line."""

from __future__ import annotations


class NamegraphError(Exception):
    """Base class for all package errors."""

    code = "error"


class ConfigError(NamegraphError):
    """Invalid configuration value or unparseable config file."""

    code = "config"


class DataError(NamegraphError):
    """Malformed input data: publications, labels, or persisted artifacts."""

    code = "data"


class GraphError(NamegraphError):
    """Illegal graph operation, e.g. merging nodes with different names."""

    code = "graph"


class WalkError(NamegraphError):
    """Walk cannot be performed, e.g. start node with no incident edges."""

    code = "walk"


class ModelError(NamegraphError):
    """Model training, scoring, or persistence failure."""

    code = "model"

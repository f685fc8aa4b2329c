"""End-to-end experiment orchestration.

One :class:`ExperimentConfig` describes a full run: data paths, one method,
clustering threshold(s), and every method hyperparameter.  ``run_experiment``
executes the pipeline and writes three artifacts into the output directory:

* ``clustering.json`` -- predicted clusters in the ground-truth file shape,
* ``metrics.csv``     -- per-name and summary pairwise precision/recall/F1,
* ``manifest.json``   -- config, seed, package/backend versions, input and
  output checksums, and wall time.

``run_sweep`` trains once and re-clusters per threshold; ``run_from_manifest``
replays a recorded run and is byte-identical on the clustering and metrics
files when the inputs have not changed.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import time
from dataclasses import dataclass, field, fields
from typing import Callable

import numpy as np
import scipy

from namegraph import __version__
from namegraph.corpus import (Corpus, Labeling, load_ground_truth,
                              load_publications, normalize_name)
from namegraph.errors import ConfigError, DataError
from namegraph.graph import BipartiteGraph, build_graph
from namegraph.cluster_eval import (Clustering, PairwiseMetrics, baseline_sim,
                                    cluster_all_names, pairwise_metrics,
                                    write_metrics_csv)
from namegraph.walks import (RwrConfig, author_sim_cosine, node2vec_corpus,
                             rwr_merge, train_skipgram)
from namegraph.textfeat import CorpusFeatures
from namegraph.gnn import (ARCHS, GnnConfig, build_pair_dataset,
                           supervised_scorer, train_supervised,
                           train_unsupervised)
from namegraph.kernels import BACKEND
from namegraph.kernels.rng import derive_seed

BASE_METHODS = ("cluster-by-name", "cluster-by-name-org", "rwr-merge",
                "node2vec", "gnn-unsup")
METHODS = BASE_METHODS + tuple(f"gnn-sup:{arch}" for arch in ARCHS)
LINKAGES = ("single", "average", "complete")


@dataclass
class ExperimentConfig:
    """Flat description of one experiment.  Every field has a default and the
    whole record round-trips losslessly through the key=value file format."""

    # data
    publications: str = ""
    labels: str = ""
    split: str = ""
    # method and clustering
    method: str = "cluster-by-name"
    theta: float = 0.5
    thetas: tuple[float, ...] = (0.0, 0.5, 0.8, 0.95)
    linkage: str = "average"
    plain_jaro: bool = False
    # restart-walk merging
    rwr_alpha: float = 0.4
    rwr_epochs: int = 1
    rwr_walk_length: int = 10000
    rwr_threshold: int = 3
    # biased walks + skip-gram
    n2v_p: float = 1.0
    n2v_q: float = 1.0
    n2v_walk_length: int = 20
    n2v_walks_per_node: int = 10
    emb_dim: int = 100
    emb_window: int = 5
    emb_negatives: int = 5
    emb_epochs: int = 5
    emb_lr: float = 0.025
    # text feature models
    feat_dim: int = 100
    feat_window: int = 5
    feat_negatives: int = 5
    feat_epochs: int = 20
    feat_lr: float = 0.025
    # graph neural scorers
    gnn_hidden: int = 64
    gnn_out_dim: int = 64
    gnn_fanouts: tuple[int, ...] = (10, 5)
    gnn_epochs: int = 5
    gnn_batch_size: int = 128
    gnn_lr: float = 0.05
    gnn_margin: float = 0.4
    gnn_negatives_ratio: float = 1.0
    gnn_head_hidden: int = 32
    # run control
    seed: int = 0
    deterministic: bool = True
    out_dir: str = "runs/out"

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one "
                              f"of {', '.join(METHODS)}")
        if self.linkage not in LINKAGES:
            raise ConfigError(f"unknown linkage {self.linkage!r}")
        if not np.isfinite(self.theta):
            raise ConfigError("theta must be finite")
        if not self.thetas or not all(np.isfinite(t) for t in self.thetas):
            raise ConfigError("thetas must be a non-empty tuple of finite "
                              "values")
        if not self.out_dir:
            raise ConfigError("out_dir must be set")
        # method-specific settings are validated by their own configs; run
        # them here so a bad file fails before any data is loaded
        self.rwr_config().validate()
        if self.method.startswith("gnn"):
            self.gnn_config().validate()

    # -- derived sub-configs --------------------------------------------

    def rwr_config(self) -> RwrConfig:
        return RwrConfig(alpha=self.rwr_alpha, epochs=self.rwr_epochs,
                         walk_length=self.rwr_walk_length,
                         visit_threshold=self.rwr_threshold,
                         seed=derive_seed(self.seed, "rwr"))

    def gnn_config(self, arch: str | None = None) -> GnnConfig:
        if arch is None:
            arch = (self.method.split(":", 1)[1]
                    if self.method.startswith("gnn-sup:") else "graphsage")
        return GnnConfig(arch=arch, hidden=self.gnn_hidden,
                         out_dim=self.gnn_out_dim,
                         fanouts=tuple(self.gnn_fanouts),
                         epochs=self.gnn_epochs,
                         batch_size=self.gnn_batch_size, lr=self.gnn_lr,
                         margin=self.gnn_margin,
                         negatives_ratio=self.gnn_negatives_ratio,
                         head_hidden=self.gnn_head_hidden,
                         seed=derive_seed(self.seed, "gnn"))

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = {k: tuple(v) if isinstance(v, list) else v
                  for k, v in data.items()}
        return ExperimentConfig(**kwargs)

    def save(self, path: str) -> None:
        lines = ["# namegraph experiment config"]
        for f in fields(self):
            lines.append(f"{f.name} = {format_value(getattr(self, f.name))}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @staticmethod
    def load(path: str) -> "ExperimentConfig":
        overrides = read_config_file(path)
        return ExperimentConfig(**overrides)


# -- key=value file format ----------------------------------------------


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


_DEFAULTS = ExperimentConfig()
_FIELD_NAMES = tuple(f.name for f in fields(ExperimentConfig))


def parse_value(key: str, raw: str):
    """Parse one raw string against the declared type of config field `key`."""
    if key not in _FIELD_NAMES:
        raise ConfigError(f"unknown config key {key!r}")
    default = getattr(_DEFAULTS, key)
    kind = type(default)
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            if not raw:
                return ()
            elem = type(default[0])
            return tuple(elem(part.strip()) for part in raw.split(","))
        return raw
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as "
                          f"{kind.__name__}") from exc


def read_config_file(path: str) -> dict:
    """Parse a key=value config file into a field->value dict."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read config file {path!r}: {exc}") from exc
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = parse_value(key, raw)
    return out


# -- name splits -----------------------------------------------------------


def load_split(path: str, truth: Labeling) -> tuple[list[str], list[str]]:
    """Read a {"train": [...], "eval": [...]} name partition file.

    Names are normalized, must exist in the labeling, and the two lists must
    be disjoint so a supervised run can never train on an evaluation name.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read split file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"split file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or set(data) != {"train", "eval"}:
        raise DataError(f"split file {path!r} must map exactly the keys "
                        "'train' and 'eval' to name lists")
    parts = {}
    known = set(truth.names())
    for part in ("train", "eval"):
        raw = data[part]
        if not isinstance(raw, list):
            raise DataError(f"split file {path!r}: {part!r} must be a list")
        names = sorted({normalize_name(str(n)) for n in raw})
        missing = [n for n in names if n not in known]
        if missing:
            raise DataError(f"split file {path!r}: unlabeled names in "
                            f"{part!r}: {', '.join(missing[:5])}")
        parts[part] = names
    overlap = set(parts["train"]) & set(parts["eval"])
    if overlap:
        raise DataError(f"split file {path!r}: names in both train and eval: "
                        f"{', '.join(sorted(overlap)[:5])}")
    if not parts["eval"]:
        raise DataError(f"split file {path!r}: eval list is empty")
    return parts["train"], parts["eval"]


# -- method preparation ------------------------------------------------------


def _cosine_sim(embeddings) -> Callable[[int, int], float]:
    """Cosine mapped to [0, 1]; theta 0.0 then accepts every same-name pair."""
    def sim(a: int, b: int) -> float:
        return 0.5 * (1.0 + author_sim_cosine(embeddings, a, b))
    return sim


@dataclass
class PreparedMethod:
    """A trained method, ready to cluster at any threshold."""

    config: ExperimentConfig
    graph: BipartiteGraph
    truth: Labeling
    train_names: list[str]
    eval_names: list[str]
    sim: Callable[[int, int], float] | None
    merged_graph: BipartiteGraph | None = None
    extras: dict = field(default_factory=dict)

    def cluster(self, theta: float) -> Clustering:
        cfg = self.config
        if self.merged_graph is not None:
            clusters = {
                name: self.merged_graph.clustering_for_name(
                    name, self.truth.papers_of(name))
                for name in self.eval_names}
            return Clustering(clusters, method=cfg.method, theta=theta,
                              linkage=cfg.linkage, seed=cfg.seed)
        return cluster_all_names(self.graph, self.truth, self.sim, theta,
                                 linkage=cfg.linkage, names=self.eval_names,
                                 method=cfg.method)


def prepare_method(config: ExperimentConfig, corpus: Corpus, truth: Labeling,
                   graph: BipartiteGraph, train_names: list[str],
                   eval_names: list[str]) -> PreparedMethod:
    """Run the training half of a method once; clustering happens per theta."""
    method = config.method
    prep = PreparedMethod(config=config, graph=graph, truth=truth,
                          train_names=train_names, eval_names=eval_names,
                          sim=None)

    if method == "cluster-by-name":
        prep.sim = baseline_sim(graph, "name")
    elif method == "cluster-by-name-org":
        prep.sim = baseline_sim(graph, "name-org", plain_jaro=config.plain_jaro)
    elif method == "rwr-merge":
        merged = graph.copy()
        log = rwr_merge(merged, config.rwr_config())
        prep.merged_graph = merged
        prep.extras["n_merges"] = len(log)
    elif method == "node2vec":
        walks = node2vec_corpus(graph, p=config.n2v_p, q=config.n2v_q,
                                walk_length=config.n2v_walk_length,
                                walks_per_node=config.n2v_walks_per_node,
                                seed=derive_seed(config.seed, "walks"))
        emb = train_skipgram(walks, dim=config.emb_dim,
                             window=config.emb_window,
                             negatives=config.emb_negatives,
                             epochs=config.emb_epochs, lr=config.emb_lr,
                             seed=derive_seed(config.seed, "sgns"))
        prep.sim = _cosine_sim(emb)
        prep.extras["n_walks"] = walks.walks.shape[0]
    elif method == "gnn-unsup":
        features = _features_for(config, corpus, graph)
        emb, _, report = train_unsupervised(graph, features,
                                            config.gnn_config())
        prep.sim = _cosine_sim(emb)
        prep.extras["train_report"] = _report_dict(report)
    elif method.startswith("gnn-sup:"):
        features = _features_for(config, corpus, graph)
        cfg = config.gnn_config()
        pairs = build_pair_dataset(graph, truth, train_names,
                                   negatives_ratio=config.gnn_negatives_ratio,
                                   seed=derive_seed(config.seed, "pairs"))
        params, report = train_supervised(graph, features, pairs, cfg)
        prep.sim = supervised_scorer(graph, features, params, cfg,
                                     seed=derive_seed(config.seed, "score"))
        prep.extras["train_report"] = _report_dict(report)
        prep.extras["n_pairs"] = len(pairs)
    else:  # unreachable after validate()
        raise ConfigError(f"unknown method {method!r}")
    return prep


def _features_for(config: ExperimentConfig, corpus: Corpus,
                  graph: BipartiteGraph) -> np.ndarray:
    models = CorpusFeatures.train(corpus, dim=config.feat_dim,
                                  window=config.feat_window,
                                  negatives=config.feat_negatives,
                                  epochs=config.feat_epochs,
                                  lr=config.feat_lr,
                                  seed=derive_seed(config.seed, "features"))
    return models.feature_matrix(graph, corpus)


def _report_dict(report) -> dict:
    return {"arch": report.arch, "mode": report.mode, "seed": report.seed,
            "n_pairs": report.n_pairs,
            "epoch_losses": [float(x) for x in report.epoch_losses],
            "grad_check": float(report.grad_check),
            "checksum": report.checksum}


# -- run + sweep --------------------------------------------------------


@dataclass
class RunResult:
    config: ExperimentConfig
    clustering: Clustering
    metrics: PairwiseMetrics
    manifest: dict
    clustering_path: str
    metrics_path: str
    manifest_path: str


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _input_entry(path: str) -> dict:
    return {"path": os.path.abspath(path), "sha256": _sha256(path)}


def _write_json(data: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_run_data(config: ExperimentConfig):
    if not config.publications:
        raise ConfigError("config key 'publications' must point to a "
                          "publications file")
    if not config.labels:
        raise ConfigError("config key 'labels' must point to a label file")
    corpus = load_publications(config.publications)
    truth = load_ground_truth(config.labels, corpus)
    if config.split:
        train_names, eval_names = load_split(config.split, truth)
    else:
        train_names = eval_names = truth.names()
    graph = build_graph(corpus)
    return corpus, truth, graph, train_names, eval_names


def _truth_subset(truth: Labeling, names: list[str]) -> Labeling:
    if sorted(names) == truth.names():
        return truth
    return Labeling({name: truth.profiles[name] for name in names})


def _base_manifest(config: ExperimentConfig, eval_names: list[str],
                   extras: dict) -> dict:
    inputs = {"publications": _input_entry(config.publications),
              "labels": _input_entry(config.labels)}
    if config.split:
        inputs["split"] = _input_entry(config.split)
    return {
        "format": "namegraph-manifest",
        "version": 1,
        "package_version": __version__,
        "backend": BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "config": config.to_dict(),
        "inputs": inputs,
        "n_eval_names": len(eval_names),
        "extras": extras,
    }


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Execute one method at one threshold and write the three artifacts."""
    config.validate()
    t0 = time.perf_counter()
    corpus, truth, graph, train_names, eval_names = _load_run_data(config)
    prep = prepare_method(config, corpus, truth, graph, train_names,
                          eval_names)
    clustering = prep.cluster(config.theta)
    metrics = pairwise_metrics(clustering, _truth_subset(truth, eval_names))

    os.makedirs(config.out_dir, exist_ok=True)
    clustering_path = os.path.join(config.out_dir, "clustering.json")
    metrics_path = os.path.join(config.out_dir, "metrics.csv")
    manifest_path = os.path.join(config.out_dir, "manifest.json")
    clustering.save(clustering_path)
    write_metrics_csv({config.method: metrics}, metrics_path)

    manifest = _base_manifest(config, eval_names, prep.extras)
    manifest["outputs"] = {
        "clustering": _input_entry(clustering_path),
        "metrics": _input_entry(metrics_path),
    }
    manifest["wall_time_s"] = round(time.perf_counter() - t0, 6)
    _write_json(manifest, manifest_path)
    return RunResult(config=config, clustering=clustering, metrics=metrics,
                     manifest=manifest, clustering_path=clustering_path,
                     metrics_path=metrics_path, manifest_path=manifest_path)


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list[dict]
    clustering_paths: dict[float, str]
    sweep_path: str
    manifest_path: str


def run_sweep(config: ExperimentConfig) -> SweepResult:
    """Train once, then cluster and score at every threshold in the grid."""
    config.validate()
    t0 = time.perf_counter()
    corpus, truth, graph, train_names, eval_names = _load_run_data(config)
    prep = prepare_method(config, corpus, truth, graph, train_names,
                          eval_names)
    truth_eval = _truth_subset(truth, eval_names)

    os.makedirs(config.out_dir, exist_ok=True)
    rows = []
    clustering_paths: dict[float, str] = {}
    outputs = {}
    for theta in config.thetas:
        clustering = prep.cluster(theta)
        metrics = pairwise_metrics(clustering, truth_eval)
        path = os.path.join(config.out_dir, f"clustering_theta_{theta:g}.json")
        clustering.save(path)
        clustering_paths[theta] = path
        outputs[f"clustering_theta_{theta:g}"] = _input_entry(path)
        rows.append({
            "method": config.method,
            "theta": theta,
            "n_clusters": clustering.n_clusters(),
            "macro_precision": metrics.macro_precision,
            "macro_recall": metrics.macro_recall,
            "macro_f1": metrics.macro_f1,
            "micro_precision": metrics.micro_precision,
            "micro_recall": metrics.micro_recall,
            "micro_f1": metrics.micro_f1,
        })

    sweep_path = os.path.join(config.out_dir, "sweep.csv")
    _write_sweep_csv(rows, sweep_path)
    outputs["sweep"] = _input_entry(sweep_path)

    manifest = _base_manifest(config, eval_names, prep.extras)
    manifest["outputs"] = outputs
    manifest["wall_time_s"] = round(time.perf_counter() - t0, 6)
    manifest_path = os.path.join(config.out_dir, "manifest.json")
    _write_json(manifest, manifest_path)
    return SweepResult(config=config, rows=rows,
                       clustering_paths=clustering_paths,
                       sweep_path=sweep_path, manifest_path=manifest_path)


def _write_sweep_csv(rows: list[dict], path: str) -> None:
    import csv

    columns = ["method", "theta", "n_clusters", "macro_precision",
               "macro_recall", "macro_f1", "micro_precision", "micro_recall",
               "micro_f1"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([
                row["method"], f"{row['theta']:g}", row["n_clusters"],
                *(f"{row[c]:.6f}" for c in columns[3:])])


def run_from_manifest(manifest_path: str) -> RunResult:
    """Replay a recorded run.  Inputs are checksum-verified first, so a
    successful replay is byte-identical on clustering and metrics files."""
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read manifest {manifest_path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest {manifest_path!r} is not valid JSON: "
                        f"{exc}") from exc
    if manifest.get("format") != "namegraph-manifest":
        raise DataError(f"{manifest_path!r} is not a run manifest")
    config = ExperimentConfig.from_dict(manifest["config"])
    for role, entry in manifest.get("inputs", {}).items():
        if _sha256(entry["path"]) != entry["sha256"]:
            raise DataError(f"manifest input {role!r} changed on disk: "
                            f"{entry['path']}")
    return run_experiment(config)


def evaluate_files(predictions_path: str, truth_path: str,
                   method: str = "") -> PairwiseMetrics:
    """Score a saved clustering file against a label file.

    The truth may cover more names than the predictions (a split run);
    predicted names must all be labeled.
    """
    truth = load_ground_truth(truth_path)
    pred = load_ground_truth(predictions_path)
    missing = [n for n in pred.names() if n not in truth.profiles]
    if missing:
        raise DataError(f"predicted names missing from truth: "
                        f"{', '.join(missing[:5])}")
    truth_sub = _truth_subset(truth, pred.names())
    return pairwise_metrics(Clustering.from_labeling(pred, method=method),
                            truth_sub)

"""Command-line entry point.

Subcommands: ``stats``, ``synth``, ``run``, ``sweep``, ``evaluate``.  A run is
described by a key=value config file; every config key is also a flag of the
same name, and flags win over the file.  ``--seed``, ``--deterministic`` and
``--out-dir`` are accepted by every subcommand.

Failures print a single line ``error[<code>]: <message>`` to stderr and exit
nonzero.  No command modifies its input files.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import fields

from namegraph import __version__
from namegraph.corpus import (SynthConfig, corpus_stats, load_ground_truth,
                              load_publications, save_publications,
                              synth_generate)
from namegraph.errors import NamegraphError
from namegraph.graph import build_graph
from namegraph.cluster_eval import write_metrics_csv
from namegraph.experiment import (ExperimentConfig, evaluate_files,
                                  parse_value, read_config_file,
                                  run_experiment, run_sweep)

GLOBAL_KEYS = ("seed", "deterministic", "out_dir")


def _add_config_flags(parser: argparse.ArgumentParser, config_cls,
                      skip: tuple[str, ...] = ()) -> list[str]:
    """One string-valued flag per dataclass field, named exactly like the
    config key.  Values are parsed by the config file grammar, so the flag
    and file forms are interchangeable."""
    names = []
    for f in fields(config_cls):
        if f.name in skip:
            continue
        parser.add_argument(f"--{f.name}", metavar="V", default=None)
        names.append(f.name)
    return names


def _add_globals(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", metavar="N", default=None)
    parser.add_argument("--deterministic", metavar="BOOL", nargs="?",
                        const="true", default=None)
    parser.add_argument("--out-dir", dest="out_dir", metavar="DIR",
                        default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="namegraph",
        description="Author name disambiguation experiments on the "
                    "author-publication graph.")
    parser.add_argument("--version", action="version",
                        version=f"namegraph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_stats = sub.add_parser("stats",
                             help="descriptive statistics of a corpus")
    p_stats.add_argument("--publications", required=True, metavar="FILE")
    p_stats.add_argument("--labels", default=None, metavar="FILE")
    _add_globals(p_stats)

    p_synth = sub.add_parser("synth", help="generate a labeled synthetic "
                                           "corpus")
    _add_config_flags(p_synth, SynthConfig)
    _add_globals(p_synth)

    for name, help_text in (("run", "run one method at one threshold"),
                            ("sweep", "run one method over a threshold "
                                      "grid")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="FILE", default=None,
                       help="key=value config file; flags override it")
        _add_config_flags(p, ExperimentConfig, skip=GLOBAL_KEYS)
        _add_globals(p)

    p_eval = sub.add_parser("evaluate", help="score a clustering file "
                                             "against labels")
    p_eval.add_argument("--predictions", required=True, metavar="FILE")
    p_eval.add_argument("--truth", required=True, metavar="FILE")
    p_eval.add_argument("--method", default="", metavar="NAME")
    _add_globals(p_eval)
    return parser


# -- subcommands -------------------------------------------------------------


def _freq_csv(path: str, header: tuple[str, str], items) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for key, count in items:
            writer.writerow([key, count])


def cmd_stats(args) -> int:
    corpus = load_publications(args.publications)
    labeling = (load_ground_truth(args.labels, corpus)
                if args.labels else None)
    graph = build_graph(corpus)
    report = corpus_stats(corpus, labeling, graph)

    out_dir = args.out_dir or "stats"
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "stats.json"), "w",
              encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _freq_csv(os.path.join(out_dir, "year_hist.csv"), ("year", "count"),
              sorted(report.year_hist.items()))
    _freq_csv(os.path.join(out_dir, "venue_freq.csv"), ("venue", "count"),
              sorted(report.venue_freq.items()))
    _freq_csv(os.path.join(out_dir, "keyword_freq.csv"), ("keyword", "count"),
              sorted(report.keyword_freq.items()))
    _freq_csv(os.path.join(out_dir, "name_profile_hist.csv"),
              ("profiles_per_name", "n_names"),
              sorted(report.name_profile_hist.items()))
    _freq_csv(os.path.join(out_dir, "profile_pub_hist.csv"),
              ("papers_per_profile", "n_profiles"),
              sorted(report.profile_pub_hist.items()))
    print(f"stats: {report.n_publications} publications, "
          f"{report.distinct_names} names -> {out_dir}")
    return 0


def cmd_synth(args) -> int:
    defaults = SynthConfig()
    kwargs = {}
    for f in fields(SynthConfig):
        raw = getattr(args, f.name)
        if raw is None:
            continue
        kind = type(getattr(defaults, f.name))
        try:
            kwargs[f.name] = kind(raw)
        except ValueError as exc:
            raise NamegraphError(
                f"synth flag --{f.name}: cannot parse {raw!r} as "
                f"{kind.__name__}") from exc
    config = SynthConfig(**kwargs)
    try:
        seed = int(args.seed) if args.seed is not None else 0
    except ValueError as exc:
        raise NamegraphError(f"--seed: cannot parse {args.seed!r}") from exc
    corpus, labeling = synth_generate(config, seed)

    out_dir = args.out_dir or "synth"
    os.makedirs(out_dir, exist_ok=True)
    pubs_path = os.path.join(out_dir, "publications.json")
    labels_path = os.path.join(out_dir, "labels.json")
    save_publications(corpus, pubs_path)
    labeling.save(labels_path)
    print(f"synth: {len(corpus)} publications, "
          f"{labeling.n_profiles()} profiles -> {out_dir}")
    return 0


def _config_from_args(args) -> ExperimentConfig:
    overrides: dict = {}
    if args.config:
        overrides.update(read_config_file(args.config))
    for f in fields(ExperimentConfig):
        raw = getattr(args, f.name, None)
        if raw is not None:
            overrides[f.name] = parse_value(f.name, raw)
    return ExperimentConfig(**overrides)


def cmd_run(args) -> int:
    result = run_experiment(_config_from_args(args))
    m = result.metrics
    print(f"run: {result.config.method} theta={result.config.theta:g} "
          f"macro_f1={m.macro_f1:.4f} micro_f1={m.micro_f1:.4f} "
          f"-> {result.config.out_dir}")
    return 0


def cmd_sweep(args) -> int:
    result = run_sweep(_config_from_args(args))
    for row in result.rows:
        print(f"sweep: {row['method']} theta={row['theta']:g} "
              f"n_clusters={row['n_clusters']} "
              f"macro_f1={row['macro_f1']:.4f}")
    print(f"sweep: wrote {result.sweep_path}")
    return 0


def cmd_evaluate(args) -> int:
    metrics = evaluate_files(args.predictions, args.truth,
                             method=args.method)
    summary = {"macro_precision": round(metrics.macro_precision, 6),
               "macro_recall": round(metrics.macro_recall, 6),
               "macro_f1": round(metrics.macro_f1, 6),
               "micro_f1": round(metrics.micro_f1, 6),
               "n_names": len(metrics.per_name)}
    print(json.dumps(summary, sort_keys=True))
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        path = os.path.join(args.out_dir, "metrics.csv")
        write_metrics_csv({args.method or "evaluate": metrics}, path)
        print(f"evaluate: wrote {path}")
    return 0


COMMANDS = {"stats": cmd_stats, "synth": cmd_synth, "run": cmd_run,
            "sweep": cmd_sweep, "evaluate": cmd_evaluate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NamegraphError as exc:
        sys.stderr.write(f"error[{exc.code}]: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error[io]: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

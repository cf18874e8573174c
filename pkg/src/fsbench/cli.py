"""Command-line interface.

Subcommands:
  run       full benchmark from a CSV and a JSON config; writes report.json
            and report.md into the output directory
  vif       iterative VIF filter of a dataset, JSON result on stdout
  simulate  semi-synthetic label generation; writes labels CSV + manifest
  report    re-emit a saved report bundle as markdown or JSON

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import traceback

import numpy as np

from . import simulation
from .data import apply_preprocess, fit_preprocess, load_csv
from .engine import BenchmarkConfig, run_benchmark
from .errors import ConfigError, DataError, FsbenchError
from .prefilter import iterative_vif_filter
from .report import generate_report


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="fsbench",
                     description="Benchmark feature-selection methods on tabular data")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the full benchmark")
    p_run.add_argument("--data", required=True, help="CSV file with a header row")
    p_run.add_argument("--target", required=True, help="name of the outcome column")
    p_run.add_argument("--config", required=True, help="JSON benchmark config")
    p_run.add_argument("--out", default="fsbench_report", help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")

    p_vif = sub.add_parser("vif", help="iterative VIF prefilter")
    p_vif.add_argument("--data", required=True)
    p_vif.add_argument("--target", required=True)
    p_vif.add_argument("--threshold", type=float, default=5.0)
    p_vif.add_argument("--out", default=None, help="write JSON here instead of stdout")

    p_sim = sub.add_parser("simulate", help="generate semi-synthetic labels")
    p_sim.add_argument("--data", required=True)
    p_sim.add_argument("--target", required=True)
    p_sim.add_argument("--truth", required=True,
                       help="comma-separated feature indices or 'top:N'")
    p_sim.add_argument("--replicates", type=int, default=36)
    p_sim.add_argument("--noise-sd", type=float, default=1.0)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", default=".", help="output directory")

    p_rep = sub.add_parser("report", help="re-emit a saved bundle")
    p_rep.add_argument("--bundle", required=True, help="path to report.json")
    p_rep.add_argument("--format", required=True, choices=["md", "json"])
    p_rep.add_argument("--out", default=".", help="output directory")
    return parser


def _load_dataset(args):
    if not os.path.exists(args.data):
        raise DataError(f"data file not found: {args.data}")
    return load_csv(args.data, args.target)


def _cmd_run(args):
    data = _load_dataset(args)
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"config file not found: {args.config}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if args.seed is not None:
        raw["seed"] = args.seed
    config = BenchmarkConfig.from_dict(raw)
    bundle = run_benchmark(data, config)
    written = generate_report(bundle, "json", args.out)
    written += generate_report(bundle, "markdown", args.out)
    for path in written:
        print(path)
    return 0


def _cmd_vif(args):
    data = _load_dataset(args)
    state = fit_preprocess(data, np.arange(data.n))
    M = apply_preprocess(state, data, np.arange(data.n))
    report = iterative_vif_filter(M, threshold=args.threshold)
    payload = json.dumps(report.to_json_dict(names=list(data.feature_names)),
                         indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def _parse_truth(spec_text, p):
    if spec_text.startswith("top:"):
        return None, int(spec_text[4:])
    try:
        idx = tuple(int(tok) for tok in spec_text.split(",") if tok.strip() != "")
    except ValueError:
        raise _UsageError(f"cannot parse --truth {spec_text!r}") from None
    if not idx or not all(0 <= j < p for j in idx):
        raise DataError(f"truth indices out of range for p={p}")
    return idx, None


def _cmd_simulate(args):
    data = _load_dataset(args)
    state = fit_preprocess(data, np.arange(data.n))
    M = apply_preprocess(state, data, np.arange(data.n))
    truth, top = _parse_truth(args.truth, data.p)
    if truth is None:
        truth = simulation.truth_from_top_features(M, data.outcome, top)
    beta, intercept, flagged = simulation.fit_truth_model(M, data.outcome, truth)
    spec = simulation.SimulationSpec(truth=truth, beta=beta, intercept=intercept,
                                     noise_sd=args.noise_sd,
                                     replicates=args.replicates, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    labels_path = os.path.join(args.out, "simulated_labels.csv")
    with open(labels_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"rep_{r + 1}" for r in range(spec.replicates)])
        cols = [simulation.simulate_outcome(M, spec, r) for r in range(spec.replicates)]
        for row in np.column_stack(cols):
            writer.writerow([int(v) for v in row])
    manifest = spec.to_manifest()
    manifest["truth_names"] = [data.feature_names[j] for j in truth]
    manifest["truth_fit_flagged"] = bool(flagged)
    manifest_path = os.path.join(args.out, "simulation_manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(labels_path)
    print(manifest_path)
    return 0


def _cmd_report(args):
    from .engine import ReportBundle
    try:
        with open(args.bundle, encoding="utf-8") as fh:
            bundle = ReportBundle.from_json(fh.read())
    except FileNotFoundError:
        raise DataError(f"bundle not found: {args.bundle}") from None
    except (json.JSONDecodeError, ValueError, KeyError) as exc:
        raise DataError(f"not a valid report bundle: {exc}") from exc
    fmt = "markdown" if args.format == "md" else "json"
    for path in generate_report(bundle, fmt, args.out):
        print(path)
    return 0


_COMMANDS = {"run": _cmd_run, "vif": _cmd_vif, "simulate": _cmd_simulate,
             "report": _cmd_report}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except FsbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())

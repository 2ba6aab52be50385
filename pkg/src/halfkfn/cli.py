"""Command-line interface: detect, simulate, power, bench.

Exit status: 0 = no drift (or report written), 1 = drift detected,
2 = any configuration, parsing, or I/O error.  Reports go to stdout and to
--out; diagnostics go to stderr only.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import feature_space, harness, plots
from .errors import HalfKfnError
from .harness import (ALL_METHODS, ExperimentConfig, PowerReport,
                      run_power_study, run_timing_benchmark, train_study_reducer)
from .inference import BootstrapConfig, PermutationConfig, bootstrap_test, permutation_test
from .half_kfn import PooledSample
from .baselines import STATISTIC_PRODUCERS, permutation_test_generic

EXIT_NO_DRIFT = 0
EXIT_DRIFT = 1
EXIT_ERROR = 2

DEFAULT_SWEEP_SIZES = (100, 200, 500, 1000)
DEFAULT_SWEEP_DELTAS = (0.0, 0.01, 0.05)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="halfkfn",
                                     description="Covariate drift detection with Half-KFN")
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="run one two-sample drift test on softmax CSVs")
    detect.add_argument("--source", required=True)
    detect.add_argument("--target", required=True)
    detect.add_argument("--method", default="half_kfn_bootstrap", choices=ALL_METHODS)
    detect.add_argument("--k", type=int, default=1)
    detect.add_argument("--perms", type=int, default=100, help="permutation count P")
    detect.add_argument("--boots", type=int, default=10, help="bootstrap resample count M")
    detect.add_argument("--alpha", type=float, default=0.05)
    detect.add_argument("--noise", type=float, default=1e-8, help="tie-break noise sd")
    detect.add_argument("--seed", type=int, default=0)
    detect.add_argument("--n1", type=int, default=None,
                        help="bootstrap resample size from --source (default: file size)")
    detect.add_argument("--n2", type=int, default=None,
                        help="bootstrap resample size from --target (default: file size)")
    detect.add_argument("--out", default=None, help="path for the TestReport JSON")

    simulate = sub.add_parser("simulate", help="generate reduced source/target CSVs")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--n1", type=int, required=True)
    simulate.add_argument("--n2", type=int, required=True)
    simulate.add_argument("--delta", type=float, default=0.0)
    simulate.add_argument("--sigma-gn", type=float, default=20.0)
    simulate.add_argument("--out", required=True, help="output directory")

    for name, help_text in (("power", "power / Type-I-error study"),
                            ("bench", "runtime benchmark")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", default=None, help="flat key=value config file")
        # None defaults let config-file values take effect; the ExperimentConfig
        # defaults apply when neither a flag nor a config key is given
        cmd.add_argument("--n1", type=int, default=None)
        cmd.add_argument("--n2", type=int, default=None)
        cmd.add_argument("--delta", type=float, default=None)
        cmd.add_argument("--sigma-gn", type=float, default=None)
        cmd.add_argument("--runs", type=int, default=None)
        cmd.add_argument("--alpha", type=float, default=None)
        cmd.add_argument("--k", type=int, default=None)
        cmd.add_argument("--perms", type=int, default=None)
        cmd.add_argument("--boots", type=int, default=None)
        cmd.add_argument("--noise", type=float, default=None)
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--method", action="append", default=None,
                         help="repeatable; defaults to all methods (power) or Half-KFN (bench)")
        cmd.add_argument("--out", default=None, help="output directory for CSV/JSON/figures")
    return parser


def cmd_detect(args) -> int:
    source = feature_space.load_softmax_vectors(args.source, origin="source")
    target = feature_space.load_softmax_vectors(args.target, origin="target")
    if args.method == "half_kfn_permutation":
        cfg = PermutationConfig(P=args.perms, sigma_noise=args.noise,
                                alpha=args.alpha, seed=args.seed)
        report = permutation_test(source, target, args.k, cfg)
    elif args.method == "half_kfn_bootstrap":
        cfg = BootstrapConfig(M=args.boots, k=1, alpha=args.alpha, seed=args.seed,
                              resample_n1=args.n1, resample_n2=args.n2)
        report = bootstrap_test(source, target, cfg)
    else:
        cfg = PermutationConfig(P=args.perms, sigma_noise=args.noise,
                                alpha=args.alpha, seed=args.seed)
        pool = PooledSample.from_sample_sets(source, target)
        report = permutation_test_generic(pool, STATISTIC_PRODUCERS[args.method],
                                          cfg, method=args.method)
    payload = report.to_json(indent=2)
    print(payload)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    return EXIT_DRIFT if report.decision == "drift" else EXIT_NO_DRIFT


def cmd_simulate(args) -> int:
    if args.n1 < 1 or args.n2 < 1:
        raise HalfKfnError("n1 and n2 must be positive")
    os.makedirs(args.out, exist_ok=True)
    cfg = ExperimentConfig(n1=args.n1, n2=args.n2, delta=args.delta,
                           sigma_gn=args.sigma_gn, master_seed=args.seed, runs=1)
    model = train_study_reducer(cfg)
    rng = np.random.default_rng(args.seed)
    split_seed, drift_seed = (int(s) for s in rng.integers(0, 2**63, size=2))
    control, candidate = harness.generate_test_split(split_seed, args.n1, args.n2)
    if args.delta > 0:
        candidate = harness.inject_gaussian_drift(candidate, args.delta,
                                                  args.sigma_gn, drift_seed)
    source = feature_space.reduce(model, control, origin="source")
    target = feature_space.reduce(model, candidate, origin="target")
    feature_space.save_softmax_vectors(os.path.join(args.out, "source.csv"), source)
    feature_space.save_softmax_vectors(os.path.join(args.out, "target.csv"), target)
    return EXIT_NO_DRIFT


def _parse_config_file(path) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise HalfKfnError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _split_values(raw, cast):
    return tuple(cast(part) for part in str(raw).split(",") if part != "")


def _study_cells(args, bench: bool):
    """Resolve (sizes, deltas, methods, shared config fields) for power/bench."""
    file_cfg = _parse_config_file(args.config) if args.config else {}

    def pick(key, flag_value, cast, default):
        if flag_value is not None:
            return (cast(flag_value),) if not isinstance(flag_value, tuple) else flag_value
        if key in file_cfg:
            return _split_values(file_cfg[key], cast)
        return default

    sizes = pick("n1", args.n1, int, DEFAULT_SWEEP_SIZES)
    deltas = pick("delta", args.delta, float, (0.0,) if bench else DEFAULT_SWEEP_DELTAS)
    if args.method:
        methods = tuple(args.method)
    elif "methods" in file_cfg:
        methods = _split_values(file_cfg["methods"], str)
    else:
        methods = harness.HALF_KFN_METHODS if bench else ALL_METHODS

    def scalar(key, flag_value, cast, default):
        if flag_value is not None:
            return cast(flag_value)
        if key in file_cfg:
            return cast(file_cfg[key])
        return default

    defaults = ExperimentConfig()
    shared = {
        "sigma_gn": scalar("sigma_gn", args.sigma_gn, float, defaults.sigma_gn),
        "runs": scalar("runs", args.runs, int, defaults.runs),
        "alpha": scalar("alpha", args.alpha, float, defaults.alpha),
        "k": scalar("k", args.k, int, defaults.k),
        "P": scalar("perms", args.perms, int, defaults.P),
        "M": scalar("boots", args.boots, int, defaults.M),
        "sigma_noise": scalar("noise", args.noise, float, defaults.sigma_noise),
        "master_seed": scalar("seed", args.seed, int, defaults.master_seed),
        # reducer budget; config-file only, mainly for quick studies
        "train_learning_rate": scalar("train_learning_rate", None, float,
                                      defaults.train_learning_rate),
        "train_iterations": scalar("train_iterations", None, int,
                                   defaults.train_iterations),
    }
    return sizes, deltas, methods, shared


def _run_study(args, bench: bool) -> int:
    sizes, deltas, methods, shared = _study_cells(args, bench)
    runner = run_timing_benchmark if bench else run_power_study
    model = None
    rows = []
    metadata = {}
    for n1 in sizes:
        for delta in deltas:
            cfg = ExperimentConfig(n1=n1, n2=n1, delta=delta, methods=methods, **shared)
            if model is None:
                model = train_study_reducer(cfg)
            report = runner(cfg, model=model)
            rows.extend(report.rows)
            for key, value in report.metadata.items():
                if key == "permutation_over_bootstrap_time":
                    metadata.setdefault("permutation_over_bootstrap_time", {})[str(n1)] = value
    metadata["note"] = "timings measured under this harness's P/M defaults"
    combined = PowerReport(rows=tuple(rows), metadata=metadata)

    print(combined.to_csv(), end="")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        stem = "bench" if bench else "power"
        with open(os.path.join(args.out, f"{stem}.csv"), "w") as fh:
            fh.write(combined.to_csv())
        with open(os.path.join(args.out, f"{stem}.json"), "w") as fh:
            fh.write(combined.to_json(indent=2) + "\n")
        plots.save_loss_curve(model, os.path.join(args.out, "loss.png"))
        plots.save_power_figure(combined.rows, os.path.join(args.out, f"{stem}_power.png"))
        plots.save_timing_figure(combined.rows, os.path.join(args.out, f"{stem}_timing.png"))
    return EXIT_NO_DRIFT


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else 0
    try:
        if args.command == "detect":
            return cmd_detect(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "power":
            return _run_study(args, bench=False)
        if args.command == "bench":
            return _run_study(args, bench=True)
        raise HalfKfnError(f"unknown command {args.command!r}")
    except (HalfKfnError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

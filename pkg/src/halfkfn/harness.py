"""Simulated-data experiment harness: data generation, drift injection,
power / Type-I-error studies, and runtime benchmarking.

The simulated pipeline draws 5-D uniform blocks for three classes, reduces
them with a softmax-regression model trained once per study, and evaluates
every configured detection method over independently seeded replications.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np

from . import feature_space
from .errors import ConfigError, InvalidInputError
from .feature_space import ReducerModel, train_reducer
from .half_kfn import PooledSample
from .inference import (BootstrapConfig, PermutationConfig, TestReport,
                        bootstrap_test, permutation_test)
from .baselines import STATISTIC_PRODUCERS, permutation_test_generic

CLASS_SUPPORTS = ((1.0, 2.0), (5.0, 6.0), (10.0, 11.0))
N_FEATURES = 5
TRAINING_SIZE_PER_CLASS = 2000
TEST_POOL_BUDGET = 3000

# The bootstrap z-test standardizes the mean of M resampled statistics as if
# they were independent draws; resampling from reference pools this many times
# larger than the nominal test size keeps the resamples' correlation small
# enough for that to hold.  Resampling a set of exactly the nominal size from
# itself does not: the statistic is dominated by a few extreme points whose
# set membership is frozen in the data, and the z-test then over-rejects.
BOOTSTRAP_POOL_FACTOR = 30

HALF_KFN_METHODS = ("half_kfn_permutation", "half_kfn_bootstrap")
BASELINE_METHODS = tuple(STATISTIC_PRODUCERS)
ALL_METHODS = HALF_KFN_METHODS + BASELINE_METHODS

CSV_COLUMNS = ["method", "delta", "n1", "n2", "rejection_rate", "mean_p", "sd_p",
               "mean_elapsed_s"]


# Study defaults: the permutation test's sensitivity to sparse drift depends
# on how saturated the reducer's softmax outputs are.  Large learning rates
# drive the three simulated classes to near-one-hot outputs, collapsing each
# class's farthest-neighbor structure onto a single extreme point; lr=0.001
# keeps the clusters spread while still classifying the blocks perfectly, and
# k=2 farthest neighbors per query sharpens the null tail without diluting
# the drifted-point signal at small drift proportions.


@dataclass(frozen=True)
class ExperimentConfig:
    n1: int = 500
    n2: int = 500
    delta: float = 0.0
    sigma_gn: float = 20.0
    methods: tuple = HALF_KFN_METHODS
    runs: int = 100
    alpha: float = 0.05
    master_seed: int = 0
    k: int = 2
    P: int = 100
    M: int = 10
    sigma_noise: float = 1e-8
    train_learning_rate: float = 0.001
    train_iterations: int = 20_000

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError("delta must lie in [0, 1]")
        if self.n1 < 1 or self.n2 < 1:
            raise ConfigError("n1 and n2 must be positive")
        for m in self.methods:
            if m not in ALL_METHODS:
                raise ConfigError(f"unknown method {m!r}; known: {ALL_METHODS}")


@dataclass(frozen=True)
class PowerReport:
    rows: tuple  # of dicts with CSV_COLUMNS keys
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({c: row[c] for c in CSV_COLUMNS})
        return buf.getvalue()

    def to_json(self, **kwargs) -> str:
        return json.dumps({"rows": list(self.rows), "metadata": self.metadata}, **kwargs)

    def row_for(self, method: str) -> dict:
        for row in self.rows:
            if row["method"] == method:
                return row
        raise KeyError(method)


def generate_simulated_training(seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Three 5-D uniform blocks of 2000 samples each, labels 0/1/2."""
    rng = np.random.default_rng(seed)
    blocks = [rng.uniform(lo, hi, size=(TRAINING_SIZE_PER_CLASS, N_FEATURES))
              for lo, hi in CLASS_SUPPORTS]
    features = np.vstack(blocks)
    labels = np.repeat(np.arange(len(CLASS_SUPPORTS)), TRAINING_SIZE_PER_CLASS)
    return features, labels


def _draw_mixture(rng, count: int) -> np.ndarray:
    """Undrifted draw from the uniform class mixture of the test distribution."""
    classes = rng.integers(0, len(CLASS_SUPPORTS), count)
    lows = np.array([lo for lo, _ in CLASS_SUPPORTS])[classes]
    return lows[:, None] + rng.random((count, N_FEATURES))


def generate_test_split(seed: int, n1: int, n2: int) -> tuple[np.ndarray, np.ndarray]:
    """Two undrifted draws from the symmetric class mixture (control, candidate)."""
    if n1 < 1 or n2 < 1:
        raise InvalidInputError("n1 and n2 must be positive")
    if n1 + n2 > TEST_POOL_BUDGET:
        warnings.warn(f"n1+n2={n1 + n2} exceeds the {TEST_POOL_BUDGET}-sample test budget")
    rng = np.random.default_rng(seed)
    return _draw_mixture(rng, n1), _draw_mixture(rng, n2)


def generate_bootstrap_pools(seed: int, n1: int, n2: int,
                             factor: int = BOOTSTRAP_POOL_FACTOR
                             ) -> tuple[np.ndarray, np.ndarray]:
    """Oversampled control/candidate pools backing the bootstrap resamples.

    The pools stand in for the source and target populations; resamples of
    the nominal sizes (n1, n2) are drawn from them with replacement.
    """
    if n1 < 1 or n2 < 1:
        raise InvalidInputError("n1 and n2 must be positive")
    if factor < 1:
        raise InvalidInputError("pool factor must be >= 1")
    rng = np.random.default_rng(seed)
    return _draw_mixture(rng, factor * n1), _draw_mixture(rng, factor * n2)


def inject_gaussian_drift(candidate: np.ndarray, delta: float, sigma_gn: float,
                          seed: int) -> np.ndarray:
    """Add N(0, sigma_gn^2) noise to round(delta * n2) uniformly chosen rows."""
    if not 0.0 <= delta <= 1.0:
        raise InvalidInputError("delta must lie in [0, 1]")
    if sigma_gn <= 0:
        raise InvalidInputError("sigma_gn must be positive")
    candidate = np.asarray(candidate, dtype=np.float64)
    n2 = candidate.shape[0]
    count = round(delta * n2)  # round-half-to-even
    out = candidate.copy()
    if count == 0:
        return out
    rng = np.random.default_rng(seed)
    rows = rng.choice(n2, size=count, replace=False)
    out[rows] += rng.normal(0.0, sigma_gn, size=(count, candidate.shape[1]))
    return out


def train_study_reducer(cfg: ExperimentConfig) -> ReducerModel:
    """One reducer per study, trained on the fixed simulated training set."""
    features, labels = generate_simulated_training(seed=cfg.master_seed)
    return train_reducer(features, labels, learning_rate=cfg.train_learning_rate,
                         iterations=cfg.train_iterations, seed=cfg.master_seed)


def run_method(name: str, source, target, cfg: ExperimentConfig, seed: int) -> TestReport:
    if name == "half_kfn_permutation":
        pcfg = PermutationConfig(P=cfg.P, sigma_noise=cfg.sigma_noise,
                                 alpha=cfg.alpha, seed=seed)
        return permutation_test(source, target, cfg.k, pcfg)
    if name == "half_kfn_bootstrap":
        bcfg = BootstrapConfig(M=cfg.M, k=1, alpha=cfg.alpha, seed=seed,
                               resample_n1=cfg.n1, resample_n2=cfg.n2)
        return bootstrap_test(source, target, bcfg)
    if name in STATISTIC_PRODUCERS:
        pcfg = PermutationConfig(P=cfg.P, sigma_noise=cfg.sigma_noise,
                                 alpha=cfg.alpha, seed=seed)
        pool = PooledSample.from_sample_sets(source, target)
        return permutation_test_generic(pool, STATISTIC_PRODUCERS[name], pcfg, method=name)
    raise ConfigError(f"unknown method {name!r}")


def _derive_seeds(cfg: ExperimentConfig):
    rng = np.random.default_rng(cfg.master_seed)
    split_seeds = rng.integers(0, 2**63, size=cfg.runs)
    drift_seeds = rng.integers(0, 2**63, size=cfg.runs)
    pool_seeds = rng.integers(0, 2**63, size=cfg.runs)
    pool_drift_seeds = rng.integers(0, 2**63, size=cfg.runs)
    method_seeds = {m: rng.integers(0, 2**63, size=cfg.runs) for m in cfg.methods}
    return split_seeds, drift_seeds, pool_seeds, pool_drift_seeds, method_seeds


def run_power_study(cfg: ExperimentConfig, model: ReducerModel | None = None) -> PowerReport:
    """Replicate generation + detection `runs` times; aggregate per method.

    A pre-trained reducer may be passed to share training across studies; by
    default one is trained from the study's master seed.
    """
    if not cfg.methods:
        raise ConfigError("methods must be nonempty")
    if model is None:
        model = train_study_reducer(cfg)

    split_seeds, drift_seeds, pool_seeds, pool_drift_seeds, method_seeds = \
        _derive_seeds(cfg)
    needs_pools = "half_kfn_bootstrap" in cfg.methods
    results = {m: {"p": [], "reject": [], "elapsed": []} for m in cfg.methods}
    for r in range(cfg.runs):
        control, candidate = generate_test_split(int(split_seeds[r]), cfg.n1, cfg.n2)
        drifted = inject_gaussian_drift(candidate, cfg.delta, cfg.sigma_gn,
                                        int(drift_seeds[r]))
        source = feature_space.reduce(model, control, origin="source")
        target = feature_space.reduce(model, drifted, origin="target")
        if needs_pools:
            ctrl_pool, cand_pool = generate_bootstrap_pools(
                int(pool_seeds[r]), cfg.n1, cfg.n2)
            cand_pool = inject_gaussian_drift(cand_pool, cfg.delta, cfg.sigma_gn,
                                              int(pool_drift_seeds[r]))
            pool_source = feature_space.reduce(model, ctrl_pool, origin="source")
            pool_target = feature_space.reduce(model, cand_pool, origin="target")
        for m in cfg.methods:
            if m == "half_kfn_bootstrap":
                report = run_method(m, pool_source, pool_target, cfg,
                                    int(method_seeds[m][r]))
            else:
                report = run_method(m, source, target, cfg, int(method_seeds[m][r]))
            results[m]["p"].append(report.p_value)
            results[m]["reject"].append(report.decision == "drift")
            results[m]["elapsed"].append(report.elapsed_s)

    rows = []
    for m in cfg.methods:
        ps = np.array(results[m]["p"])
        rows.append({
            "method": m,
            "delta": cfg.delta,
            "n1": cfg.n1,
            "n2": cfg.n2,
            "rejection_rate": float(np.mean(results[m]["reject"])),
            "mean_p": float(ps.mean()),
            "sd_p": float(ps.std()),
            "mean_elapsed_s": float(np.mean(results[m]["elapsed"])),
        })
    metadata = {"config": asdict(cfg),
                "note": "timings measured under this harness's P/M defaults"}
    return PowerReport(rows=tuple(rows), metadata=metadata)


def run_timing_benchmark(cfg: ExperimentConfig, model: ReducerModel | None = None) -> PowerReport:
    """Power study with timing focus; adds the permutation/bootstrap time ratio."""
    report = run_power_study(cfg, model=model)
    metadata = dict(report.metadata)
    try:
        perm = report.row_for("half_kfn_permutation")["mean_elapsed_s"]
        boot = report.row_for("half_kfn_bootstrap")["mean_elapsed_s"]
        metadata["permutation_over_bootstrap_time"] = perm / boot
    except KeyError:
        pass
    return PowerReport(rows=report.rows, metadata=metadata)

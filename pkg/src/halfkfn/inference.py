"""Hypothesis tests on top of the Half-KFN statistic.

Two engines: a permutation test over random re-splits of the pooled data, and
a bootstrap z-test that standardizes the resampled statistic mean with
asymptotic null moments estimated from per-class max-coordinate projections
(k = 1 only).
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass, asdict, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import norm

from .errors import (DegenerateClassError, DegenerateVarianceError,
                     InvalidInputError, UnsupportedSizeError)
from .feature_space import SampleSet
from .half_kfn import PooledSample, half_kfn_fn_form


@dataclass(frozen=True)
class PermutationConfig:
    P: int = 100
    sigma_noise: float = 1e-8
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.P < 1:
            raise InvalidInputError("P must be >= 1")
        if self.sigma_noise <= 0:
            raise InvalidInputError("sigma_noise must be positive")
        if not 0 < self.alpha < 1:
            raise InvalidInputError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class BootstrapConfig:
    """Settings for the bootstrap z-test.

    resample_n1 / resample_n2 are the per-resample sample sizes; by default
    each resample is as large as the corresponding input set.  The z-test
    treats the M resampled statistics as independent draws, so when the
    effective test size is fixed the input sets should be substantially
    larger than the resample sizes.
    """

    M: int = 10
    k: int = 1
    alpha: float = 0.05
    seed: int = 0
    two_sided: bool = True
    resample_n1: Optional[int] = None
    resample_n2: Optional[int] = None

    def __post_init__(self):
        if self.M < 2:
            raise InvalidInputError("M must be >= 2")
        if self.k != 1:
            raise InvalidInputError("bootstrap test supports k=1 only")
        if not 0 < self.alpha < 1:
            raise InvalidInputError("alpha must lie in (0, 1)")
        for size in (self.resample_n1, self.resample_n2):
            if size is not None and size < 1:
                raise InvalidInputError("resample sizes must be positive")


@dataclass(frozen=True)
class MomentEstimate:
    p1: float
    p2: float
    mu: float
    sigma2: float


@dataclass(frozen=True)
class TestReport:
    method: str
    statistic: float
    p_value: float
    z_score: Optional[float]
    decision: str  # "drift" or "no-drift"
    elapsed_s: float
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def permutation_engine(pool: PooledSample, statistic: Callable[[PooledSample], float],
                       cfg: PermutationConfig, orientation: str = "larger-is-drift",
                       method: str = "permutation", extra_config: dict | None = None) -> TestReport:
    """Shared permutation engine: re-split the pool P times, compare noised statistics.

    Rejection direction follows `orientation`; the Half-KFN and most baseline
    statistics grow under drift, the FR cross-edge count shrinks.
    """
    if orientation not in ("larger-is-drift", "smaller-is-drift"):
        raise InvalidInputError(f"unknown orientation {orientation!r}")
    rng = np.random.default_rng(cfg.seed)
    start = time.perf_counter()
    t_obs = statistic(pool)
    T = t_obs + rng.normal(0.0, cfg.sigma_noise)
    extreme = 0
    for _ in range(cfg.P):
        perm = rng.permutation(pool.n)
        pool_t = PooledSample(vectors=pool.vectors[perm], n1=pool.n1, n2=pool.n2)
        T_t = statistic(pool_t) + rng.normal(0.0, cfg.sigma_noise)
        if (T <= T_t) if orientation == "larger-is-drift" else (T >= T_t):
            extreme += 1
    p = extreme / cfg.P
    elapsed = time.perf_counter() - start
    return TestReport(
        method=method,
        statistic=float(t_obs),
        p_value=p,
        z_score=None,
        decision="drift" if p < cfg.alpha else "no-drift",
        elapsed_s=elapsed,
        config={**(extra_config or {}), **asdict(cfg)},
    )


def permutation_test(source: SampleSet, target: SampleSet, k: int,
                     cfg: PermutationConfig,
                     method: str = "half_kfn_permutation") -> TestReport:
    """Permutation test of the Half-KFN statistic."""
    pool = PooledSample.from_sample_sets(source, target)
    return permutation_engine(
        pool, lambda p: half_kfn_fn_form(p, k).t, cfg,
        orientation="larger-is-drift", method=method, extra_config={"k": k},
    )


def estimate_p1_p2_k1(pool: PooledSample, drop_singletons: bool = False) -> tuple[float, float]:
    """Estimate the mutual- and shared-farthest-neighbor probabilities at k=1.

    Works on the per-class max-coordinate projection: with midpoint
    (min+max)/2, members at or left of the midpoint share the minimum as
    farthest neighbor, members right of it share the maximum.
    """
    classes = pool.classes
    n1 = pool.n1
    p1 = 0.0
    p2 = 0.0
    for label in np.unique(classes):
        members = np.flatnonzero(classes == label)
        n_l = members.size
        if n_l < 2:
            if drop_singletons:
                warnings.warn(
                    f"class {int(label)} has a single member; dropped from p1/p2 estimation"
                )
                continue
            raise DegenerateClassError(
                f"class {int(label)} has a single member", class_label=int(label)
            )
        values = pool.vectors[members].max(axis=1)
        mid = (values.min() + values.max()) / 2.0
        a = int((values <= mid).sum())  # midpoint counts left
        b = n_l - a
        n1_l = int((members < n1).sum())
        pairs = math.comb(n_l, 2)
        weight = (n1_l / n1) ** 2
        p1 += weight / pairs
        p2 += weight * (math.comb(a, 2) + math.comb(b, 2)) / pairs
    return p1, p2


def asymptotic_moments(n1: int, n2: int, p1: float, p2: float) -> MomentEstimate:
    """Large-sample null mean and variance of the k=1 statistic."""
    if n1 < 1 or n2 < 1:
        raise InvalidInputError("n1 and n2 must be positive")
    n = n1 + n2
    lam1 = n1 / n
    lam2 = n2 / n
    sigma2 = lam2 * lam2 * p1 + lam1 * lam2 * p2
    return MomentEstimate(p1=p1, p2=p2, mu=lam2, sigma2=sigma2)


def finite_sample_moments(n1: int, n2: int, k: int, p1_rs, p2_rs) -> tuple[float, float]:
    """Exact null mean and variance of the statistic over uniform relabelings.

    p1_rs / p2_rs are k x k matrices of the rank-(r, s) mutual- and
    shared-farthest-neighbor probabilities of the fixed pool; only their
    averages enter.  Requires every neighbor list to be full (class
    populations > k).
    """
    n = n1 + n2
    if n < 4:
        raise UnsupportedSizeError(f"need n >= 4, got n={n}")
    p1_rs = np.asarray(p1_rs, dtype=np.float64)
    p2_rs = np.asarray(p2_rs, dtype=np.float64)
    if p1_rs.shape != (k, k) or p2_rs.shape != (k, k):
        raise InvalidInputError(f"probability matrices must be {k}x{k}")
    a1 = float(p1_rs.mean())
    a2 = float(p2_rs.mean())

    mean = n2 / (n - 1)
    # Decomposition over label assignments with the neighbor structure fixed:
    # mutual and one-way neighbor events contribute nothing (they would force
    # one point to be both source and target), leaving the shared-neighbor and
    # all-distinct configurations plus the diagonal terms.
    coef_p1 = (n1 - 1) * n2 * (n2 - 1) / (n1 * (n - 2) * (n - 3))
    coef_p2 = (n1 - 1) * (n1 - 2) * n2 / (n1 * (n - 2) * (n - 3))
    residual = (
        n2 / (n1 * k * (n - 1))
        + (k - 1) * n2 * (n2 - 1) / (n1 * k * (n - 1) * (n - 2))
        + (n1 - 1) * n2 * (n2 - 1) / (n1 * (n - 1) * (n - 2))
        - (n2 / (n - 1)) ** 2
    )
    variance = coef_p1 * a1 + coef_p2 * a2 + residual
    return mean, variance


def bootstrap_test(source: SampleSet, target: SampleSet, cfg: BootstrapConfig,
                   method: str = "half_kfn_bootstrap") -> TestReport:
    """Bootstrap z-test: average the statistic over M with-replacement resamples.

    Null moments come from the original pooled data, not per resample.
    """
    pool = PooledSample.from_sample_sets(source, target)
    n1 = cfg.resample_n1 if cfg.resample_n1 is not None else pool.n1
    n2 = cfg.resample_n2 if cfg.resample_n2 is not None else pool.n2

    rng = np.random.default_rng(cfg.seed)
    start = time.perf_counter()
    p1, p2 = estimate_p1_p2_k1(pool, drop_singletons=True)
    moments = asymptotic_moments(n1, n2, p1, p2)
    if moments.sigma2 <= 0.0:
        raise DegenerateVarianceError("estimated null variance is zero; cannot standardize")

    src = source.vectors
    tgt = target.vectors
    stats = np.empty(cfg.M)
    for m in range(cfg.M):
        si = rng.integers(0, len(src), n1)
        ti = rng.integers(0, len(tgt), n2)
        pool_m = PooledSample(vectors=np.vstack([src[si], tgt[ti]]), n1=n1, n2=n2)
        stats[m] = half_kfn_fn_form(pool_m, cfg.k).t
    t_bar = float(stats.mean())
    z = (t_bar - moments.mu) / math.sqrt(moments.sigma2 / cfg.M)
    upper_tail = float(norm.sf(abs(z)))
    if cfg.two_sided:
        p = min(1.0, 2.0 * upper_tail)
        drift = upper_tail < cfg.alpha / 2
    else:
        p = float(norm.sf(z))
        drift = p < cfg.alpha
    elapsed = time.perf_counter() - start
    return TestReport(
        method=method,
        statistic=t_bar,
        p_value=p,
        z_score=float(z),
        decision="drift" if drift else "no-drift",
        elapsed_s=elapsed,
        config=asdict(cfg),
    )

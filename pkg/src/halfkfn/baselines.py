"""Reference two-sample tests: Schilling-style KNN, Gaussian-kernel MMD,
the energy statistic, and the Friedman-Rafsky MST cross-edge count.

All are evaluated through the shared permutation engine; each statistic is
kept simple enough to be checked exactly against a brute-force oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DegenerateBandwidthError, InvalidInputError
from .half_kfn import PooledSample
from .inference import PermutationConfig, TestReport, permutation_engine

ORIENTATIONS = {
    "knn": "larger-is-drift",
    "mmd": "larger-is-drift",
    "energy": "larger-is-drift",
    "fr": "smaller-is-drift",
}


@dataclass(frozen=True)
class BaselineStatistic:
    name: str
    value: float
    orientation: str

    def __post_init__(self):
        if ORIENTATIONS.get(self.name) != self.orientation:
            raise InvalidInputError(
                f"statistic {self.name!r} must have orientation {ORIENTATIONS.get(self.name)!r}"
            )


def _distance_matrix(pool: PooledSample) -> np.ndarray:
    X = pool.vectors
    sq = (X * X).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


def knn_statistic(pool: PooledSample, k: int) -> BaselineStatistic:
    """Fraction of k-nearest-neighbor links staying within their own sample set."""
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    n = pool.n
    if n <= k:
        raise InvalidInputError(f"need n > k, got n={n}, k={k}")
    D = _distance_matrix(pool)
    same_set = np.zeros(n, dtype=bool)
    same_set[pool.n1:] = True
    hits = 0
    idx = np.arange(n)
    for i in range(n):
        cand = idx[idx != i]
        d = D[i, cand]
        order = np.lexsort((cand, d))[:k]  # nearest first, ties to smaller index
        hits += int((same_set[cand[order]] == same_set[i]).sum())
    return BaselineStatistic(name="knn", value=hits / (n * k),
                             orientation="larger-is-drift")


def mmd_statistic(pool: PooledSample,
                  bandwidth: Union[str, float] = "median_heuristic") -> BaselineStatistic:
    """Unbiased squared MMD with a Gaussian kernel (diagonal excluded)."""
    n1, n2 = pool.n1, pool.n2
    if n1 < 2 or n2 < 2:
        raise InvalidInputError("unbiased MMD needs n1, n2 >= 2")
    D = _distance_matrix(pool)
    if bandwidth == "median_heuristic":
        iu = np.triu_indices(pool.n, k=1)
        sigma = float(np.median(D[iu]))
        if sigma == 0.0:
            raise DegenerateBandwidthError("median pairwise distance is zero")
    else:
        sigma = float(bandwidth)
        if sigma <= 0:
            raise InvalidInputError("fixed bandwidth must be positive")
    K = np.exp(-(D * D) / (2.0 * sigma * sigma))
    Kxx = K[:n1, :n1]
    Kyy = K[n1:, n1:]
    Kxy = K[:n1, n1:]
    term_x = (Kxx.sum() - np.trace(Kxx)) / (n1 * (n1 - 1))
    term_y = (Kyy.sum() - np.trace(Kyy)) / (n2 * (n2 - 1))
    value = term_x + term_y - 2.0 * Kxy.sum() / (n1 * n2)
    return BaselineStatistic(name="mmd", value=float(value),
                             orientation="larger-is-drift")


def energy_statistic(pool: PooledSample) -> BaselineStatistic:
    """Szekely-Rizzo e-statistic with the n1*n2/n scaling."""
    n1, n2 = pool.n1, pool.n2
    D = _distance_matrix(pool)
    cross = D[:n1, n1:].mean()
    within_x = D[:n1, :n1].mean()
    within_y = D[n1:, n1:].mean()
    value = (n1 * n2 / (n1 + n2)) * (2.0 * cross - within_x - within_y)
    return BaselineStatistic(name="energy", value=float(value),
                             orientation="larger-is-drift")


def _mst_parents(D: np.ndarray) -> list[tuple[int, int]]:
    """Prim's algorithm; ties go to the smallest candidate index."""
    n = D.shape[0]
    visited = np.zeros(n, dtype=bool)
    visited[0] = True
    best = D[0].copy()
    parent = np.zeros(n, dtype=np.int64)
    best[0] = np.inf
    edges = []
    for _ in range(n - 1):
        j = int(np.argmin(best))  # first minimum -> smallest index
        edges.append((int(parent[j]), j))
        visited[j] = True
        best[j] = np.inf
        closer = ~visited & (D[j] < best)
        best[closer] = D[j, closer]
        parent[closer] = j
    return edges


def fr_statistic(pool: PooledSample) -> BaselineStatistic:
    """Friedman-Rafsky: number of MST edges joining the two sample sets."""
    if pool.n < 2:
        raise InvalidInputError("need at least 2 points")
    D = _distance_matrix(pool)
    if not np.isfinite(D).all():
        raise InvalidInputError("non-finite distances")
    is_target = np.zeros(pool.n, dtype=bool)
    is_target[pool.n1:] = True
    cross = sum(1 for a, b in _mst_parents(D) if is_target[a] != is_target[b])
    return BaselineStatistic(name="fr", value=float(cross),
                             orientation="smaller-is-drift")


STATISTIC_PRODUCERS: dict[str, Callable[[PooledSample], BaselineStatistic]] = {
    "knn": lambda pool: knn_statistic(pool, k=1),
    "mmd": mmd_statistic,
    "energy": energy_statistic,
    "fr": fr_statistic,
}


def permutation_test_generic(pool: PooledSample,
                             statistic: Callable[[PooledSample], BaselineStatistic],
                             cfg: PermutationConfig,
                             method: str | None = None) -> TestReport:
    """Run any baseline statistic through the shared permutation engine."""
    obs = statistic(pool)
    return permutation_engine(
        pool, lambda p: statistic(p).value, cfg,
        orientation=obs.orientation,
        method=method or obs.name,
        extra_config={"statistic": obs.name},
    )

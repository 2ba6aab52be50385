"""The Half-KFN statistic: intra-class farthest neighbors over a pooled sample.

Two independent computation routes are provided, one via the full indicator
matrix (source rows x pooled columns, masked against target columns) and one
via per-query farthest-neighbor lists.  Both must agree exactly; the tests
exploit that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scipy.spatial import ConvexHull, QhullError

from .errors import InvalidInputError
from .feature_space import SampleSet, argmax_classes

# Minimum class size for the k=1 farthest-neighbor fast path.  Below this the
# naive per-query scan is as fast and keeps small crafted fixtures on the
# exhaustively verified route.
FAST_K1_MIN_CLASS = 32


@dataclass(frozen=True)
class PooledSample:
    """Source then target vectors, with the class label of every pooled index."""

    vectors: np.ndarray  # (n1 + n2, L)
    n1: int
    n2: int

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        object.__setattr__(self, "vectors", vectors)
        if self.n1 < 1 or self.n2 < 1:
            raise InvalidInputError("both sample sizes must be positive")
        if vectors.shape[0] != self.n1 + self.n2:
            raise InvalidInputError("pool length must equal n1 + n2")
        object.__setattr__(self, "_classes", argmax_classes(vectors))

    @classmethod
    def from_sample_sets(cls, source: SampleSet, target: SampleSet) -> "PooledSample":
        if source.dim != target.dim:
            raise InvalidInputError(
                f"dimension mismatch: source L={source.dim}, target L={target.dim}"
            )
        return cls(vectors=np.vstack([source.vectors, target.vectors]),
                   n1=len(source), n2=len(target))

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def classes(self) -> np.ndarray:
        return self._classes

    def is_target(self, index) -> np.ndarray:
        return np.asarray(index) >= self.n1


@dataclass(frozen=True)
class HalfKfnValue:
    t: float
    k: int
    n1: int
    n2: int


@dataclass(frozen=True)
class FarthestNeighborTable:
    """Per query index: pooled neighbor indices by decreasing intra-class distance."""

    query_indices: np.ndarray
    neighbors: tuple  # tuple of int arrays, aligned with query_indices
    distances: tuple  # tuple of float arrays, non-increasing

    def neighbor_list(self, query: int) -> np.ndarray:
        pos = int(np.searchsorted(self.query_indices, query))
        if pos >= len(self.query_indices) or self.query_indices[pos] != query:
            raise KeyError(query)
        return self.neighbors[pos]


def _k1_extreme_candidates(pts: np.ndarray) -> np.ndarray | None:
    """Local indices guaranteed to contain every farthest-point maximizer.

    Squared Euclidean distance is strictly convex, so for any query the
    farthest point of a set is an extreme point of the set.  The candidates
    are the convex-hull vertices of the unique points (computed in their
    affine span, since softmax vectors are rank-deficient in ambient
    coordinates) expanded back to all duplicate copies, which keeps the
    smaller-pooled-index tie rule exact for duplicate-heavy resamples.
    Returns None when the hull cannot be computed; callers then fall back to
    the naive scan.
    """
    uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
    if uniq.shape[0] < 5:
        return np.arange(pts.shape[0])
    centered = uniq - uniq.mean(axis=0)
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int((singular > singular[0] * 1e-10).sum()) if singular[0] > 0 else 0
    if rank == 0:
        return np.arange(pts.shape[0])
    coords = centered @ vt[:rank].T
    if rank == 1:
        x = coords[:, 0]
        keep = np.array([int(x.argmin()), int(x.argmax())])
    else:
        try:
            keep = ConvexHull(coords).vertices
        except QhullError:
            return None
    return np.flatnonzero(np.isin(inverse, keep))


def _k1_fast_class(pool: PooledSample, members: np.ndarray, q_local: np.ndarray,
                   neighbors: list, distances: list) -> bool:
    """Fill k=1 neighbor lists for one class via extreme-point candidates."""
    pts = pool.vectors[members]
    cand_local = _k1_extreme_candidates(pts)
    if cand_local is None:
        return False
    diff = pts[q_local][:, None, :] - pts[cand_local][None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    d[cand_local[None, :] == q_local[:, None]] = -np.inf
    cand_pooled = members[cand_local]
    rowmax = d.max(axis=1)
    nb = np.where(d == rowmax[:, None], cand_pooled[None, :], pool.n).min(axis=1)
    for row, local in enumerate(q_local):
        idx = members[local]
        neighbors[idx] = np.array([nb[row]], dtype=np.int64)
        distances[idx] = np.array([rowmax[row]])
    return True


def intra_class_farthest_neighbors(pool: PooledSample, k: int,
                                   query_range: str = "source_only") -> FarthestNeighborTable:
    """Exact intra-class k-farthest neighbors under L2 distance.

    Distance ties break toward the smaller pooled index.  A class with m <= k
    other members yields all m neighbors; singleton classes yield empty lists.
    """
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if query_range not in ("source_only", "all"):
        raise InvalidInputError(f"unknown query_range {query_range!r}")
    queries = np.arange(pool.n1) if query_range == "source_only" else np.arange(pool.n)

    classes = pool.classes
    neighbors = [None] * len(queries)
    distances = [None] * len(queries)
    query_set = set(queries.tolist())

    for label in np.unique(classes):
        members = np.flatnonzero(classes == label)
        if k == 1 and members.size >= FAST_K1_MIN_CLASS:
            if query_range == "all":
                q_local = np.arange(members.size)
            else:
                q_local = np.flatnonzero(members < pool.n1)
            if q_local.size == 0 or _k1_fast_class(pool, members, q_local,
                                                   neighbors, distances):
                continue
        pts = pool.vectors[members]
        # full pairwise distances within the class; classes are small enough
        diff = pts[:, None, :] - pts[None, :, :]
        dmat = np.sqrt((diff * diff).sum(axis=2))
        for local, idx in enumerate(members):
            if idx not in query_set:
                continue
            cand = np.delete(members, local)
            cand_d = np.delete(dmat[local], local)
            # sort by decreasing distance, then increasing pooled index
            order = np.lexsort((cand, -cand_d))[:k]
            neighbors[idx] = cand[order]
            distances[idx] = cand_d[order]

    # queries whose class is a singleton get empty lists
    out_nb, out_d = [], []
    for q in queries:
        nb = neighbors[q]
        if nb is None:
            nb = np.empty(0, dtype=np.int64)
            dd = np.empty(0, dtype=np.float64)
        else:
            dd = distances[q]
        out_nb.append(nb)
        out_d.append(dd)
    return FarthestNeighborTable(query_indices=queries,
                                 neighbors=tuple(out_nb),
                                 distances=tuple(out_d))


def _indicator_matrix(pool: PooledSample, k: int) -> np.ndarray:
    """Boolean (n1, n) matrix marking the intra-class k farthest neighbors."""
    classes = pool.classes
    A = np.zeros((pool.n1, pool.n), dtype=bool)
    for i in range(pool.n1):
        same = np.flatnonzero(classes == classes[i])
        same = same[same != i]
        if same.size == 0:
            continue
        d = np.linalg.norm(pool.vectors[same] - pool.vectors[i], axis=1)
        order = np.lexsort((same, -d))[:k]
        A[i, same[order]] = True
    return A


def half_kfn_matrix_form(pool: PooledSample, k: int) -> HalfKfnValue:
    """Half-KFN via the indicator matrix Hadamard-masked to target columns."""
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    A = _indicator_matrix(pool, k)
    B = np.zeros(pool.n, dtype=bool)
    B[pool.n1:] = True
    t = float((A & B[None, :]).sum()) / (pool.n1 * k)
    return HalfKfnValue(t=t, k=k, n1=pool.n1, n2=pool.n2)


def half_kfn_fn_form(pool: PooledSample, k: int) -> HalfKfnValue:
    """Half-KFN via farthest-neighbor lists: count ranks whose neighbor is target."""
    table = intra_class_farthest_neighbors(pool, k, query_range="source_only")
    hits = 0
    for nb in table.neighbors:
        hits += int((nb >= pool.n1).sum())
    return HalfKfnValue(t=hits / (pool.n1 * k), k=k, n1=pool.n1, n2=pool.n2)

"""Shared helpers and independent oracles used across the test modules.

Everything here is written as naive, readable brute force so that failures
point at the library, not the test harness.
"""

import itertools

import numpy as np

from halfkfn.half_kfn import PooledSample


def random_softmax(rng, n, L):
    """Random valid softmax rows: positive entries normalized to sum 1."""
    raw = rng.random((n, L)) + 1e-3
    return raw / raw.sum(axis=1, keepdims=True)


def random_pool(rng, n1, n2, L):
    return PooledSample(vectors=random_softmax(rng, n1 + n2, L), n1=n1, n2=n2)


def brute_classes(vectors):
    return np.argmax(np.asarray(vectors), axis=1)


def brute_fn_lists(vectors, k):
    """Intra-class k-farthest neighbors per point, index tie-break, brute force."""
    vectors = np.asarray(vectors, dtype=np.float64)
    classes = brute_classes(vectors)
    n = len(vectors)
    out = []
    for i in range(n):
        cand = [j for j in range(n) if j != i and classes[j] == classes[i]]
        cand.sort(key=lambda j: (-float(np.linalg.norm(vectors[j] - vectors[i])), j))
        out.append(cand[:k])
    return out


def brute_half_kfn(vectors, n1, k):
    """The statistic by direct counting over the farthest-neighbor lists."""
    fn = brute_fn_lists(vectors, k)
    hits = sum(1 for i in range(n1) for j in fn[i] if j >= n1)
    return hits / (n1 * k)


def statistic_over_relabelings(vectors, n1, k):
    """t for every (n choose n1) assignment of pool indices to the source."""
    vectors = np.asarray(vectors, dtype=np.float64)
    n = len(vectors)
    fn = brute_fn_lists(vectors, k)
    values = []
    for source in itertools.combinations(range(n), n1):
        source = set(source)
        hits = sum(1 for i in source for j in fn[i] if j not in source)
        values.append(hits / (n1 * k))
    return np.array(values)


def exact_p_matrices(vectors, k):
    """Ordered-pair frequencies of mutual and shared rank-(r,s) farthest neighbors."""
    n = len(vectors)
    fn = brute_fn_lists(vectors, k)
    p1 = np.zeros((k, k))
    p2 = np.zeros((k, k))
    for r in range(k):
        for s in range(k):
            mutual = shared = 0
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    if fn[i][r] == j and fn[j][s] == i:
                        mutual += 1
                    if fn[i][r] == fn[j][s]:
                        shared += 1
            p1[r, s] = mutual / (n * (n - 1))
            p2[r, s] = shared / (n * (n - 1))
    return p1, p2


def count_pair_events_k1(vectors):
    """The five k=1 pair-event frequencies: mutual, shared, the two one-way
    events, and all-distinct, over ordered pairs."""
    n = len(vectors)
    fn = brute_fn_lists(vectors, 1)
    counts = np.zeros(5)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            fi, fj = fn[i][0], fn[j][0]
            if fi == j and fj == i:
                counts[0] += 1
            elif fi == fj:
                counts[1] += 1
            elif fi == j:
                counts[2] += 1
            elif fj == i:
                counts[3] += 1
            else:
                counts[4] += 1
    return counts / (n * (n - 1))


def pool_with_full_lists(rng, n, k, L=3, max_classes=2):
    """Random pool whose every class keeps more than k members, so neighbor
    lists are full; needed by the exhaustive-moment oracles."""
    while True:
        vectors = random_softmax(rng, n, L)
        classes = brute_classes(vectors)
        labels, sizes = np.unique(classes, return_counts=True)
        if len(labels) <= max_classes and (sizes > k).all():
            return vectors

"""One-dimensional k-means over small-cell loads and elbow selection of k."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .netmodel import UsageError

N_INIT = 10
MAX_ITER = 300
K_MAX_DEFAULT = 10
# SSE(1) at or below this is treated as a flat curve (all points identical).
FLAT_SSE = 1e-12


@dataclass(frozen=True)
class Clustering:
    k: int
    assignment: tuple[int, ...]
    centroids: tuple[float, ...]
    sse: float
    n_iter: int = 0

    def members(self) -> list[list[int]]:
        """Point indices of each cluster, clusters ordered by centroid."""
        groups: list[list[int]] = [[] for _ in range(self.k)]
        for i, a in enumerate(self.assignment):
            groups[a].append(i)
        return groups


def sse(points: Sequence[float], assignment: Sequence[int], centroids: Sequence[float]) -> float:
    """Sum over clusters of squared distances from members to their centroid."""
    if len(points) != len(assignment):
        raise UsageError(f"{len(points)} points but {len(assignment)} labels")
    total = 0.0
    for x, a in zip(points, assignment):
        if not 0 <= a < len(centroids):
            raise UsageError(f"label {a} has no centroid (k={len(centroids)})")
        total += (x - centroids[a]) ** 2
    return total


def _kmeanspp(x: np.ndarray, k: int, n_init: int, rng: np.random.Generator) -> np.ndarray:
    """Seed ``n_init`` independent k-means++ center sets at once, shape (n_init, k)."""
    n = len(x)
    idx = rng.integers(n, size=n_init)
    centers = np.empty((n_init, k))
    centers[:, 0] = x[idx]
    d2 = (x[None, :] - centers[:, :1]) ** 2
    for j in range(1, k):
        cum = np.cumsum(d2, axis=1)
        total = cum[:, -1]
        # Draw proportional to squared distance from the nearest chosen center;
        # rows with nothing left to separate pick uniformly.
        target = rng.random(n_init) * total
        weighted = np.minimum((cum <= target[:, None]).sum(axis=1), n - 1)
        uniform = rng.integers(n, size=n_init)
        idx = np.where(total > 0, weighted, uniform)
        centers[:, j] = x[idx]
        d2 = np.minimum(d2, (x[None, :] - x[idx][:, None]) ** 2)
    return centers


def _repair_empty(x, labels, centroids, counts):
    # Hand each empty cluster the point farthest from its own centroid, taken
    # from a cluster that can spare one.
    for e in np.flatnonzero(counts == 0):
        err = (x - centroids[labels]) ** 2
        err[counts[labels] < 2] = -1.0
        i = int(np.argmax(err))
        counts[labels[i]] -= 1
        labels[i] = e
        counts[e] = 1
        centroids[e] = x[i]


def _lloyd_batch(x: np.ndarray, init: np.ndarray, max_iter: int):
    # Independent Lloyd runs, one per row of ``init``. A row whose assignment
    # has stopped changing is a fixed point, so iterating it further is a no-op.
    c = np.array(init, dtype=float)
    r, k = c.shape
    offsets = (np.arange(r) * k)[:, None]
    xr = np.broadcast_to(x, (r, len(x))).ravel()
    labels = None
    traces: list[np.ndarray] = []
    for _ in range(max_iter):
        new = np.abs(x[None, :, None] - c[:, None, :]).argmin(axis=2)
        counts = np.bincount((new + offsets).ravel(), minlength=r * k).reshape(r, k)
        for row in np.flatnonzero((counts == 0).any(axis=1)):
            _repair_empty(x, new[row], c[row], counts[row])
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        sums = np.bincount((labels + offsets).ravel(), weights=xr, minlength=r * k).reshape(r, k)
        c = sums / counts
        traces.append(((x[None, :] - np.take_along_axis(c, labels, axis=1)) ** 2).sum(axis=1))
    return labels, c, np.array(traces).T


def lloyd(points: Sequence[float], init_centroids: Sequence[float],
          max_iter: int = MAX_ITER) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Run Lloyd iterations from the given centroids.

    Returns ``(labels, centroids, sse_trace)`` where ``sse_trace`` holds the SSE
    after every centroid update. Stops once assignments repeat.
    """
    x = np.asarray(points, dtype=float)
    labels, c, traces = _lloyd_batch(x, np.asarray(init_centroids, dtype=float)[None, :], max_iter)
    return labels[0], c[0], traces[0].tolist()


@lru_cache(maxsize=65536)
def _kmeans_sorted(xs: tuple[float, ...], k: int, seed: int, n_init: int,
                   max_iter: int) -> Clustering:
    x = np.array(xs)
    if k == 1:
        mean = float(x.mean())
        return Clustering(1, (0,) * len(xs), (mean,), sse(xs, [0] * len(xs), [mean]), 1)
    rng = np.random.default_rng(seed)
    labels, c, traces = _lloyd_batch(x, _kmeanspp(x, k, n_init, rng), max_iter)
    # Lowest SSE wins, earliest restart on ties.
    best = int(np.argmin(traces[:, -1]))
    labels, c, n_iter = labels[best], c[best], traces.shape[1]
    # Canonical labels: clusters numbered by ascending centroid.
    order = np.argsort(c, kind="stable")
    rank = np.empty(k, dtype=int)
    rank[order] = np.arange(k)
    labels = rank[labels]
    c = c[order]
    return Clustering(k, tuple(int(a) for a in labels), tuple(float(v) for v in c),
                      sse(xs, labels.tolist(), c.tolist()), n_iter)


def clear_caches() -> None:
    _kmeans_sorted.cache_clear()


def kmeans(points: Sequence[float], k: int, seed: int = 0, n_init: int = N_INIT,
           max_iter: int = MAX_ITER) -> Clustering:
    """Best-of-``n_init`` Lloyd clustering with seeded k-means++ starts.

    Points are sorted before clustering, so the result does not depend on input
    order. Cluster labels are numbered by ascending centroid.
    """
    n = len(points)
    if n == 0:
        raise UsageError("cannot cluster an empty point set")
    if not 1 <= k <= n:
        raise UsageError(f"k={k} must lie in [1, {n}]")
    order = sorted(range(n), key=lambda i: points[i])
    xs = tuple(float(points[i]) for i in order)
    res = _kmeans_sorted(xs, k, seed, n_init, max_iter)
    labels = [0] * n
    for pos, i in enumerate(order):
        labels[i] = res.assignment[pos]
    return Clustering(k, tuple(labels), res.centroids, res.sse, res.n_iter)


def sse_curve(points: Sequence[float], k_hi: int, seed: int = 0) -> list[float]:
    """SSE of the best clustering for k = 1..k_hi."""
    return [kmeans(points, k, seed).sse for k in range(1, k_hi + 1)]


def elbow_k(points: Sequence[float], k_max: int | None = None, seed: int = 0) -> int:
    """Pick k where the SSE curve bends hardest.

    The bend at k is the discrete second difference
    ``SSE(k-1) - 2 SSE(k) + SSE(k+1)``; SSE is evaluated one step past
    ``k_max`` so that k_max itself can be scored. Ties go to the smaller k, and a
    flat curve (identical points) gives k = 1.
    """
    n = len(points)
    if k_max is None:
        k_max = min(K_MAX_DEFAULT, n)
    if n < 3 or k_max < 2:
        return 1
    k_top = min(k_max, n - 1)
    curve = sse_curve(points, k_top + 1, seed)
    if curve[0] <= FLAT_SSE:
        return 1
    best_k, best_bend = 1, -np.inf
    for k in range(2, k_top + 1):
        bend = curve[k - 2] - 2 * curve[k - 1] + curve[k]
        if bend > best_bend:
            best_k, best_bend = k, bend
    return best_k if best_bend > FLAT_SSE else 1


def cluster_loads(points: Sequence[float], seed: int = 0, k_max: int | None = None,
                  min_k: int = 1, max_size: int | None = None) -> list[list[int]]:
    """Elbow-chosen k-means partition of ``points``, as lists of indices.

    ``min_k`` forces a split when the caller needs progress (re-clustering a
    group the elbow would leave whole). Identical points cannot be told apart,
    so a forced split of them is made into balanced chunks of at most
    ``max_size`` (halves when ``max_size`` is None) instead of peeling one point
    off per k-means call.
    """
    n = len(points)
    if n == 0:
        return []
    if min_k > 1 and min(points) == max(points):
        parts = max(min(min_k, n), -(-n // max_size) if max_size else 0)
        return [chunk.tolist() for chunk in np.array_split(np.arange(n), parts)]
    k = max(elbow_k(points, k_max, seed), min(min_k, n))
    return kmeans(points, k, seed).members()

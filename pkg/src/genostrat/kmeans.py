"""Lloyd's K-means with best-of-restarts selection and an elbow sweep over k."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import KTooLarge, MonotonicityViolation, ShapeMismatch


@dataclass
class KMeansModel:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    wcss: float
    iterations_run: int


def _sq_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    if points.shape[1] != centroids.shape[1]:
        raise ShapeMismatch(f"points have {points.shape[1]} dims, centroids {centroids.shape[1]}")
    # direct differences (not the |x|^2 - 2xc + |c|^2 expansion) keep exact ties exact
    d = np.empty((len(points), len(centroids)))
    for j, c in enumerate(centroids):
        diff = points - c
        d[:, j] = np.einsum("ij,ij->i", diff, diff)
    return d


def assign_step(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Nearest centroid by squared Euclidean distance; ties go to the lower index."""
    points = np.asarray(points, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    if points.ndim != 2 or centroids.ndim != 2:
        raise ShapeMismatch("points and centroids must be 2-D")
    return _sq_distances(points, centroids).argmin(axis=1)


def update_step(points: np.ndarray, assignments: np.ndarray, k: int) -> np.ndarray:
    """Member means; an empty cluster is re-seeded at the point farthest from its own centroid."""
    points = np.asarray(points, dtype=np.float64)
    assignments = np.asarray(assignments, dtype=np.int64)
    counts = np.bincount(assignments, minlength=k)
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, assignments, points)
    centroids = np.zeros_like(sums)
    filled = counts > 0
    centroids[filled] = sums[filled] / counts[filled, None]
    empty = np.flatnonzero(~filled)
    if empty.size:
        dist = ((points - centroids[assignments]) ** 2).sum(axis=1)
        for j in empty:
            far = int(dist.argmax())
            centroids[j] = points[far]
            dist[far] = -1.0
    return centroids


def wcss(points: np.ndarray, centroids: np.ndarray, assignments: np.ndarray) -> float:
    points = np.asarray(points, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    assignments = np.asarray(assignments, dtype=np.int64)
    if points.shape[1] != centroids.shape[1] or len(assignments) != len(points):
        raise ShapeMismatch("points, centroids and assignments disagree")
    diff = points - centroids[assignments]
    return float(np.einsum("ij,ij->", diff, diff))


def lloyd(points: np.ndarray, initial: np.ndarray, max_iterations: int = 300,
          check_monotone: bool = True) -> KMeansModel:
    """Alternate assign/update from ``initial`` until assignments stop changing."""
    k = len(initial)
    centroids = np.array(initial, dtype=np.float64)
    assignments = assign_step(points, centroids)
    prev = np.inf
    it = 0
    for it in range(1, max_iterations + 1):
        centroids = update_step(points, assignments, k)
        new_assignments = assign_step(points, centroids)
        current = wcss(points, centroids, new_assignments)
        if check_monotone and current > prev + 1e-9 * max(1.0, abs(prev)):
            raise MonotonicityViolation(f"WCSS rose from {prev!r} to {current!r} at iteration {it}")
        prev = current
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
    final = wcss(points, centroids, assignments)
    return KMeansModel(k, centroids, assignments, final, it)


def fit(points: np.ndarray, k: int, max_iterations: int = 300, restarts: int = 100, seed: int = 0,
        workers: int = 1, check_monotone: bool = True) -> KMeansModel:
    """Best (lowest WCSS) of ``restarts`` Lloyd runs from k distinct random data points.

    Restart r is seeded from child r of ``SeedSequence(seed)``, so the result does
    not depend on ``workers``.  Ties keep the earliest restart.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if k < 1 or k > n:
        raise KTooLarge(f"k={k} must lie in [1, {n}]")
    children = np.random.SeedSequence(seed).spawn(max(restarts, 1))

    def run(child):
        rng = np.random.default_rng(child)
        init = points[rng.choice(n, size=k, replace=False)]
        return lloyd(points, init, max_iterations, check_monotone)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(run, children))
    else:
        models = [run(c) for c in children]
    best = models[0]
    for m in models[1:]:
        if m.wcss < best.wcss:
            best = m
    return best


@dataclass
class ElbowReport:
    entries: list[tuple[int, float]]

    def second_differences(self) -> list[tuple[int, float]]:
        """W(k-1) - 2 W(k) + W(k+1) for interior, consecutive k."""
        out = []
        for (k0, w0), (k1, w1), (k2, w2) in zip(self.entries, self.entries[1:], self.entries[2:]):
            if k1 - k0 == 1 and k2 - k1 == 1:
                out.append((k1, w0 - 2.0 * w1 + w2))
        return out

    def elbow(self) -> int | None:
        diffs = self.second_differences()
        if not diffs:
            return None
        return max(diffs, key=lambda kv: kv[1])[0]

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "wcss"])
            for k, v in self.entries:
                w.writerow([k, repr(v)])


def elbow_sweep(points: np.ndarray, k_range, restarts: int = 10, seed: int = 0,
                max_iterations: int = 300, workers: int = 1, max_retries: int = 3) -> ElbowReport:
    """Best WCSS per k.  If WCSS(k) exceeds WCSS(k-1), k is re-run with doubled restarts."""
    entries: list[tuple[int, float]] = []
    for k in k_range:
        r = restarts
        value = fit(points, k, max_iterations, r, seed, workers).wcss
        for _ in range(max_retries):
            if not entries or entries[-1][0] != k - 1 or value <= entries[-1][1]:
                break
            r *= 2
            value = min(value, fit(points, k, max_iterations, r, seed + k, workers).wcss)
        entries.append((int(k), value))
    return ElbowReport(entries)

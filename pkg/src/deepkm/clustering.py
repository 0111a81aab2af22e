"""Classical K-means: D^2-weighted seeding, Lloyd iterations, repair rules.

All tie-breaks are deterministic (lowest index wins) so that a fixed
seed reproduces runs bit for bit. Squared distances are computed from
exact differences in float64, block by block, to bound peak memory on
large inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_BLOCK_ELEMS = 2**24  # ~128 MiB of float64 scratch per distance block


@dataclass
class KMeansResult:
    centers: np.ndarray  # (K, dim)
    labels: np.ndarray  # (N,) int
    objective: float  # sum of squared distances to assigned centers
    iterations: int
    converged: bool


def _check_points(points: np.ndarray, what: str = "points") -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError(f"{what} must be a non-empty 2-d array, got shape {points.shape}")
    if not np.isfinite(points).all():
        raise ValueError(f"{what} contains non-finite values")
    return points


def squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Exact (N, K) squared euclidean distances, computed blockwise."""
    points = np.asarray(points, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    n, dim = points.shape
    k = centers.shape[0]
    out = np.empty((n, k))
    block = max(1, _BLOCK_ELEMS // max(1, k * dim))
    for start in range(0, n, block):
        diff = points[start : start + block, None, :] - centers[None, :, :]
        out[start : start + block] = np.einsum("nkd,nkd->nk", diff, diff)
    return out


def assign(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Index of the nearest center per point; ties go to the lowest index."""
    points = _check_points(points)
    centers = _check_points(centers, "centers")
    if points.shape[1] != centers.shape[1]:
        raise ValueError(
            f"dimension mismatch: points are {points.shape[1]}-d, "
            f"centers are {centers.shape[1]}-d"
        )
    # argmin returns the first minimum, which is exactly the tie rule.
    return np.argmin(squared_distances(points, centers), axis=1)


def kmeans_plus_plus_init(
    points: np.ndarray, k: int, seed: int | np.random.Generator
) -> np.ndarray:
    """Seed K centers: first uniform, the rest D^2-weighted on squared
    distance to the nearest already-chosen center. ``seed`` may be an
    int or an existing Generator."""
    rng = np.random.default_rng(seed)
    points = _check_points(points)
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n_points, got k={k}, n={n}")
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    d2 = squared_distances(points, points[chosen[0]][None, :])[:, 0]
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # All mass sits on already-chosen coordinates; any point is as
            # good as any other.
            chosen[i] = rng.integers(n)
        else:
            r = rng.random() * total
            chosen[i] = np.searchsorted(np.cumsum(d2), r, side="right")
        new_d2 = squared_distances(points, points[chosen[i]][None, :])[:, 0]
        np.minimum(d2, new_d2, out=d2)
    return points[chosen].copy()


def _repair_empty(
    points: np.ndarray, labels: np.ndarray, centers: np.ndarray, d2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Give each empty cluster the point farthest from its current center.

    Clusters are repaired in ascending index order; among equally far
    points the lowest index wins. Donor points are removed from the pool
    so two empty clusters never grab the same point.
    """
    k = centers.shape[0]
    counts = np.bincount(labels, minlength=k)
    if (counts > 0).all():
        return labels, centers
    labels = labels.copy()
    centers = centers.copy()
    own_d2 = d2[np.arange(points.shape[0]), labels].copy()
    for cluster in np.flatnonzero(counts == 0):
        donor = int(np.argmax(own_d2))  # first max = lowest index on ties
        centers[cluster] = points[donor]
        labels[donor] = cluster
        own_d2[donor] = -np.inf
    return labels, centers


def lloyd_step(
    points: np.ndarray, centers: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """One Lloyd iteration: assign, repair empties, recompute means.

    Returns (new_centers, labels, objective) where the objective is the
    sum of squared distances from each point to the center it was just
    assigned to, i.e. evaluated before the mean update. This makes the
    sequence of objectives across steps non-increasing.
    """
    points = _check_points(points)
    centers = _check_points(centers, "centers")
    d2 = squared_distances(points, centers)
    labels = np.argmin(d2, axis=1)
    labels, centers = _repair_empty(points, labels, centers, d2)
    diff = points - centers[labels]
    objective = float(np.einsum("nd,nd->", diff, diff))
    k = centers.shape[0]
    new_centers = np.zeros_like(centers)
    np.add.at(new_centers, labels, points)
    counts = np.bincount(labels, minlength=k)
    new_centers /= counts[:, None]
    return new_centers, labels, objective


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int | np.random.Generator,
    max_iters: int = 100,
    tol: float = 1e-6,
    init_centers: np.ndarray | None = None,
) -> KMeansResult:
    """Full K-means: k-means++ seeding (unless centers are given) then
    Lloyd iterations until the largest center shift drops below ``tol``.

    The returned labels and objective are consistent with the returned
    centers: both are recomputed after the final update.
    """
    points = _check_points(points)
    if init_centers is not None:
        centers = _check_points(init_centers, "init_centers").copy()
        if centers.shape != (k, points.shape[1]):
            raise ValueError(
                f"init_centers shape {centers.shape} does not match "
                f"(k={k}, dim={points.shape[1]})"
            )
    else:
        centers = kmeans_plus_plus_init(points, k, seed)
    converged = False
    iterations = 0
    for _ in range(max_iters):
        new_centers, _, _ = lloyd_step(points, centers)
        iterations += 1
        shift = float(np.max(np.abs(new_centers - centers)))
        centers = new_centers
        if shift < tol:
            converged = True
            break
    d2 = squared_distances(points, centers)
    labels = np.argmin(d2, axis=1)
    labels, centers = _repair_empty(points, labels, centers, d2)
    diff = points - centers[labels]
    objective = float(np.einsum("nd,nd->", diff, diff))
    return KMeansResult(
        centers=centers,
        labels=labels,
        objective=objective,
        iterations=iterations,
        converged=converged,
    )

"""k-means++ seeding and Lloyd iterations, shared by GMM init and RBF centers.

Inputs are put into lexicographic order before any random draw so the result
does not depend on how the caller happened to order its points.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError


class EmptyClusterError(NumericalError):
    pass


def canonical_order(X: np.ndarray) -> np.ndarray:
    """Indices sorting rows of ``X`` lexicographically (first column major)."""
    return np.lexsort(X.T[::-1])


def sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    if k > n:
        raise ValueError(f"cannot seed {k} centers from {n} points")
    chosen = [int(rng.integers(n))]
    d2 = sq_dists(X, X[chosen])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            raise EmptyClusterError(f"fewer than {k} distinct points")
        nxt = int(rng.choice(n, p=d2 / total))
        chosen.append(nxt)
        d2 = np.minimum(d2, sq_dists(X, X[nxt:nxt + 1])[:, 0])
    return X[chosen].copy()


def _fill_empty(X, labels, centers, k):
    d2 = np.sum((X - centers[labels]) ** 2, axis=1)
    counts = np.bincount(labels, minlength=k)
    for j in np.flatnonzero(counts == 0):
        movable = counts[labels] > 1
        if not movable.any():
            return False
        i = int(np.argmax(np.where(movable, d2, -1.0)))
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] += 1
        centers[j] = X[i]
        d2[i] = 0.0
    return True


def lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int = 50):
    """Run Lloyd iterations from ``centers``; returns (centers, labels).

    An empty cluster takes the point farthest from its current centroid. The
    repair may happen twice over a run; a third empty cluster raises
    :class:`EmptyClusterError`.
    """
    centers = np.array(centers, dtype=float)
    k = len(centers)
    repairs = 0

    def assign(C):
        nonlocal repairs
        lab = np.argmin(sq_dists(X, C), axis=1)
        if np.bincount(lab, minlength=k).min() == 0:
            repairs += 1
            if repairs > 2 or not _fill_empty(X, lab, C, k):
                raise EmptyClusterError("k-means produced an empty cluster after repair")
        return lab

    labels = assign(centers)
    for _ in range(max_iter):
        new = np.array([X[labels == j].mean(axis=0) for j in range(k)])
        if np.array_equal(new, centers):
            break
        centers = new
        labels = assign(centers)
    return centers, labels


def kmeans(X: np.ndarray, k: int, seed: int, max_iter: int = 50):
    """k-means++ then Lloyd on the canonically ordered ``X``.

    Returns ``(centers, labels)`` with ``labels`` aligned to the caller's
    original row order.
    """
    X = np.asarray(X, dtype=float)
    order = canonical_order(X)
    Xs = X[order]
    rng = np.random.default_rng(seed)
    centers, labels_sorted = lloyd(Xs, kmeans_pp(Xs, k, rng), max_iter)
    labels = np.empty_like(labels_sorted)
    labels[order] = labels_sorted
    return centers, labels

"""Gaussian RBF network with a shared width and a least-squares linear output layer."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataset import N_CLASSES, Dataset
from .errors import DataError, NumericalError
from .kmeans import kmeans, sq_dists


@dataclass(frozen=True, eq=False)
class RbfNetwork:
    centers: np.ndarray          # (M, d)
    width: float
    output_weights: np.ndarray   # (M, K)
    bias: np.ndarray             # (K,)
    input_shift: Optional[np.ndarray] = None
    input_scale: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("centers", "output_weights", "bias"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if len(self.centers) < 1:
            raise ValueError("network needs at least one hidden unit")
        if not (self.width > 0 and np.isfinite(self.width)):
            raise ValueError(f"width must be positive, got {self.width}")
        if not np.all(np.isfinite(self.centers)):
            raise ValueError("non-finite center")
        if self.output_weights.shape != (len(self.centers), len(self.bias)):
            raise ValueError("output weights must be (M, K)")

    @property
    def n_hidden(self) -> int:
        return len(self.centers)

    def _prepare(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.input_shift is not None:
            X = (X - self.input_shift) / self.input_scale
        return X

    def activations(self, X) -> np.ndarray:
        return gaussian_activations(self._prepare(X), self.centers, self.width)

    def scores(self, X) -> np.ndarray:
        return self.bias + self.activations(X) @ self.output_weights

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.scores(X), axis=1)


@dataclass(frozen=True)
class RbfConfig:
    hidden_neurons: int = 15
    rng_seed: int = 0
    width: Optional[float] = None    # None: max-distance heuristic
    normalize: bool = False
    kmeans_iterations: int = 100

    def __post_init__(self):
        if self.hidden_neurons < 1:
            raise ValueError("hidden_neurons must be >= 1")
        if self.width is not None and not self.width > 0:
            raise ValueError("fixed width must be > 0")


@dataclass(frozen=True)
class RbfReport:
    train_time: float
    width: float


def gaussian_activations(X: np.ndarray, centers: np.ndarray, width: float) -> np.ndarray:
    """exp(-||x - c_j||^2 / (2 width^2)) for every row and center."""
    return np.exp(-sq_dists(X, centers) / (2.0 * width * width))


def hidden_activations(x, net: RbfNetwork) -> np.ndarray:
    return net.activations(np.asarray(x, dtype=float)[None])[0]


def select_centers(X, M: int, seed: int, max_iter: int = 100) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if M > len(X):
        raise DataError(f"cannot place {M} centers on {len(X)} points")
    if len(np.unique(X, axis=0)) < M:
        raise DataError(f"fewer than {M} distinct input points")
    centers, _ = kmeans(X, M, seed, max_iter)
    return centers


def max_distance_width(centers: np.ndarray, X: np.ndarray) -> float:
    """d_max / sqrt(2M); falls back to the pooled input std dev when d_max is 0."""
    M = len(centers)
    d_max = float(np.sqrt(sq_dists(centers, centers).max())) if M > 1 else 0.0
    if d_max > 0:
        return d_max / np.sqrt(2.0 * M)
    pooled = float(np.sqrt(np.mean(np.var(X, axis=0, ddof=1)))) if len(X) > 1 else 0.0
    return pooled if pooled > 0 else 1.0


def one_hot(y, n_classes: int = N_CLASSES) -> np.ndarray:
    T = np.zeros((len(y), n_classes))
    T[np.arange(len(y)), np.asarray(y, dtype=int)] = 1.0
    return T


def fit_output_layer(Phi: np.ndarray, T: np.ndarray):
    """Minimum-norm least squares for ``[1 | Phi] W = T``; returns (weights, bias)."""
    if not np.all(np.isfinite(Phi)):
        raise NumericalError("non-finite hidden activations")
    A = np.column_stack([np.ones(len(Phi)), Phi])
    W, *_ = np.linalg.lstsq(A, T, rcond=None)
    return W[1:], W[0]


def train(train_ds: Dataset, cfg: RbfConfig):
    """k-means centers, shared width, least-squares outputs.

    Returns ``(RbfNetwork, RbfReport)``; the reported time covers the fit only.
    """
    t0 = time.perf_counter()
    X = train_ds.X
    shift = scale = None
    if cfg.normalize:
        shift = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        X = (X - shift) / scale
    centers = select_centers(X, cfg.hidden_neurons, cfg.rng_seed, cfg.kmeans_iterations)
    width = float(cfg.width) if cfg.width is not None else max_distance_width(centers, X)
    Phi = gaussian_activations(X, centers, width)
    W, b = fit_output_layer(Phi, one_hot(train_ds.y))
    net = RbfNetwork(centers, width, W, b, shift, scale)
    return net, RbfReport(time.perf_counter() - t0, width)


def predict(x, net: RbfNetwork):
    """Scores and label for one point."""
    s = net.scores(np.asarray(x, dtype=float)[None])[0]
    return s, int(np.argmax(s))

"""Gaussian mixture densities, EM fitting and the per-class Bayes classifier."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import N_CLASSES, Dataset
from .errors import DataError, NumericalError, SingularCovarianceError
from .kmeans import canonical_order, kmeans

log = logging.getLogger(__name__)

KINDS = ("diag", "full")
DET_FLOOR = 1e-300
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float))


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    components: tuple[GaussianComponent, ...]
    weights: np.ndarray
    kind: str = "full"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", tuple(self.components))
        if self.kind not in KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if len(self.components) < 1 or len(w) != len(self.components):
            raise ValueError("need one positive weight per component")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixing weights must be positive and sum to 1, got {w}")

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])

    @property
    def covs(self) -> np.ndarray:
        return np.array([c.cov for c in self.components])


@dataclass(frozen=True)
class EmConfig:
    k: int = 2
    max_iterations: int = 200
    log_likelihood_tolerance: float = 1e-6
    covariance_floor: float = 1e-4
    rng_seed: int = 0
    n_restarts: int = 5

    def __post_init__(self):
        if self.k < 1 or self.max_iterations < 1 or self.n_restarts < 1:
            raise ValueError("k, max_iterations and n_restarts must all be >= 1")
        if self.log_likelihood_tolerance <= 0 or self.covariance_floor <= 0:
            raise ValueError("tolerance and covariance floor must be > 0")


@dataclass(frozen=True)
class FitReport:
    iterations: int
    log_likelihood: float
    converged: bool
    ll_trace: tuple[float, ...] = field(repr=False)
    restart: int = 0


# ---------------------------------------------------------------------------
# Densities


def _log_gauss(X: np.ndarray, means: np.ndarray, covs: np.ndarray) -> np.ndarray:
    """log N(x_i; mu_j, Sigma_j) as an (n, k) array."""
    n, d = X.shape
    out = np.empty((n, len(means)))
    for j, (mu, S) in enumerate(zip(means, covs)):
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise SingularCovarianceError(f"component {j}: covariance not positive definite") from None
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        if not logdet > math.log(DET_FLOOR):
            raise SingularCovarianceError(f"component {j}: determinant below {DET_FLOOR:g}")
        z = np.linalg.solve(L, (X - mu).T)
        out[:, j] = -0.5 * (d * _LOG_2PI + logdet + np.sum(z * z, axis=0))
    return out


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    m = np.max(a, axis=1)
    safe = np.where(np.isfinite(m), m, 0.0)
    return safe + np.log(np.sum(np.exp(a - safe[:, None]), axis=1))


def component_pdf(x, comp: GaussianComponent) -> float:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return float(np.exp(_log_gauss(x, comp.mean[None], comp.cov[None])[0, 0]))


def mixture_logpdf(X, gm: GaussianMixture) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return _logsumexp_rows(_log_gauss(X, gm.means, gm.covs) + np.log(gm.weights))


def mixture_pdf(x, gm: GaussianMixture):
    """Mixture density at one point (float) or at each row of an array."""
    x = np.asarray(x, dtype=float)
    vals = np.exp(mixture_logpdf(x, gm))
    return float(vals[0]) if x.ndim == 1 else vals


def _responsibilities(logp: np.ndarray):
    lse = _logsumexp_rows(logp)
    bad = np.flatnonzero(~np.isfinite(lse))
    if len(bad):
        raise NumericalError(f"zero density under every component at point {int(bad[0])}")
    return np.exp(logp - lse[:, None]), float(np.sum(lse))


def responsibilities(X, gm: GaussianMixture) -> np.ndarray:
    """Posterior component memberships, computed in log space."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    resp, _ = _responsibilities(_log_gauss(X, gm.means, gm.covs) + np.log(gm.weights))
    return resp


# ---------------------------------------------------------------------------
# EM


def floor_covariance(S: np.ndarray, floor: np.ndarray, kind: str) -> np.ndarray:
    """Lower-bound a covariance by ``diag(floor)``.

    diag: each variance becomes ``max(s_dd, floor_d)``. full: eigenvalues of
    the floor-whitened matrix are clamped at 1, which is the constrained
    maximizer of the Gaussian likelihood and so keeps EM monotone.
    """
    if kind == "diag":
        return np.diag(np.maximum(np.diag(S), floor))
    scale = np.sqrt(floor)
    W = S / np.outer(scale, scale)
    vals, vecs = np.linalg.eigh(W)
    if vals.min() >= 1.0:
        return S
    W = (vecs * np.maximum(vals, 1.0)) @ vecs.T
    out = W * np.outer(scale, scale)
    return 0.5 * (out + out.T)


def _m_step(X, resp, kind, floor):
    n, d = X.shape
    Nk = resp.sum(axis=0)
    if np.any(Nk <= 0):
        raise NumericalError("a mixture component lost all responsibility")
    weights = Nk / n
    means = (resp.T @ X) / Nk[:, None]
    covs = np.empty((len(Nk), d, d))
    for j in range(len(Nk)):
        diff = X - means[j]
        S = (resp[:, j, None] * diff).T @ diff / Nk[j]
        if kind == "diag":
            S = np.diag(np.diag(S))
        else:
            S = 0.5 * (S + S.T)
        covs[j] = floor_covariance(S, floor, kind)
    return weights, means, covs


def _init_params(X, k, kind, floor, seed):
    centers, labels = kmeans(X, k, seed)
    counts = np.bincount(labels, minlength=k)
    S = np.cov(X.T, ddof=0).reshape(X.shape[1], X.shape[1])
    if kind == "diag":
        S = np.diag(np.diag(S))
    S = floor_covariance(S, floor, kind)
    return counts / len(X), centers, np.repeat(S[None], k, axis=0)


def _run_em(X, cfg: EmConfig, kind, floor, seed):
    weights, means, covs = _init_params(X, cfg.k, kind, floor, seed)
    resp, ll = _responsibilities(_log_gauss(X, means, covs) + np.log(weights))
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        weights, means, covs = _m_step(X, resp, kind, floor)
        resp, ll_new = _responsibilities(_log_gauss(X, means, covs) + np.log(weights))
        trace.append(ll_new)
        if ll_new - ll < cfg.log_likelihood_tolerance * abs(ll):
            converged = True
            break
        ll = ll_new
    return (weights, means, covs), trace, it, converged


def em_fit(X, cfg: EmConfig, kind: str = "full", floor_scale=None, stream=()):
    """Fit a ``cfg.k``-component mixture to the rows of ``X`` by EM.

    ``floor_scale`` is the per-feature variance the covariance floor is
    proportional to (defaults to the variance of ``X`` itself). ``stream``
    is mixed into the RNG seed so that independent fits, such as the ten
    per-class fits of a classifier, draw from distinct streams.

    Returns ``(GaussianMixture, FitReport)`` for the restart with the highest
    final log-likelihood.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown covariance kind {kind!r}")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("expected a 2-D array of points")
    n, d = X.shape
    if n < cfg.k:
        raise DataError(f"cannot fit {cfg.k} components to {n} points")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite input to em_fit")
    X = X[canonical_order(X)]
    if floor_scale is None:
        floor_scale = np.var(X, axis=0)
    floor_scale = np.where(np.asarray(floor_scale, dtype=float) > 0, floor_scale, 1.0)
    floor = cfg.covariance_floor * floor_scale

    restarts = 1 if cfg.k == 1 else cfg.n_restarts
    best = None
    failure = None
    for r in range(restarts):
        seed = [int(cfg.rng_seed), *map(int, stream), r]
        try:
            params, trace, iters, conv = _run_em(X, cfg, kind, floor, seed)
        except NumericalError as exc:
            log.debug("EM restart %d failed: %s", r, exc)
            failure = exc
            continue
        if best is None or trace[-1] > best[1][-1]:
            best = (params, trace, iters, conv, r)
    if best is None:
        raise NumericalError(f"every EM restart failed; last error: {failure}")
    (weights, means, covs), trace, iters, conv, r = best
    weights = weights / weights.sum()
    gm = GaussianMixture(tuple(GaussianComponent(m, S) for m, S in zip(means, covs)), weights, kind)
    return gm, FitReport(iters, trace[-1], conv, tuple(trace), r)


# ---------------------------------------------------------------------------
# Classifier


@dataclass(frozen=True, eq=False)
class GmmClassifier:
    mixtures: tuple[GaussianMixture, ...]
    priors: np.ndarray
    reports: tuple[FitReport, ...] = field(default=(), repr=False)

    def __post_init__(self):
        p = np.asarray(self.priors, dtype=float)
        object.__setattr__(self, "priors", p)
        if len(self.mixtures) != len(p):
            raise ValueError("one prior per class mixture required")
        if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("class priors must be positive and sum to 1")
        if len({(m.kind, m.k) for m in self.mixtures}) != 1:
            raise ValueError("all class mixtures must share kind and k")

    @property
    def kind(self) -> str:
        return self.mixtures[0].kind

    @property
    def k(self) -> int:
        return self.mixtures[0].k

    def log_scores(self, X) -> np.ndarray:
        """log prior + log class-conditional density, shape (n, classes)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([np.log(p) + mixture_logpdf(X, m)
                                for p, m in zip(self.priors, self.mixtures)])

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.log_scores(X), axis=1)


def fit_classifier(train: Dataset, cfg: EmConfig, kind: str = "full") -> GmmClassifier:
    """One EM mixture per class; priors are the class frequencies."""
    counts = train.class_counts()
    missing = [c for c in range(N_CLASSES) if counts[c] == 0]
    if missing:
        raise DataError(f"training data has no points for classes {missing}")
    few = [c for c in range(N_CLASSES) if counts[c] < cfg.k]
    if few:
        raise DataError(f"classes {few} have fewer than k={cfg.k} points")
    X, y = train.X, train.y
    pooled = np.var(X[canonical_order(X)], axis=0)
    mixtures, reports = [], []
    for c in range(N_CLASSES):
        gm, rep = em_fit(X[y == c], cfg, kind, floor_scale=pooled, stream=(c,))
        mixtures.append(gm)
        reports.append(rep)
    priors = counts / counts.sum()
    return GmmClassifier(tuple(mixtures), priors, tuple(reports))


def classify(x, clf: GmmClassifier):
    """Bayes decision for one point: ``(label, log_scores)``."""
    scores = clf.log_scores(np.asarray(x, dtype=float)[None])[0]
    return int(np.argmax(scores)), scores

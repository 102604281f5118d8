"""Forward-selection RBF with per-neuron spreads, LOO stopping and GCV ridge weights.

Neurons are drawn greedily from a fixed pool of (training point, spread)
pairs. Each candidate is scored by the closed-form leave-one-out error of a
ridge fit whose penalty is re-tuned by GCV for that candidate; selection
stops as soon as the best candidate fails to lower the LOO error.

Design matrices handed to the public ridge helpers carry the bias as column 0
and that column is never penalized.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dataset import N_CLASSES, Dataset
from .errors import DataError

LAMBDA_LO = 1e-10
LAMBDA_HI = 1e4
# relative width the golden-section bracket is refined to, in lambda
LAMBDA_RTOL = 1e-3
_GRID_PER_DECADE = 4
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_H_MAX = 1.0 - 1e-12
# a candidate whose centered column keeps less than this fraction of its norm
# after projection onto the selected columns is treated as collinear
_COLLINEAR = 1e-10
# stop once the LOO error is this small relative to the target variance
_EXACT_FIT = 1e-14


# ---------------------------------------------------------------------------
# Ridge regression, LOO and GCV on an explicit design


def _ridge_parts(A: np.ndarray, t: np.ndarray, lam: float):
    """Weights, residuals, hat diagonal and hat trace of a bias-unpenalized ridge fit.

    Solved as least squares on ``[A; sqrt(lam) E]`` where ``E`` is the
    identity without its bias row; the hat matrix is the top-left block of
    that augmented projection. Rank-deficient systems get the minimum-norm
    solution.
    """
    A = np.asarray(A, dtype=float)
    t = np.asarray(t, dtype=float)
    n, p = A.shape
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if not np.all(np.isfinite(A)):
        raise ValueError("design matrix must be finite")
    if lam > 0 and p > 1:
        E = np.sqrt(lam) * np.eye(p)[1:]
        Aug = np.vstack([A, E])
    else:
        Aug = A
    U, s, Vt = np.linalg.svd(Aug, full_matrices=False)
    tol = s.max(initial=0.0) * max(Aug.shape) * np.finfo(float).eps
    r = int(np.sum(s > tol))
    U, s, Vt = U[:, :r], s[:r], Vt[:r]
    Ut = U[:n]
    w = Vt.T @ ((Ut.T @ t) / s)
    e = t - A @ w
    h = np.einsum("ij,ij->i", Ut, Ut)
    return w, e, h, float(h.sum())


def ridge_fit(A, t, lam: float) -> np.ndarray:
    """Ridge weights ``(A^T A + lam I*)^-1 A^T t`` with the bias (column 0) unpenalized."""
    return _ridge_parts(A, t, lam)[0]


def loo_residuals(A, t, lam: float) -> np.ndarray:
    _, e, h, _ = _ridge_parts(A, t, lam)
    out = np.full_like(e, np.inf)
    ok = h < _H_MAX
    out[ok] = e[ok] / (1.0 - h[ok])
    return out


def loo_error(A, t, lam: float) -> float:
    """Mean squared leave-one-out residual; ``inf`` if any point fits itself exactly."""
    _, e, h, _ = _ridge_parts(A, t, lam)
    if np.any(h >= _H_MAX):
        return math.inf
    return float(np.mean((e / (1.0 - h)) ** 2))


def gcv_score(A, t, lam: float) -> float:
    """n ||(I - H) t||^2 / trace(I - H)^2."""
    _, e, _, tr = _ridge_parts(A, t, lam)
    n = len(e)
    denom = (n - tr) ** 2
    if denom <= 0:
        return math.inf
    return float(n * np.dot(e, e) / denom)


def _minimize_log_lambda(f: Callable[[np.ndarray], np.ndarray], batch: int,
                         lo: float = LAMBDA_LO, hi: float = LAMBDA_HI) -> np.ndarray:
    """Per-row minimizer of ``f`` over lambda in ``[lo, hi]``.

    ``f`` maps a length-``batch`` array of lambdas to GCV values (one per
    row). A quarter-decade grid locates the best bracket, then golden-section
    search on log lambda narrows it to ``LAMBDA_RTOL``. All rows advance in
    lockstep, so a batch of one gives the same answer as that row in a batch.
    """
    grid = np.linspace(math.log(lo), math.log(hi),
                       int(round(_GRID_PER_DECADE * math.log10(hi / lo))) + 1)
    vals = np.stack([f(np.full(batch, math.exp(g))) for g in grid], axis=1)
    vals = np.where(np.isnan(vals), np.inf, vals)
    best = np.argmin(vals, axis=1)
    best_val = vals[np.arange(batch), best]
    a = grid[np.maximum(best - 1, 0)]
    b = grid[np.minimum(best + 1, len(grid) - 1)]
    width = float(np.max(b - a))
    n_iter = max(0, math.ceil(math.log(math.log1p(LAMBDA_RTOL) / width) / math.log(_INVPHI)))
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(np.exp(c)), f(np.exp(d))
    for _ in range(n_iter):
        left = fc < fd
        # left: keep [a, d], old c becomes the new d; else keep [c, b], old d becomes c
        a, b = np.where(left, a, c), np.where(left, d, b)
        c, d, fc, fd = (np.where(left, b - _INVPHI * (b - a), d),
                        np.where(left, c, a + _INVPHI * (b - a)),
                        np.where(left, np.nan, fd), np.where(left, fc, np.nan))
        probe = np.where(left, c, d)
        fp = f(np.exp(probe))
        fc = np.where(left, fp, fc)
        fd = np.where(left, fd, fp)
    x = np.where(fc < fd, c, d)
    fx = np.minimum(fc, fd)
    x = np.where(fx < best_val, x, grid[best])
    return np.exp(x)


def gcv_lambda(A, t, lo: float = LAMBDA_LO, hi: float = LAMBDA_HI) -> float:
    """Penalty minimizing the GCV functional over ``[lo, hi]``."""
    A = np.asarray(A, dtype=float)
    t = np.asarray(t, dtype=float)
    f = lambda lams: np.array([gcv_score(A, t, float(l)) for l in lams])
    return float(_minimize_log_lambda(f, 1, lo, hi)[0])


# ---------------------------------------------------------------------------
# Model types


@dataclass(frozen=True, eq=False)
class TunableNeuron:
    center: np.ndarray
    spread: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not (self.spread > 0 and np.isfinite(self.spread)):
            raise ValueError(f"spread must be positive, got {self.spread}")
        if not np.all(np.isfinite(self.center)):
            raise ValueError("non-finite neuron center")


def rbf_columns(X: np.ndarray, centers: np.ndarray, spreads: np.ndarray) -> np.ndarray:
    """Activation matrix of shape (n, m): one Gaussian column per (center, spread)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    centers = np.asarray(centers, dtype=float).reshape(-1, X.shape[1])
    spreads = np.asarray(spreads, dtype=float).reshape(-1)
    diff = X[:, None, :] - centers[None, :, :]
    d2 = np.einsum("nkd,nkd->nk", diff, diff)
    return np.exp(-d2 / (2.0 * spreads ** 2))


@dataclass(frozen=True, eq=False)
class OfsRbfModel:
    neurons: tuple[TunableNeuron, ...]
    weights: np.ndarray          # bias first
    lam: float
    loo_trace: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if len(self.weights) != len(self.neurons) + 1:
            raise ValueError("need one weight per neuron plus the bias")
        if len(self.loo_trace) != len(self.neurons):
            raise ValueError("loo_trace must have one entry per neuron")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")

    @property
    def n_neurons(self) -> int:
        return len(self.neurons)

    def design(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cols = [np.ones(len(X))]
        if self.neurons:
            C = np.array([nr.center for nr in self.neurons])
            s = np.array([nr.spread for nr in self.neurons])
            return np.column_stack([cols[0], rbf_columns(X, C, s)])
        return cols[0][:, None]

    def predict(self, X) -> np.ndarray:
        return self.design(X) @ self.weights


@dataclass(frozen=True)
class OfsConfig:
    spreads: Optional[tuple[float, ...]] = None   # None: geometric ladder below
    n_spreads: int = 8
    spread_lo: float = 0.1
    spread_hi: float = 4.0
    max_neurons: int = 36
    threshold: float = 0.5
    chunk: int = 512

    def __post_init__(self):
        if self.max_neurons < 1:
            raise ValueError("max_neurons must be >= 1")
        if self.spreads is not None and (not self.spreads or min(self.spreads) <= 0):
            raise ValueError("candidate spreads must be a non-empty list of positive values")
        if self.spreads is None and (self.n_spreads < 1 or not 0 < self.spread_lo <= self.spread_hi):
            raise ValueError("invalid spread ladder")

    def spread_ladder(self, X: np.ndarray) -> np.ndarray:
        if self.spreads is not None:
            return np.asarray(self.spreads, dtype=float)
        pooled = math.sqrt(float(np.mean(np.var(X, axis=0, ddof=1)))) if len(X) > 1 else 1.0
        if pooled <= 0:
            pooled = 1.0
        return pooled * np.geomspace(self.spread_lo, self.spread_hi, self.n_spreads)


# ---------------------------------------------------------------------------
# Incremental candidate scoring


class CandidateScorer:
    """Scores appending each pool column to a growing design.

    The centered selected columns are kept as ``Q R`` with orthonormal ``Q``.
    A candidate contributes one Gram-Schmidt step, so the extended design is
    ``[Q q] R'`` and every ridge quantity follows from the small SVD of
    ``R'``. The bias is handled exactly by centering columns and targets.
    """

    def __init__(self, pool: np.ndarray, t: np.ndarray, chunk: int = 512):
        pool = np.asarray(pool, dtype=float)
        t = np.asarray(t, dtype=float)
        self.n = len(t)
        self.Pc = pool - pool.mean(axis=0)
        self.norms = np.linalg.norm(self.Pc, axis=0)
        self.tc = np.zeros_like(t) if np.ptp(t) == 0 else t - t.mean()
        self.Q = np.zeros((self.n, 0))
        self.R = np.zeros((0, 0))
        self.selected: list[int] = []
        self.r_cur = self.tc.copy()
        self.chunk = chunk

    def baseline_loo(self) -> float:
        n = self.n
        return float(np.mean((self.tc / (1.0 - 1.0 / n)) ** 2))

    def _extend(self, idx):
        Q, m = self.Q, self.Q.shape[1]
        V = self.Pc[:, idx]
        Rc = Q.T @ V
        V = V - Q @ Rc
        R2 = Q.T @ V                        # second pass keeps q orthogonal to Q
        V = V - Q @ R2
        Rc = Rc + R2
        rho = np.linalg.norm(V, axis=0)
        ok = (rho > _COLLINEAR * self.norms[idx]) & (self.norms[idx] > 0)
        q = np.where(ok, V / np.where(ok, rho, 1.0), 0.0)
        C = len(idx)
        Rp = np.zeros((C, m + 1, m + 1))
        Rp[:, :m, :m] = self.R
        Rp[:, :m, m] = Rc.T
        Rp[:, m, m] = rho
        return q, Rp, ok

    def _score_chunk(self, idx):
        n, m = self.n, self.Q.shape[1]
        q, Rp, ok = self._extend(idx)
        Ur, s, _ = np.linalg.svd(Rp)
        s2 = s * s
        qr = q.T @ self.r_cur
        zfull = np.empty((len(idx), m + 1))
        zfull[:, :m] = self.Q.T @ self.tc
        zfull[:, m] = qr
        z = np.einsum("ckj,ck->cj", Ur, zfull)
        z2 = z * z
        resid = self.r_cur[:, None] - q * qr
        perp = np.einsum("ic,ic->c", resid, resid)

        def gcv(lams):
            f = s2 / (s2 + lams[:, None])
            rss = perp + np.sum(z2 * (1.0 - f) ** 2, axis=1)
            tr = n - 1.0 - np.sum(f, axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = n * rss / (tr * tr)
            return np.where(tr > 0, out, np.inf)

        lams = _minimize_log_lambda(gcv, len(idx))
        f = s2 / (s2 + lams[:, None])
        K = np.einsum("ckj,cj,clj->ckl", Ur, f, Ur)
        coef = np.einsum("ckj,cj,cj->ck", Ur, f, z)
        fitted = self.Q @ coef[:, :m].T + q * coef[:, m]
        e = self.tc[:, None] - fitted
        # h_i = 1/n + b_i^T K b_i with b_i = [Q_i, q_i]
        QQ = np.einsum("ia,ib->iab", self.Q, self.Q).reshape(n, m * m)
        h = (1.0 / n + QQ @ K[:, :m, :m].reshape(len(idx), m * m).T
             + 2.0 * q * (self.Q @ K[:, :m, m].T) + q * q * K[:, m, m])
        with np.errstate(divide="ignore", invalid="ignore"):
            loo = np.mean((e / (1.0 - h)) ** 2, axis=0)
        loo = np.where((h.max(axis=0) < _H_MAX) & ok, loo, np.inf)
        return lams, loo

    def score(self, idx=None):
        """(lambdas, loo) for appending each candidate in ``idx`` (default: all unselected)."""
        if idx is None:
            idx = self.available()
        idx = np.asarray(idx, dtype=int)
        lams = np.empty(len(idx))
        loo = np.empty(len(idx))
        for s in range(0, len(idx), self.chunk):
            part = idx[s:s + self.chunk]
            lams[s:s + len(part)], loo[s:s + len(part)] = self._score_chunk(part)
        return lams, loo

    def available(self) -> np.ndarray:
        mask = np.ones(self.Pc.shape[1], dtype=bool)
        mask[self.selected] = False
        return np.flatnonzero(mask)

    def add(self, j: int) -> None:
        q, Rp, ok = self._extend(np.array([j]))
        if not ok[0]:
            raise ValueError(f"candidate {j} is collinear with the selected columns")
        self.Q = np.column_stack([self.Q, q[:, 0]])
        self.R = Rp[0]
        self.selected.append(int(j))
        self.r_cur = self.r_cur - q[:, 0] * (q[:, 0] @ self.r_cur)


def candidate_pool(X: np.ndarray, spreads: np.ndarray):
    """Centers and spreads of every candidate, point index major, spread minor."""
    X = np.asarray(X, dtype=float)
    centers = np.repeat(X, len(spreads), axis=0)
    sp = np.tile(np.asarray(spreads, dtype=float), len(X))
    return centers, sp


def forward_select(X, t, cfg: OfsConfig = OfsConfig()) -> OfsRbfModel:
    """Greedy neuron selection for one scalar target.

    Every step appends the pool candidate with the lowest LOO error (ties go
    to the earlier candidate) and stops when that error is not below the
    current one, or when ``cfg.max_neurons`` is reached. The final weights are
    refit on the chosen columns with their own GCV penalty.
    """
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    if len(X) < 2:
        raise DataError("forward selection needs at least 2 points")
    if len(X) != len(t):
        raise DataError("inputs and targets differ in length")
    spreads = cfg.spread_ladder(X)
    centers, sp = candidate_pool(X, spreads)
    if len(sp) == 0:
        raise DataError("empty candidate pool")
    scorer = CandidateScorer(rbf_columns(X, centers, sp), t, cfg.chunk)

    current = scorer.baseline_loo()
    floor = _EXACT_FIT * float(np.mean(scorer.tc ** 2))
    trace: list[float] = []
    while len(scorer.selected) < cfg.max_neurons and current > floor:
        idx = scorer.available()
        if len(idx) == 0:
            break
        _, loo = scorer.score(idx)
        b = int(np.argmin(loo))
        if not loo[b] < current:
            break
        scorer.add(int(idx[b]))
        current = float(loo[b])
        trace.append(current)

    sel = scorer.selected
    neurons = tuple(TunableNeuron(centers[j], float(sp[j])) for j in sel)
    A = np.column_stack([np.ones(len(X)), rbf_columns(X, centers[sel], sp[sel])]) if sel \
        else np.ones((len(X), 1))
    lam = gcv_lambda(A, t) if sel else 0.0
    w = ridge_fit(A, t, lam)
    return OfsRbfModel(neurons, w, lam, tuple(trace))


# ---------------------------------------------------------------------------
# One-vs-rest protocol


def binary_accuracy(pred: np.ndarray, truth: np.ndarray) -> float:
    return 100.0 * float(np.count_nonzero(pred == truth)) / len(truth)


@dataclass(frozen=True, eq=False)
class OvrEnsemble:
    models: tuple[OfsRbfModel, ...]
    train_acc: np.ndarray
    test_acc: np.ndarray
    train_times: np.ndarray = field(repr=False)
    threshold: float = 0.5

    def __post_init__(self):
        if len(self.models) != N_CLASSES:
            raise ValueError(f"one-vs-rest ensemble needs exactly {N_CLASSES} models")

    @property
    def mean_train_acc(self) -> float:
        return float(np.mean(self.train_acc))

    @property
    def mean_test_acc(self) -> float:
        return float(np.mean(self.test_acc))

    @property
    def mean_neurons(self) -> float:
        return float(np.mean([m.n_neurons for m in self.models]))

    def outputs(self, X) -> np.ndarray:
        return np.column_stack([m.predict(X) for m in self.models])

    def predict(self, X) -> np.ndarray:
        """Multi-class label: the class whose model responds most strongly."""
        return np.argmax(self.outputs(X), axis=1)


def train_one_vs_rest(train: Dataset, test: Dataset, cfg: OfsConfig = OfsConfig()) -> OvrEnsemble:
    """Ten binary forward-selection models, class c against the rest."""
    models, tr_acc, te_acc, times = [], [], [], []
    for c in range(N_CLASSES):
        t_train = (train.y == c).astype(float)
        t0 = time.perf_counter()
        model = forward_select(train.X, t_train, cfg)
        times.append(time.perf_counter() - t0)
        models.append(model)
        tr_acc.append(binary_accuracy(model.predict(train.X) >= cfg.threshold, t_train == 1))
        te_acc.append(binary_accuracy(model.predict(test.X) >= cfg.threshold, test.y == c))
    return OvrEnsemble(tuple(models), np.array(tr_acc), np.array(te_acc), np.array(times), cfg.threshold)

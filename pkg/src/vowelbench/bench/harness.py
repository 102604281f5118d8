"""Sweeps, recognition rates, timings and CSV exports for the three models."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .. import gmm, ofs_rbf, rbf
from ..dataset import Dataset
from ..errors import DataError

log = logging.getLogger(__name__)

MODELS = ("gmm", "rbf", "ofs_rbf")
TIMING_COLUMNS = ("train_time", "test_time")


def recognition_rate(predicted, truth) -> float:
    """Percentage of positions where ``predicted`` equals ``truth``."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError(f"length mismatch: {predicted.shape} vs {truth.shape}")
    if truth.size == 0:
        raise ValueError("cannot score an empty label sequence")
    p = int(np.count_nonzero(predicted == truth))
    return float(Fraction(p, truth.size) * 100)


def timed(fn: Callable, *args, **kwargs):
    """``(fn(*args, **kwargs), wall seconds)`` on the monotonic clock."""
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


@dataclass(frozen=True)
class RunResult:
    model: str
    params: tuple[tuple[str, object], ...]
    seed: int
    train_rate: float
    test_rate: float
    train_time: float
    test_time: float

    def __post_init__(self):
        if not (0 <= self.train_rate <= 100 and 0 <= self.test_rate <= 100):
            raise ValueError("rates must lie in [0, 100]")
        if self.train_time < 0 or self.test_time < 0:
            raise ValueError("times must be >= 0")

    @property
    def key(self) -> tuple:
        return tuple(v for _, v in self.params)

    def param(self, name: str):
        return dict(self.params)[name]

    @property
    def avg_rate(self) -> float:
        return (self.train_rate + self.test_rate) / 2


@dataclass(frozen=True)
class GridSpec:
    x1_lo: float
    x1_hi: float
    x1_step: float
    x2_lo: float
    x2_hi: float
    x2_step: float

    def __post_init__(self):
        if not (self.x1_hi > self.x1_lo and self.x2_hi > self.x2_lo):
            raise ValueError("grid ranges must have positive length")
        if not (self.x1_step > 0 and self.x2_step > 0):
            raise ValueError("grid steps must be > 0")

    @classmethod
    def from_counts(cls, x1: tuple[float, float], x2: tuple[float, float], n1: int, n2: int) -> "GridSpec":
        if n1 < 2 or n2 < 2:
            raise ValueError("need at least 2 grid points per axis")
        return cls(x1[0], x1[1], (x1[1] - x1[0]) / (n1 - 1), x2[0], x2[1], (x2[1] - x2[0]) / (n2 - 1))

    @staticmethod
    def _axis(lo, hi, step):
        n = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return lo + step * np.arange(n)

    def points(self) -> np.ndarray:
        """Grid points in row-major order: x2 outer, x1 fastest."""
        a = self._axis(self.x1_lo, self.x1_hi, self.x1_step)
        b = self._axis(self.x2_lo, self.x2_hi, self.x2_step)
        g1, g2 = np.meshgrid(a, b)
        return np.column_stack([g1.ravel(), g2.ravel()])


DEFAULT_GRID = GridSpec.from_counts((198.0, 1300.0), (550.0, 3369.0), 200, 200)


def seeds_from_master(master: int, repeats: int) -> tuple[int, ...]:
    return tuple(master * 1000 + r for r in range(repeats))


# ---------------------------------------------------------------------------
# Sweeps


def sweep_gmm(train: Dataset, test: Dataset, centers: Iterable[int], kinds: Iterable[str],
              seeds: Sequence[int], em: Optional[dict] = None) -> list[RunResult]:
    kinds = sorted(set(kinds))
    bad = [k for k in kinds if k not in gmm.KINDS]
    if bad:
        raise ValueError(f"unknown covariance kinds {bad}")
    out = []
    for kind in kinds:
        for k in sorted(set(centers)):
            for seed in seeds:
                cfg = gmm.EmConfig(k=k, rng_seed=seed, **(em or {}))
                clf, t_train = timed(gmm.fit_classifier, train, cfg, kind)
                pred_test, t_test = timed(clf.predict, test.X)
                out.append(RunResult("gmm", (("kind", kind), ("k", k)), seed,
                                     recognition_rate(clf.predict(train.X), train.y),
                                     recognition_rate(pred_test, test.y), t_train, t_test))
                log.info("gmm kind=%s k=%d seed=%d test=%.2f", kind, k, seed, out[-1].test_rate)
    return out


def sweep_rbf(train: Dataset, test: Dataset, neurons: Iterable[int], seeds: Sequence[int],
              rbf_opts: Optional[dict] = None) -> list[RunResult]:
    neurons = sorted(set(neurons))
    if neurons and neurons[-1] > len(train):
        raise DataError(f"{neurons[-1]} hidden neurons exceed the {len(train)} training points")
    out = []
    for M in neurons:
        for seed in seeds:
            cfg = rbf.RbfConfig(hidden_neurons=M, rng_seed=seed, **(rbf_opts or {}))
            (net, _), t_train = timed(rbf.train, train, cfg)
            pred_test, t_test = timed(net.predict, test.X)
            out.append(RunResult("rbf", (("neurons", M),), seed,
                                 recognition_rate(net.predict(train.X), train.y),
                                 recognition_rate(pred_test, test.y), t_train, t_test))
            log.info("rbf M=%d seed=%d test=%.2f", M, seed, out[-1].test_rate)
    return out


@dataclass(frozen=True, eq=False)
class OfsRun:
    ensemble: ofs_rbf.OvrEnsemble
    result: RunResult
    multiclass_train: float
    multiclass_test: float

    def class_rows(self) -> list[tuple]:
        ens = self.ensemble
        return [(c, m.n_neurons, m.lam, ens.train_acc[c], ens.test_acc[c], ens.train_times[c])
                for c, m in enumerate(ens.models)]


def run_ofs(train: Dataset, test: Dataset, cfg: ofs_rbf.OfsConfig = ofs_rbf.OfsConfig()) -> OfsRun:
    """One-vs-rest forward-selection ensemble plus its averaged result row."""
    ens, t_train = timed(ofs_rbf.train_one_vs_rest, train, test, cfg)
    out_test, t_test = timed(ens.outputs, test.X)
    res = RunResult("ofs_rbf", (("max_neurons", cfg.max_neurons),), 0,
                    ens.mean_train_acc, ens.mean_test_acc, t_train, t_test)
    return OfsRun(ens, res,
                  recognition_rate(ens.predict(train.X), train.y),
                  recognition_rate(np.argmax(out_test, axis=1), test.y))


def mean_curve(results: Sequence[RunResult]) -> list[tuple]:
    """Per-configuration means over seeds: (params..., n, train, test, train_time, test_time)."""
    groups: dict[tuple, list[RunResult]] = {}
    for r in results:
        groups.setdefault(r.key, []).append(r)
    rows = []
    for key in sorted(groups):
        rs = groups[key]
        rows.append((*key, len(rs),
                     float(np.mean([r.train_rate for r in rs])), float(np.mean([r.test_rate for r in rs])),
                     float(np.mean([r.train_time for r in rs])), float(np.mean([r.test_time for r in rs]))))
    return rows


def best_configuration(results: Sequence[RunResult]) -> RunResult:
    """Configuration with the best mean test rate (ties: mean train rate, then sort order).

    Returns a RunResult holding that configuration's seed-averaged rates and
    times, with ``seed`` set to the first seed of the group.
    """
    if not results:
        raise DataError("no results to choose from")
    groups: dict[tuple, list[RunResult]] = {}
    for r in results:
        groups.setdefault(r.key, []).append(r)
    best_key, best_score = None, None
    for key in sorted(groups):
        rs = groups[key]
        score = (np.mean([r.test_rate for r in rs]), np.mean([r.train_rate for r in rs]))
        if best_score is None or score > best_score:
            best_key, best_score = key, score
    rs = groups[best_key]
    return RunResult(rs[0].model, rs[0].params, rs[0].seed,
                     float(best_score[1]), float(best_score[0]),
                     float(np.mean([r.train_time for r in rs])), float(np.mean([r.test_time for r in rs])))


def compare_models(best: dict[str, RunResult]) -> list[tuple]:
    """(model, train_rate, test_rate, avg_rate, train_time, test_time) per model."""
    missing = [m for m in MODELS if m not in best]
    if missing:
        raise DataError(f"missing pipeline results for {missing}")
    return [(m, best[m].train_rate, best[m].test_rate, best[m].avg_rate,
             best[m].train_time, best[m].test_time) for m in MODELS]


# ---------------------------------------------------------------------------
# Boundary grids


def class_scores(model, X) -> np.ndarray:
    """(n, classes) score matrix for any of the three trained model types."""
    if isinstance(model, gmm.GmmClassifier):
        return model.log_scores(X)
    if isinstance(model, rbf.RbfNetwork):
        return model.scores(X)
    if isinstance(model, ofs_rbf.OvrEnsemble):
        return model.outputs(X)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def boundary_grid(model, grid: GridSpec):
    P = grid.points()
    S = class_scores(model, P)
    return P, np.argmax(S, axis=1), np.max(S, axis=1)


def export_boundary_grid(model, grid: GridSpec, out) -> Path:
    P, labels, score = boundary_grid(model, grid)
    out = Path(out)
    try:
        fh = out.open("w", newline="")
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc}") from None
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("x1", "x2", "label", "score"))
        for (a, b), lab, s in zip(P, labels, score):
            w.writerow((f"{a:.6f}", f"{b:.6f}", int(lab), f"{s:.10g}"))
    return out


# ---------------------------------------------------------------------------
# CSV writers


def _pct(x: float) -> str:
    return f"{x:.2f}"


def _sec(x: float) -> str:
    return f"{x:.6f}"


def _writer(path):
    fh = Path(path).open("w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_results(results: Sequence[RunResult], path) -> None:
    names = [n for n, _ in results[0].params] if results else []
    fh, w = _writer(path)
    with fh:
        w.writerow(("model", *names, "seed", "train_rate", "test_rate", *TIMING_COLUMNS))
        for r in results:
            w.writerow((r.model, *r.key, r.seed, _pct(r.train_rate), _pct(r.test_rate),
                        _sec(r.train_time), _sec(r.test_time)))


def write_curve(results: Sequence[RunResult], path) -> None:
    names = [n for n, _ in results[0].params] if results else []
    fh, w = _writer(path)
    with fh:
        w.writerow((*names, "runs", "train_rate", "test_rate", *TIMING_COLUMNS))
        for row in mean_curve(results):
            *key, n, tr, te, ttr, tte = row
            w.writerow((*key, n, _pct(tr), _pct(te), _sec(ttr), _sec(tte)))


def write_ofs(run: OfsRun, path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(("class", "neurons", "lambda", "train_acc", "test_acc", "train_time"))
        for c, n, lam, tr, te, t in run.class_rows():
            w.writerow((c, n, f"{lam:.6g}", _pct(tr), _pct(te), _sec(t)))
        ens = run.ensemble
        w.writerow(("average", f"{ens.mean_neurons:.1f}", "", _pct(ens.mean_train_acc),
                    _pct(ens.mean_test_acc), _sec(float(np.mean(ens.train_times)))))


def write_ofs_summary(run: OfsRun, path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(("metric", "value"))
        w.writerow(("mean_binary_train_acc", _pct(run.ensemble.mean_train_acc)))
        w.writerow(("mean_binary_test_acc", _pct(run.ensemble.mean_test_acc)))
        w.writerow(("multiclass_train_rate", _pct(run.multiclass_train)))
        w.writerow(("multiclass_test_rate", _pct(run.multiclass_test)))
        w.writerow(("mean_neurons", f"{run.ensemble.mean_neurons:.1f}"))


def write_comparison(rows: Sequence[tuple], path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(("model", "train_rate", "test_rate", "avg_rate", *TIMING_COLUMNS))
        for m, tr, te, avg, ttr, tte in rows:
            w.writerow((m, _pct(tr), _pct(te), _pct(avg), _sec(ttr), _sec(tte)))


def strip_timing(path) -> str:
    """CSV text with the timing columns removed, for golden-file comparison."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return ""
    keep = [i for i, h in enumerate(rows[0]) if h not in TIMING_COLUMNS]
    return "\n".join(",".join(r[i] for i in keep if i < len(r)) for r in rows) + "\n"

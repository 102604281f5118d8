"""Two-feature, ten-class vowel data: loading, summaries, synthesis and splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DataError

N_CLASSES = 10
CSV_HEADER = ("x1", "x2", "label")
STAT_NAMES = ("Average", "Mode", "Median", "Std Dev", "Max", "Min")
ROLES = ("training", "testing")


@dataclass(frozen=True)
class LabeledPoint:
    x1: float
    x2: float
    label: int

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise DataError(f"non-finite feature in {self!r}")
        if not 0 <= self.label < N_CLASSES:
            raise DataError(f"label {self.label} outside 0..{N_CLASSES - 1}")


@dataclass(frozen=True)
class Dataset:
    """Ordered, immutable collection of labeled 2-D points.

    ``X`` and ``y`` are array views built once on first access; the point
    order is exactly the order the data was loaded or generated in.
    """

    points: tuple[LabeledPoint, ...]
    role: str = "training"

    def __post_init__(self):
        if not self.points:
            raise DataError("dataset is empty")
        if self.role not in ROLES:
            raise DataError(f"unknown dataset role {self.role!r}")

    @classmethod
    def from_arrays(cls, X, y, role: str = "training") -> "Dataset":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.ndim != 2 or X.shape[1] != 2 or len(X) != len(y):
            raise DataError(f"expected X of shape (n, 2) matching y, got {X.shape} and {y.shape}")
        pts = tuple(LabeledPoint(float(a), float(b), int(c)) for (a, b), c in zip(X, y))
        return cls(pts, role)

    def __len__(self) -> int:
        return len(self.points)

    @cached_property
    def X(self) -> np.ndarray:
        arr = np.array([(p.x1, p.x2) for p in self.points], dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def y(self) -> np.ndarray:
        arr = np.array([p.label for p in self.points], dtype=int)
        arr.flags.writeable = False
        return arr

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=N_CLASSES)

    def classes(self) -> list[int]:
        return sorted(set(int(c) for c in self.y))

    def with_role(self, role: str) -> "Dataset":
        return Dataset(self.points, role)


# ---------------------------------------------------------------------------
# CSV I/O


def load_csv(path, role: str = "training", one_based: bool = False) -> Dataset:
    """Read ``x1,x2,label`` rows into a :class:`Dataset`.

    A header line is optional. ``one_based=True`` accepts files labelled
    1..10 and shifts them to 0..9. Errors name the 1-based line number.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such data file: {path}")
    shift = 1 if one_based else 0
    points = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not f.strip() for f in row):
                continue
            if lineno == 1 and [f.strip().lower() for f in row] == list(CSV_HEADER):
                continue
            if len(row) != 3:
                raise DataError(f"expected 3 fields, got {len(row)} at line {lineno}")
            try:
                x1, x2 = float(row[0]), float(row[1])
            except ValueError:
                raise DataError(f"non-numeric feature at line {lineno}") from None
            if not (math.isfinite(x1) and math.isfinite(x2)):
                raise DataError(f"non-finite feature at line {lineno}")
            try:
                raw = float(row[2])
            except ValueError:
                raise DataError(f"non-numeric label at line {lineno}") from None
            if raw != int(raw):
                raise DataError(f"non-integer label at line {lineno}")
            label = int(raw) - shift
            if not 0 <= label < N_CLASSES:
                raise DataError(f"label out of range at line {lineno}")
            points.append(LabeledPoint(x1, x2, label))
    if not points:
        raise DataError(f"no data rows in {path}")
    return Dataset(tuple(points), role)


def write_csv(ds: Dataset, path) -> None:
    # repr() round-trips float64 exactly
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for p in ds.points:
            w.writerow((repr(p.x1), repr(p.x2), p.label))


# ---------------------------------------------------------------------------
# Descriptive statistics


@dataclass(frozen=True)
class FeatureSummary:
    average: float
    mode: float
    median: float
    std_dev: float
    max: float
    min: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.average, self.mode, self.median, self.std_dev, self.max, self.min)


@dataclass(frozen=True)
class FeatureStats:
    x1: FeatureSummary
    x2: FeatureSummary

    def rows(self) -> list[tuple[str, float, float]]:
        """(stat, x1, x2) rows in the conventional table order."""
        return list(zip(STAT_NAMES, self.x1.as_tuple(), self.x2.as_tuple()))


def _summarize(values: np.ndarray) -> FeatureSummary:
    n = len(values)
    uniq, counts = np.unique(values, return_counts=True)
    # np.unique sorts, so argmax lands on the smallest of the tied values
    mode = float(uniq[np.argmax(counts)])
    std = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return FeatureSummary(
        average=float(np.mean(values)),
        mode=mode,
        median=float(np.median(values)),
        std_dev=std,
        max=float(np.max(values)),
        min=float(np.min(values)),
    )


def descriptive_stats(ds: Dataset) -> FeatureStats:
    """Average, mode, median, sample std dev, max and min of each feature.

    Sorting first makes the result independent of point order down to the
    last bit of the floating-point sums.
    """
    if len(ds) == 0:
        raise DataError("cannot summarize an empty dataset")
    X = ds.X
    return FeatureStats(_summarize(np.sort(X[:, 0])), _summarize(np.sort(X[:, 1])))


def write_stats_csv(stats: FeatureStats, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("stat", "x1", "x2"))
        for name, a, b in stats.rows():
            w.writerow((name, f"{a:.2f}", f"{b:.2f}"))


# ---------------------------------------------------------------------------
# Synthetic data


@dataclass(frozen=True)
class ClassSpec:
    mean: tuple[float, float]
    cov: tuple[tuple[float, float], tuple[float, float]]
    count: int


@dataclass(frozen=True)
class SyntheticSpec:
    classes: tuple[ClassSpec, ...]
    rng_seed: int = 0

    def validate(self) -> None:
        if len(self.classes) != N_CLASSES:
            raise DataError(f"expected {N_CLASSES} class specs, got {len(self.classes)}")
        for c, cs in enumerate(self.classes):
            if cs.count < 1:
                raise DataError(f"class {c}: count must be >= 1")
            cov = np.asarray(cs.cov, dtype=float)
            if cov.shape != (2, 2) or not np.allclose(cov, cov.T, rtol=0, atol=0):
                raise DataError(f"class {c}: covariance must be a symmetric 2x2 matrix")
            if np.any(np.linalg.eigvalsh(cov) <= 0):
                raise DataError(f"class {c}: covariance is not positive definite")


def synthesize(spec: SyntheticSpec, role: str = "training") -> Dataset:
    """Draw each class from its 2-D Gaussian, in class order then draw order."""
    spec.validate()
    rng = np.random.default_rng(spec.rng_seed)
    Xs, ys = [], []
    for c, cs in enumerate(spec.classes):
        L = np.linalg.cholesky(np.asarray(cs.cov, dtype=float))
        z = rng.standard_normal((cs.count, 2))
        Xs.append(np.asarray(cs.mean, dtype=float) + z @ L.T)
        ys.append(np.full(cs.count, c))
    return Dataset.from_arrays(np.vstack(Xs), np.concatenate(ys), role)


def separated_spec(count: int = 20, spacing: float = 100.0, sigma: float = 1.0,
                   rng_seed: int = 0) -> SyntheticSpec:
    """Ten isotropic classes on a 5x2 lattice, ``spacing / sigma`` std devs apart."""
    classes = tuple(
        ClassSpec(mean=((c % 5) * spacing, (c // 5) * spacing),
                  cov=((sigma ** 2, 0.0), (0.0, sigma ** 2)), count=count)
        for c in range(N_CLASSES)
    )
    return SyntheticSpec(classes, rng_seed)


# ---------------------------------------------------------------------------
# Stratified split


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def stratified_split(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split every class by ``train_fraction``; both outputs keep input order."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must lie strictly between 0 and 1")
    counts = ds.class_counts()
    small = [c for c in range(N_CLASSES) if 0 < counts[c] < 2]
    if small:
        raise DataError(f"classes {small} have fewer than 2 points")
    rng = np.random.default_rng(seed)
    y = ds.y
    train_mask = np.zeros(len(ds), dtype=bool)
    for c in range(N_CLASSES):
        idx = np.flatnonzero(y == c)
        if len(idx) == 0:
            continue
        n_train = min(max(_round_half_up(train_fraction * len(idx)), 1), len(idx) - 1)
        train_mask[rng.permutation(idx)[:n_train]] = True
    train = tuple(p for p, m in zip(ds.points, train_mask) if m)
    test = tuple(p for p, m in zip(ds.points, train_mask) if not m)
    return Dataset(train, "training"), Dataset(test, "testing")


# ---------------------------------------------------------------------------
# Built-in stand-in for the 338/333 vowel split
#
# Class centres are F1/F2 averages (Hz) of ten English vowels over adult male
# and female speakers. Spreads are 16% (F1) and 11% (F2) of the centre with a
# 0.55 correlation. The per-feature affine map and the two seeds were chosen
# so that descriptive_stats of the generated sets land within 5% of the
# published training/testing summaries (mode excluded: continuous draws have
# no repeated values).

_STANDIN_FORMANTS = (
    (290.0, 2540.0), (410.0, 2235.0), (570.0, 2085.0), (760.0, 1885.0),
    (640.0, 1295.0), (790.0, 1155.0), (580.0, 880.0), (455.0, 1090.0),
    (335.0, 910.0), (495.0, 1495.0),
)
_STANDIN_REL_SD = (0.16, 0.11)
_STANDIN_CORR = 0.55
_STANDIN_AFFINE = ((1.19257981, -60.04151498), (1.149404, -261.95854896))
STANDIN_COUNTS = {"training": (34,) * 8 + (33,) * 2, "testing": (34,) * 3 + (33,) * 7}
STANDIN_SEEDS = {"training": 1312, "testing": 823}


def standin_spec(role: str = "training") -> SyntheticSpec:
    (a1, b1), (a2, b2) = _STANDIN_AFFINE
    classes = []
    for (m1, m2), n in zip(_STANDIN_FORMANTS, STANDIN_COUNTS[role]):
        sd1 = _STANDIN_REL_SD[0] * m1 * a1
        sd2 = _STANDIN_REL_SD[1] * m2 * a2
        off = _STANDIN_CORR * sd1 * sd2
        classes.append(ClassSpec((a1 * m1 + b1, a2 * m2 + b2), ((sd1 * sd1, off), (off, sd2 * sd2)), n))
    return SyntheticSpec(tuple(classes), STANDIN_SEEDS[role])


def standin_datasets() -> tuple[Dataset, Dataset]:
    """Synthetic (training, testing) pair shaped like the published 338/333 split."""
    return synthesize(standin_spec("training"), "training"), synthesize(standin_spec("testing"), "testing")

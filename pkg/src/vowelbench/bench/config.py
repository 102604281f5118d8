"""Flat ``section.key = value`` configuration for the benchmark CLI.

Grammar, one setting per line::

    # comment
    gmm.centers = 1..10        # inclusive integer range
    gmm.kinds = diag, full     # comma-separated list
    run.seed = 7

A line ``[section]`` prefixes the bare keys that follow it, so ``[gmm]``
followed by ``centers = 1..3`` is the same as ``gmm.centers = 1..3``.
Unknown keys are rejected. Command-line values override the file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from ..ofs_rbf import OfsConfig
from .harness import DEFAULT_GRID, GridSpec, seeds_from_master


class ConfigError(ValueError):
    pass


def parse_int_list(text: str) -> tuple[int, ...]:
    out = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        m = re.fullmatch(r"(-?\d+)\s*\.\.\s*(-?\d+)", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise ConfigError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            try:
                out.append(int(part))
            except ValueError:
                raise ConfigError(f"expected integer or lo..hi range, got {part!r}") from None
    if not out:
        raise ConfigError(f"empty integer list {text!r}")
    return tuple(out)


def parse_range(text: str) -> tuple[float, float]:
    m = re.fullmatch(r"\s*(-?[\d.eE+-]+)\s*\.\.\s*(-?[\d.eE+-]+)\s*", text)
    if not m:
        raise ConfigError(f"expected lo..hi, got {text!r}")
    return float(m.group(1)), float(m.group(2))


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _parse_kinds(text: str) -> tuple[str, ...]:
    kinds = tuple(sorted({k.strip() for k in text.split(",") if k.strip()}))
    bad = [k for k in kinds if k not in ("diag", "full")]
    if bad or not kinds:
        raise ConfigError(f"covariance kinds must be drawn from diag, full; got {text!r}")
    return kinds


def _parse_opt_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "auto", "none") else _parse_float(text)


# key -> (attribute, parser)
_KEYS = {
    "data.train": ("train", str),
    "data.test": ("test", str),
    "data.one_based": ("one_based", parse_bool),
    "run.seed": ("seed", _parse_int),
    "run.repeats": ("repeats", _parse_int),
    "run.out": ("out", str),
    "gmm.centers": ("gmm_centers", parse_int_list),
    "gmm.kinds": ("gmm_kinds", _parse_kinds),
    "gmm.restarts": ("gmm_restarts", _parse_int),
    "gmm.max_iterations": ("gmm_max_iterations", _parse_int),
    "gmm.tolerance": ("gmm_tolerance", _parse_float),
    "gmm.floor": ("gmm_floor", _parse_float),
    "rbf.neurons": ("rbf_neurons", parse_int_list),
    "rbf.width": ("rbf_width", _parse_opt_float),
    "rbf.normalize": ("rbf_normalize", parse_bool),
    "ofs.max_neurons": ("ofs_max_neurons", _parse_int),
    "ofs.n_spreads": ("ofs_n_spreads", _parse_int),
    "ofs.spread_lo": ("ofs_spread_lo", _parse_float),
    "ofs.spread_hi": ("ofs_spread_hi", _parse_float),
    "ofs.threshold": ("ofs_threshold", _parse_float),
    "boundary.model": ("boundary_model", str),
    "boundary.gmm_kind": ("boundary_gmm_kind", str),
    "boundary.gmm_k": ("boundary_gmm_k", _parse_int),
    "boundary.rbf_neurons": ("boundary_rbf_neurons", _parse_int),
    "grid.x1": ("grid_x1", parse_range),
    "grid.x2": ("grid_x2", parse_range),
    "grid.points": ("grid_points", _parse_int),
}


@dataclass(frozen=True)
class BenchConfig:
    train: Optional[str] = None
    test: Optional[str] = None
    one_based: bool = False
    seed: int = 0
    repeats: int = 1
    out: str = "results"
    gmm_centers: tuple[int, ...] = tuple(range(1, 11))
    gmm_kinds: tuple[str, ...] = ("diag", "full")
    gmm_restarts: int = 5
    gmm_max_iterations: int = 200
    gmm_tolerance: float = 1e-6
    gmm_floor: float = 1e-4
    rbf_neurons: tuple[int, ...] = tuple(range(1, 37))
    rbf_width: Optional[float] = None
    rbf_normalize: bool = False
    ofs_max_neurons: int = 36
    ofs_n_spreads: int = 8
    ofs_spread_lo: float = 0.1
    ofs_spread_hi: float = 4.0
    ofs_threshold: float = 0.5
    boundary_model: str = "gmm"
    boundary_gmm_kind: str = "full"
    boundary_gmm_k: int = 2
    boundary_rbf_neurons: int = 15
    grid_x1: tuple[float, float] = (DEFAULT_GRID.x1_lo, DEFAULT_GRID.x1_hi)
    grid_x2: tuple[float, float] = (DEFAULT_GRID.x2_lo, DEFAULT_GRID.x2_hi)
    grid_points: int = 200

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError("run.repeats must be >= 1")
        if self.boundary_model not in ("gmm", "rbf", "ofs_rbf"):
            raise ConfigError(f"boundary.model must be gmm, rbf or ofs_rbf; got {self.boundary_model!r}")
        if self.boundary_gmm_kind not in ("diag", "full"):
            raise ConfigError("boundary.gmm_kind must be diag or full")
        if self.grid_points < 2:
            raise ConfigError("grid.points must be >= 2")

    @property
    def seeds(self) -> tuple[int, ...]:
        return seeds_from_master(self.seed, self.repeats)

    @property
    def em_options(self) -> dict:
        return dict(n_restarts=self.gmm_restarts, max_iterations=self.gmm_max_iterations,
                    log_likelihood_tolerance=self.gmm_tolerance, covariance_floor=self.gmm_floor)

    @property
    def rbf_options(self) -> dict:
        return dict(width=self.rbf_width, normalize=self.rbf_normalize)

    def ofs_config(self) -> OfsConfig:
        return OfsConfig(n_spreads=self.ofs_n_spreads, spread_lo=self.ofs_spread_lo,
                         spread_hi=self.ofs_spread_hi, max_neurons=self.ofs_max_neurons,
                         threshold=self.ofs_threshold)

    def grid(self) -> GridSpec:
        return GridSpec.from_counts(self.grid_x1, self.grid_x2, self.grid_points, self.grid_points)

    def with_settings(self, settings: dict[str, str]) -> "BenchConfig":
        updates = {}
        for key, raw in settings.items():
            if key not in _KEYS:
                raise ConfigError(f"unknown configuration key {key!r}")
            attr, parse = _KEYS[key]
            updates[attr] = parse(raw)
        try:
            return replace(self, **updates)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


def parse_config_text(text: str) -> dict[str, str]:
    settings = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"\[([A-Za-z_]+)\]", line)
        if m:
            section = m.group(1) + "."
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." not in key:
            key = section + key
        settings[key] = value
    return settings


def load_config(path, base: BenchConfig = BenchConfig()) -> BenchConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"no such config file: {p}")
    return base.with_settings(parse_config_text(p.read_text()))

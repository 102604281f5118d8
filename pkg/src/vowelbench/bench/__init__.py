"""Benchmark harness and command-line interface."""

from .harness import (DEFAULT_GRID, GridSpec, RunResult, best_configuration, compare_models,
                      export_boundary_grid, recognition_rate, run_ofs, sweep_gmm, sweep_rbf, timed)

__all__ = ["DEFAULT_GRID", "GridSpec", "RunResult", "best_configuration", "compare_models",
           "export_boundary_grid", "recognition_rate", "run_ofs", "sweep_gmm", "sweep_rbf", "timed"]

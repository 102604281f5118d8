"""Command-line entry point: ``vowelbench <subcommand> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import gmm, modelio, rbf
from ..dataset import (descriptive_stats, load_csv, standin_datasets, standin_spec, synthesize,
                       write_csv, write_stats_csv)
from ..errors import DataError, NumericalError
from . import harness
from .config import BenchConfig, ConfigError, load_config

log = logging.getLogger("vowelbench")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train", help="training CSV (x1,x2,label); default: built-in synthetic stand-in")
    p.add_argument("--test", help="testing CSV; default: built-in synthetic stand-in")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int, help="master seed (per-run seeds are seed*1000 + run index)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one configuration key, e.g. gmm.centers=1..4")
    p.add_argument("--one-based", action="store_true", help="input labels are 1..10")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vowelbench", description="GMM / RBF / forward-selection RBF vowel benchmark")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "stats": "descriptive statistics of the training and testing data",
        "sweep-gmm": "GMM sweep over centers and covariance kinds",
        "sweep-rbf": "standard RBF sweep over hidden neurons",
        "run-ofs": "one-vs-rest forward-selection RBF",
        "compare": "run all three pipelines and tabulate their best configurations",
        "boundary": "export a decision-boundary grid for one trained model",
        "synth": "write the synthetic stand-in training/testing CSVs",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        _common(p)
        if name == "boundary":
            p.add_argument("--model", choices=harness.MODELS, help="model to train (default from config)")
            p.add_argument("--save-model", metavar="PATH", help="also write the trained model file")
    return parser


def resolve_config(args) -> BenchConfig:
    cfg = load_config(args.config) if args.config else BenchConfig()
    settings = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        settings[k.strip()] = v.strip()
    cfg = cfg.with_settings(settings)
    flags = {"train": args.train, "test": args.test, "seed": args.seed, "out": args.out}
    updates = {k: v for k, v in flags.items() if v is not None}
    if args.one_based:
        updates["one_based"] = True
    if getattr(args, "model", None):
        updates["boundary_model"] = args.model
    return replace(cfg, **updates)


def load_data(cfg: BenchConfig):
    if (cfg.train is None) != (cfg.test is None):
        raise ConfigError("give both --train and --test, or neither for the synthetic stand-in")
    if cfg.train is None:
        log.warning("no data files given; using the synthetic stand-in dataset")
        return standin_datasets()
    return (load_csv(cfg.train, "training", cfg.one_based), load_csv(cfg.test, "testing", cfg.one_based))


def _out_dir(cfg: BenchConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from None
    return out


# ---------------------------------------------------------------------------


def cmd_stats(cfg, out):
    train, test = load_data(cfg)
    for ds in (train, test):
        path = out / f"stats_{ds.role}.csv"
        write_stats_csv(descriptive_stats(ds), path)
        print(f"wrote {path}")


def _gmm(cfg, out, train, test):
    results = harness.sweep_gmm(train, test, cfg.gmm_centers, cfg.gmm_kinds, cfg.seeds, cfg.em_options)
    harness.write_results(results, out / "results_gmm.csv")
    harness.write_curve(results, out / "curve_gmm.csv")
    best = harness.best_configuration(results)
    print(f"gmm best: kind={best.param('kind')} k={best.param('k')} "
          f"train={best.train_rate:.2f}% test={best.test_rate:.2f}%")
    return best


def _rbf(cfg, out, train, test):
    results = harness.sweep_rbf(train, test, cfg.rbf_neurons, cfg.seeds, cfg.rbf_options)
    harness.write_results(results, out / "results_rbf.csv")
    harness.write_curve(results, out / "curve_rbf.csv")
    best = harness.best_configuration(results)
    print(f"rbf best: neurons={best.param('neurons')} "
          f"train={best.train_rate:.2f}% test={best.test_rate:.2f}%")
    return best


def _ofs(cfg, out, train, test):
    run = harness.run_ofs(train, test, cfg.ofs_config())
    harness.write_ofs(run, out / "results_ofs.csv")
    harness.write_ofs_summary(run, out / "summary_ofs.csv")
    print(f"ofs_rbf: mean binary train={run.result.train_rate:.2f}% test={run.result.test_rate:.2f}% "
          f"(10-class argmax test={run.multiclass_test:.2f}%)")
    return run.result


def cmd_sweep_gmm(cfg, out):
    _gmm(cfg, out, *load_data(cfg))


def cmd_sweep_rbf(cfg, out):
    _rbf(cfg, out, *load_data(cfg))


def cmd_run_ofs(cfg, out):
    _ofs(cfg, out, *load_data(cfg))


def cmd_compare(cfg, out):
    train, test = load_data(cfg)
    best = {"gmm": _gmm(cfg, out, train, test),
            "rbf": _rbf(cfg, out, train, test),
            "ofs_rbf": _ofs(cfg, out, train, test)}
    rows = harness.compare_models(best)
    harness.write_comparison(rows, out / "comparison.csv")
    for m, tr, te, avg, *_ in rows:
        print(f"{m:8s} train={tr:6.2f}% test={te:6.2f}% avg={avg:6.2f}%")


def cmd_boundary(cfg, out, save_model=None):
    train, test = load_data(cfg)
    name = cfg.boundary_model
    seed = cfg.seeds[0]
    if name == "gmm":
        model = gmm.fit_classifier(train, gmm.EmConfig(k=cfg.boundary_gmm_k, rng_seed=seed, **cfg.em_options),
                                   cfg.boundary_gmm_kind)
    elif name == "rbf":
        model, _ = rbf.train(train, rbf.RbfConfig(hidden_neurons=cfg.boundary_rbf_neurons, rng_seed=seed,
                                                  **cfg.rbf_options))
    else:
        model = harness.run_ofs(train, test, cfg.ofs_config()).ensemble
    path = harness.export_boundary_grid(model, cfg.grid(), out / f"boundary_{name}.csv")
    print(f"wrote {path}")
    if save_model:
        modelio.save(model, save_model)
        print(f"wrote {save_model}")


def cmd_synth(cfg, out, seed_given=False):
    if seed_given:
        tr = synthesize(replace(standin_spec("training"), rng_seed=cfg.seed), "training")
        te = synthesize(replace(standin_spec("testing"), rng_seed=cfg.seed + 1), "testing")
    else:
        tr, te = standin_datasets()
    for ds, name in ((tr, "train.csv"), (te, "test.csv")):
        write_csv(ds, out / name)
        print(f"wrote {out / name} ({len(ds)} rows)")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        out = _out_dir(cfg)
        cmd = args.command
        if cmd == "boundary":
            cmd_boundary(cfg, out, args.save_model)
        elif cmd == "synth":
            cmd_synth(cfg, out, seed_given=args.seed is not None)
        else:
            {"stats": cmd_stats, "sweep-gmm": cmd_sweep_gmm, "sweep-rbf": cmd_sweep_rbf,
             "run-ofs": cmd_run_ofs, "compare": cmd_compare}[cmd](cfg, out)
    except ConfigError as exc:
        print(f"vowelbench: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"vowelbench: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"vowelbench: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

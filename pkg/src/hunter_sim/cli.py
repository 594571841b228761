"""Command line entry point.

    hunter-sim run --config exp.yaml [--scheduler S] [--seed N] [--out DIR]
    hunter-sim pretrain --config exp.yaml [--out DIR]
    hunter-sim report --in DIR

The output directory is ``--out`` if given, else ``$HUNTER_OUT_DIR``,
else ``output_dir`` from the config.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .harness import Setup, pretrain_surrogate, report, run_experiment
from .plots import emit_plots
from .surrogate import save_model

SCHEDULERS = ("hunter", "random", "bestfit")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hunter-sim", description="Discrete-interval datacenter scheduling simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV results")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--scheduler", choices=SCHEDULERS + ("all",),
                     help="override the configured scheduler; 'all' runs every scheduler")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", type=Path)
    run.add_argument("--no-plots", action="store_true")

    pre = sub.add_parser("pretrain", help="collect a random-scheduler dataset and pre-train the surrogate")
    pre.add_argument("--config", required=True, type=Path)
    pre.add_argument("--seed", type=int)
    pre.add_argument("--out", type=Path)

    rep = sub.add_parser("report", help="recompute summaries and plots from intervals.csv")
    rep.add_argument("--in", dest="in_dir", required=True, type=Path)
    rep.add_argument("--no-plots", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            scheduler = None if args.scheduler == "all" else args.scheduler
            cfg = load_config(args.config, seed=args.seed, scheduler=scheduler)
            out = cfg.resolve_output_dir(args.out)
            names = list(SCHEDULERS) if args.scheduler == "all" else [cfg.scheduler]
            result = run_experiment(cfg, out, schedulers=names)
            if not args.no_plots:
                emit_plots(result)
            for row in result.summary:
                if row["metric"] in ("mean_objective", "mean_aec", "overall_slav"):
                    print(f"{row['scheduler']:8s} {row['metric']:16s} {row['mean']:.4f} +/- {row['std']:.4f}")
            print(f"results written to {out}")
        elif args.command == "pretrain":
            cfg = load_config(args.config, seed=args.seed)
            out = cfg.resolve_output_dir(args.out)
            out.mkdir(parents=True, exist_ok=True)
            model, curve, samples = pretrain_surrogate(cfg, Setup.from_config(cfg))
            save_model(model, out / "model.hggc")
            curve.to_csv(out / "loss_curve.csv")
            print(f"{len(samples)} samples, best epoch {curve.best_epoch}, "
                  f"val mse {curve.val[curve.best_epoch]:.6g} -> {out / 'model.hggc'}")
        else:
            if not (args.in_dir / "intervals.csv").is_file():
                raise ConfigError(f"{args.in_dir} has no intervals.csv")
            result = report(args.in_dir)
            if not args.no_plots:
                emit_plots(result)
            print(f"{len(result.runs)} runs summarised in {args.in_dir}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

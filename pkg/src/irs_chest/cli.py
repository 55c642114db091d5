"""Command-line interface.

Subcommands: gen-data, train, eval, sweep, visualize. All randomness is
seeded explicitly, so re-running any command with the same arguments
reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import bench
from .cdrn.serialize import load_model, save_model
from .cdrn.training import train as train_network
from .channel import sample_channels
from .config import (
    load_net_config,
    load_sweep,
    load_system_config,
    load_train_config,
)
from .data import generate_dataset, load_dataset, noise_var_for_snr, save_dataset
from .estimators import ls_estimate
from .linalg import SeededRng
from .pilots import DFT, direct_observation, make_book
from .visualize import visualize_denoising

_KIND_CHOICES = ("snr", "n", "m", "c")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irs-chest",
        description="Channel-estimation workbench for IRS-assisted multi-user uplinks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a training set")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--snr-db", required=True, type=float)
    p.add_argument("--count", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True, help="output dataset file")

    p = sub.add_parser("train", help="train a denoising model on a dataset")
    p.add_argument("--data", required=True, help="dataset file from gen-data")
    p.add_argument("--net-config", required=True, help="JSON network config")
    p.add_argument("--train-config", required=True, help="JSON training config")
    p.add_argument("--out", required=True, help="output model file")

    p = sub.add_parser("eval", help="evaluate LS and a trained model at one SNR")
    p.add_argument("--model", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--snr-db", required=True, type=float)
    p.add_argument("--trials", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)

    p = sub.add_parser("sweep", help="Monte Carlo NMSE sweep to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--kind", required=True, choices=_KIND_CHOICES)
    p.add_argument("--out", required=True, help="output CSV file")

    p = sub.add_parser("visualize", help="emit per-block denoising images")
    p.add_argument("--model", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out-dir", required=True)
    return parser


def _cmd_gen_data(args) -> int:
    cfg = load_system_config(args.config)
    dataset = generate_dataset(cfg, args.snr_db, args.count, args.seed)
    save_dataset(dataset, args.out)
    print(f"wrote {dataset.count} examples to {args.out}")
    return 0


def _cmd_train(args) -> int:
    dataset = load_dataset(args.data)
    net_cfg = load_net_config(args.net_config)
    train_cfg = load_train_config(args.train_config)
    result = train_network(dataset, net_cfg, train_cfg)
    save_model(result.model, args.out)
    print(f"trained {train_cfg.epochs} epochs on {dataset.count} examples "
          f"(SNR {dataset.snr_db:g} dB)")
    print(f"train loss {result.train_losses[0]:.6g} -> {result.train_losses[-1]:.6g}, "
          f"best validation loss {min(result.val_losses):.6g} at epoch {result.best_epoch}")
    print(f"wrote model to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    cfg = load_system_config(args.config)
    cfg = dataclasses.replace(cfg, noise_var=noise_var_for_snr(cfg.tx_power, args.snr_db))
    model = load_model(args.model)
    models = {float(bench.point_snr_db(cfg)): model}
    stats = bench.evaluate_point(cfg, [bench.LS, bench.CDRN], args.trials,
                                 args.seed, 0, models)
    rows = []
    for label in (bench.LS, bench.CDRN):
        stat = stats[label]
        rows.append(bench.ResultRow(
            swept_var="snr_db", value=float(args.snr_db), estimator=label,
            nmse_linear=stat.nmse, nmse_db=10.0 * float(np.log10(stat.nmse)),
            nmse_direct_db=10.0 * float(np.log10(stat.nmse_direct)),
            nmse_cascaded_db=10.0 * float(np.log10(stat.nmse_cascaded)),
            trials=args.trials, seed=args.seed,
        ))
    sys.stdout.write(bench.format_rows(rows))
    return 0


def _cmd_sweep(args) -> int:
    spec, model_paths = load_sweep(args.config, args.kind)
    models = {snr: load_model(path) for snr, path in model_paths.items()}
    rows = bench.run_sweep(spec, models)
    bench.write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_visualize(args) -> int:
    model = load_model(args.model)
    cfg = load_system_config(args.config)
    if np.isfinite(model.trained_snr_db):
        cfg = dataclasses.replace(
            cfg, noise_var=noise_var_for_snr(cfg.tx_power, model.trained_snr_db))
    book = make_book(cfg, DFT)
    rng = SeededRng(args.seed)
    chan = sample_channels(cfg, rng)
    obs = direct_observation(chan.composite[0], book.patterns, cfg.noise_var, rng)
    coarse = ls_estimate(obs.received, book.patterns)
    paths = visualize_denoising(model, coarse, args.out_dir)
    for path in paths:
        print(path)
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "visualize": _cmd_visualize,
}


def cli_main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()

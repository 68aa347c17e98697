"""Command-line entry point: ``sfd <command> [options]``.

Precedence is command-line flag > config file > built-in default. Exit codes:
0 success, 1 contract failure, 2 missing dependency, 3 config error,
4 divergence.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from . import config as config_mod
from .artifacts import compressor_entries, compressor_from_entries, load_samples, save_samples
from .composite import FoundationEncoder, foundation_features
from .data import generate, load_dataset, save_dataset
from .errors import ConfigError, DependencyError, DivergenceError, SfdError
from .evaluation import (SweepSpec, class_balanced_generate, delta_t_sweep, evaluate, generate_class,
                         gnuplot_script, write_sweep_csv)
from .numerics import Rng
from .semvae import fit_pca, reconstruction_cosine, train_semvae
from .train import model_from_entries, train_sfd

log = logging.getLogger("sfd")

EXIT_OK, EXIT_CONTRACT, EXIT_DEPENDENCY, EXIT_CONFIG, EXIT_DIVERGENCE = 0, 1, 2, 3, 4

DEFAULT_OUT = {
    "gen-data": "dataset.csv",
    "train-semvae": "semvae.ckpt",
    "train-sfd": "sfd.ckpt",
    "sample": "samples.csv",
    "eval": "metrics.csv",
    "sweep": "sweep",
}


def _label(text: str):
    if text.lower() == "null":
        return "null"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"label must be an integer or 'null', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value config file")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--out", type=Path, help="output path")
    common.add_argument("--jobs", type=int, default=1, help="concurrent sweep cells")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sfd", description="Semantic-first flow matching on toy data.")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-data", parents=[common], help="write the toy dataset")

    s = sub.add_parser("train-semvae", parents=[common], help="fit the semantic compressor")
    s.add_argument("--data", type=Path, default=Path("dataset.csv"))
    s.add_argument("--compressor", choices=("vae", "pca"))

    s = sub.add_parser("train-sfd", parents=[common], help="train the dual-timestep denoiser")
    s.add_argument("--data", type=Path, default=Path("dataset.csv"))
    s.add_argument("--semvae", type=Path, default=Path("semvae.ckpt"))
    s.add_argument("--log", type=Path, help="training log CSV (default: <out>.log.csv)")
    s.add_argument("--resume", type=Path, help="checkpoint to continue from")
    s.add_argument("--iterations", type=int)
    s.add_argument("--delta-t", type=float)

    s = sub.add_parser("sample", parents=[common], help="generate samples from a checkpoint")
    s.add_argument("--checkpoint", type=Path, default=Path("sfd.ckpt"))
    s.add_argument("--weak", type=Path, help="weaker checkpoint for guidance")
    s.add_argument("--label", type=_label, help="class index or 'null'; default: class-balanced")
    s.add_argument("--n", type=int, help="number of samples for a single label")
    s.add_argument("--per-class", type=int)
    s.add_argument("--steps", type=int)
    s.add_argument("--method", choices=("euler", "adaptive"))
    s.add_argument("--guidance-scale", type=float)
    s.add_argument("--delta-t", type=float)

    s = sub.add_parser("eval", parents=[common], help="score samples against held-out data")
    s.add_argument("--data", type=Path, default=Path("dataset.csv"))
    s.add_argument("--samples", type=Path, default=Path("samples.csv"))
    s.add_argument("--baseline", action="store_true", help="score one half of the held-out set against the other")

    s = sub.add_parser("sweep", parents=[common], help="train and score one model per (delta_t, seed)")
    s.add_argument("--data", type=Path, default=Path("dataset.csv"))
    s.add_argument("--deltas")
    s.add_argument("--seeds")
    s.add_argument("--iterations", type=int)
    return p


def _config(args) -> config_mod.Config:
    cfg = config_mod.load(args.config)
    over = {"seed": args.seed}
    if getattr(args, "compressor", None):
        over["semvae.compressor"] = args.compressor
    if getattr(args, "iterations", None) is not None:
        over["train.iterations"] = args.iterations
    if args.command == "train-sfd" and args.delta_t is not None:
        over["train.delta_t"] = args.delta_t
    if args.command == "sample":
        over.update({"sample.steps": args.steps, "sample.method": args.method,
                     "sample.guidance_scale": args.guidance_scale, "sample.delta_t": args.delta_t,
                     "sample.per_class": args.per_class, "sample.n": args.n})
    if args.command == "sweep":
        over.update({"eval.deltas": args.deltas, "eval.seeds": args.seeds})
    return cfg.with_overrides(over).check()


def _out(args) -> Path:
    return args.out if args.out is not None else Path(DEFAULT_OUT[args.command])


def cmd_gen_data(args, cfg) -> None:
    out = _out(args)
    save_dataset(generate(cfg.data(), cfg["seed"]), out)
    log.info("wrote %s", out)


def cmd_train_semvae(args, cfg) -> None:
    ds = load_dataset(args.data)
    sc = cfg.semvae()
    enc = FoundationEncoder.create(ds.dim, sc.c_in, cfg["semvae.foundation_seed"])
    feats = foundation_features(enc, ds.x_train)
    if cfg["semvae.compressor"] == "pca":
        comp = fit_pca(feats, sc.c_s)
    else:
        comp = train_semvae(sc, feats, Rng(cfg["seed"]).fork(0x5E)).model
        log.info("held-out reconstruction cosine %.5f", reconstruction_cosine(comp, foundation_features(enc, ds.x_test)))
    entries = compressor_entries(enc, comp)
    entries["meta.config"] = ckpt.pack_text(config_mod.serialize(cfg))
    ckpt.save(_out(args), entries)
    log.info("wrote %s", _out(args))


def cmd_train_sfd(args, cfg) -> None:
    ds = load_dataset(args.data)
    enc, comp = compressor_from_entries(ckpt.load(args.semvae))
    from .denoiser import DenoiserConfig

    mcfg = DenoiserConfig(c_s=comp.c_s, c_z=ds.dim, c_in=enc.width, hidden=cfg["model.hidden"],
                          blocks=cfg["model.blocks"], num_classes=ds.components, repa_depth=cfg["model.repa_depth"],
                          time_frequencies=cfg["model.time_frequencies"])
    out = _out(args)
    log_path = args.log if args.log is not None else out.with_name(out.name + ".log.csv")
    resume = ckpt.load(args.resume) if args.resume is not None else None
    state = train_sfd(cfg.train(), ds, comp, enc, mcfg, log_path=log_path, checkpoint_path=out, resume=resume,
                      config_text=config_mod.serialize(cfg))
    if state.losses:
        log.info("final loss %.5f after %d iterations", state.losses[-1][0], state.iteration)


def cmd_sample(args, cfg) -> None:
    entries = ckpt.load(args.checkpoint)
    model = model_from_entries(entries)
    weak = model_from_entries(ckpt.load(args.weak)) if args.weak is not None else None
    scfg = cfg.sampler(trained_delta_t=float(entries["meta.delta_t"][0]))
    seed = cfg["seed"]
    mc = model.cfg
    if args.label is None:
        gen = class_balanced_generate(model, scfg, cfg["sample.per_class"], seed=seed, weak=weak)
        labels, x = [str(v) for v in gen.labels], gen.x
    else:
        lab = model.null_label if args.label == "null" else args.label
        if not 0 <= lab <= model.null_label:
            raise ConfigError(f"--label must be in [0, {mc.num_classes - 1}] or null")
        _, x = generate_class(model, scfg, lab, cfg["sample.n"], seed, mc.c_s, mc.c_z, weak)
        labels = ["null" if lab == model.null_label else str(lab)] * len(x)
    save_samples(_out(args), labels, x)
    log.info("wrote %d samples to %s", len(x), _out(args))


def _write_metrics(path: Path, reports) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("metric", "value", "n_samples", "n_reference", "parameter"))
        for r in reports:
            w.writerow((r.metric, repr(r.value), r.n_a, r.n_b, repr(r.parameter)))


def cmd_eval(args, cfg) -> None:
    ds = load_dataset(args.data)
    bw = cfg["eval.mmd_bandwidth"] or None
    if args.baseline:
        half = ds.n_test // 2
        reports = evaluate(ds.x_test[:half], ds.x_test[half:], bandwidth=bw)
    else:
        _, x = load_samples(args.samples)
        reports = evaluate(x, ds.x_test, bandwidth=bw)
    _write_metrics(_out(args), reports)
    for r in reports:
        print(f"{r.metric} {r.value:.6g}")


def cmd_sweep(args, cfg) -> None:
    ds = load_dataset(args.data)
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    spec = SweepSpec(train=cfg.train(), semvae=cfg.semvae(), sampler=cfg.sampler(),
                     compressor=cfg["semvae.compressor"], foundation_seed=cfg["semvae.foundation_seed"],
                     model_hidden=cfg["model.hidden"], model_blocks=cfg["model.blocks"],
                     repa_depth=cfg["model.repa_depth"], time_frequencies=cfg["model.time_frequencies"],
                     per_class=cfg["sample.per_class"], bandwidth=cfg["eval.mmd_bandwidth"] or None)
    res = delta_t_sweep(spec, cfg.deltas(), cfg.seeds(), ds, jobs=args.jobs)
    write_sweep_csv(res, out / "sweep.csv")
    (out / "sweep.gp").write_text(gnuplot_script("sweep.csv"))
    for (d, m), v in sorted(res.medians().items()):
        print(f"delta_t={d:g} {m} median={v:.6g}")
    for d, s, err in res.failures:
        print(f"delta_t={d:g} seed={s} failed: {err}", file=sys.stderr)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-semvae": cmd_train_semvae,
    "train-sfd": cmd_train_sfd,
    "sample": cmd_sample,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except DependencyError as exc:
        print(f"sfd: missing dependency: {exc}", file=sys.stderr)
        return EXIT_DEPENDENCY
    except ConfigError as exc:
        print(f"sfd: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"sfd: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (SfdError, ValueError, ArithmeticError, OSError) as exc:
        print(f"sfd: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

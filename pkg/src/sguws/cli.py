"""Command-line entry point: ``sguws <command> ...``."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .analysis import evaluate, model_summary, permutation_importance
from .complexity import uws_cyclic, uws_linear
from .dataset import (SplitSpec, build_dataset, default_workers, dumps_csv, fit_scaler, merge_datasets,
                      read_csv, split, xy)
from .generator import ShrinkingGenerator, bits_to_str, sg_full_period
from .gf2poly import enumerate_primitive, parse_polynomial
from .mlp import (DEFAULT_LAYERS, TrainConfig, init_model, model_to_json, predict_uws, read_model_file,
                  train as train_model)

log = logging.getLogger("sguws")


class CliError(Exception):
    pass


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the same directory so a failure never leaves a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


class Run:
    """Collects the record written next to every output: flags, file digests, duration."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.started = time.monotonic()
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []

    def write(self, path, text: str) -> Path:
        write_atomic(path, text)
        self.outputs.append(Path(path))
        return Path(path)

    def manifest(self) -> dict:
        flags = {k: v for k, v in vars(self.args).items() if k != "func"}
        return {
            "tool": "sguws",
            "version": __version__,
            "subcommand": self.args.command_path,
            "flags": {k: (str(v) if isinstance(v, Path) else v) for k, v in flags.items()},
            "inputs": {str(p): sha256_file(p) for p in self.inputs},
            "outputs": {str(p): sha256_file(p) for p in self.outputs},
            "duration_seconds": round(time.monotonic() - self.started, 3),
        }

    def finish(self, manifest_path=None) -> None:
        if not self.outputs:
            return
        target = manifest_path or Path(str(self.outputs[0]) + ".manifest.json")
        write_atomic(target, json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n")

    def rollback(self) -> None:
        for p in self.outputs:
            p.unlink(missing_ok=True)


def _parse_seed(text):
    return None if text is None else int(text, 16)


def _read_bits_arg(value):
    text = value if value is not None else sys.stdin.read()
    text = "".join(text.split())
    if not text or set(text) - {"0", "1"}:
        raise CliError("expected a nonempty string of 0 and 1")
    return text


def _degree_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",") if t]


def cmd_poly_list(args, run):
    for p in enumerate_primitive(args.degree):
        print(f"{p.mask:#x}" if args.format == "mask" else str(p))


def cmd_keystream(args, run):
    a = parse_polynomial(args.input_poly)
    b = parse_polynomial(args.control_poly)
    ia, ib = _parse_seed(args.input_seed), _parse_seed(args.control_seed)
    if args.bits is not None:
        print(bits_to_str(ShrinkingGenerator(a, b, ia, ib).take(args.bits)))
    else:
        print(sg_full_period(a, b, ia, ib))


def cmd_uws(args, run):
    bits = _read_bits_arg(args.bits)
    res = uws_cyclic(bits, args.witness) if args.cyclic else uws_linear(bits, args.witness)
    line = f"uws={res.uws} lrf={res.longest_repeated_factor_length}"
    if args.witness:
        line += f" witness={res.witness}"
    print(line)


def cmd_dataset_gen(args, run):
    rows = build_dataset(args.sg_degree, args.min_degree, not args.no_coprime,
                         workers=args.workers, cyclic=args.cyclic)
    run.write(args.out, dumps_csv(rows))
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)


def cmd_dataset_merge(args, run):
    run.inputs.extend(Path(f) for f in args.files)
    rows = merge_datasets(read_csv(f) for f in args.files)
    run.write(args.out, dumps_csv(rows))
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)


def cmd_dataset_split(args, run):
    run.inputs.append(Path(args.file))
    tr, te = split(read_csv(args.file), SplitSpec(args.test_fraction, args.seed))
    run.write(args.train_out, dumps_csv(tr))
    run.write(args.test_out, dumps_csv(te))
    print(f"train {len(tr)} rows, test {len(te)} rows", file=sys.stderr)


def _train_config(args) -> TrainConfig:
    return TrainConfig(learning_rate=args.lr, batch_size=args.batch, max_epochs=args.epochs,
                       patience=args.patience, validation_fraction=args.validation_fraction, seed=args.seed)


def _fit(rows, args):
    scaler = fit_scaler(rows)
    x, y = xy(scaler, rows)
    config = _train_config(args)
    model = init_model(tuple(args.layers), args.seed)
    model, report = train_model(model, x, y, config)
    metadata = {
        "seed": args.seed,
        "config": asdict(config),
        "train_rows": len(rows),
        "train_target_mean": float(y.mean()),
        "report": report.to_dict(),
    }
    return model, scaler, metadata, report


def cmd_train(args, run):
    run.inputs.append(Path(args.data))
    model, scaler, metadata, report = _fit(read_csv(args.data), args)
    run.write(args.out, model_to_json(model, scaler, metadata))
    print(f"best epoch {report.best_epoch} of {report.stopped_epoch}, "
          f"validation mse {report.val_mse[report.best_epoch - 1]:.6f}", file=sys.stderr)


def _load(path):
    mf = read_model_file(path)
    if mf.scaler is None:
        raise CliError(f"model file {path} has no scaler")
    return mf


def cmd_predict(args, run):
    mf = _load(args.model)
    feats = [int(v) for v in args.features.split(",")]
    if len(feats) != 4:
        raise CliError("--features takes four comma-separated integers")
    print(predict_uws(mf.model, mf.scaler, feats))


def cmd_evaluate(args, run):
    mf = _load(args.model)
    if "train_target_mean" not in mf.metadata:
        raise CliError("model metadata lacks train_target_mean; cannot compute the baseline")
    rep = evaluate(mf.model, mf.scaler, read_csv(args.data), mf.metadata["train_target_mean"])
    print(json.dumps(rep.to_dict(), indent=2) if args.json else rep.format())


def cmd_importance(args, run):
    mf = _load(args.model)
    rep = permutation_importance(mf.model, mf.scaler, read_csv(args.data), args.repeats, args.seed)
    print(json.dumps(rep.to_dict(), indent=2) if args.json else rep.format())


def cmd_summary(args, run):
    print(model_summary(_load(args.model).model if args.model else args.layers))


def cmd_pipeline(args, run):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    per_degree = []
    for d in _degree_range(args.sg_degrees):
        rows = build_dataset(d, args.min_degree, not args.no_coprime, workers=args.workers, cyclic=args.cyclic)
        if not rows:
            raise CliError(f"dataset stage: sg degree {d} has no admissible pairs")
        run.write(out / f"uws{d}.csv", dumps_csv(rows))
        per_degree.append(rows)
        print(f"uws{d}: {len(rows)} rows", file=sys.stderr)
    merged = merge_datasets(per_degree)
    run.write(out / "merged.csv", dumps_csv(merged))
    tr, te = split(merged, SplitSpec(args.test_fraction, args.split_seed))
    run.write(out / "train.csv", dumps_csv(tr))
    run.write(out / "test.csv", dumps_csv(te))
    model, scaler, metadata, report = _fit(tr, args)
    run.write(out / "model.json", model_to_json(model, scaler, metadata))
    ev = evaluate(model, scaler, te, metadata["train_target_mean"])
    run.write(out / "evaluation.txt", ev.format() + "\n")
    run.write(out / "evaluation.json", json.dumps(ev.to_dict(), indent=2) + "\n")
    imp = permutation_importance(model, scaler, te, args.repeats, args.seed)
    run.write(out / "importance.txt", imp.format() + "\n")
    run.write(out / "importance.json", json.dumps(imp.to_dict(), indent=2) + "\n")
    run.write(out / "summary.txt", model_summary(model) + "\n")
    print(f"merged {len(merged)} rows; train {len(tr)}, test {len(te)}", file=sys.stderr)
    print(ev.format())
    print(imp.format())


def _add_train_flags(p, lr_default):
    p.add_argument("--lr", type=float, default=lr_default)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--validation-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--layers", type=int, nargs="+", default=list(DEFAULT_LAYERS))


def _add_dataset_flags(p):
    p.add_argument("--min-degree", type=int, default=3)
    p.add_argument("--no-coprime", action="store_true")
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--cyclic", action="store_true", help="label with wrap-around UWS")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sguws", description="Shrinking-generator UWS toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    poly = sub.add_parser("poly", help="primitive polynomials").add_subparsers(dest="poly_command", required=True)
    p = poly.add_parser("list", help="list primitive polynomials of one degree")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--format", choices=("text", "mask"), default="text")
    p.set_defaults(func=cmd_poly_list)

    p = sub.add_parser("keystream", help="print shrinking-generator output")
    p.add_argument("--input-poly", required=True)
    p.add_argument("--control-poly", required=True)
    p.add_argument("--input-seed", help="hex state, bit i = s_i (default all ones)")
    p.add_argument("--control-seed")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--bits", type=int)
    g.add_argument("--full-period", action="store_true", help="the default")
    p.set_defaults(func=cmd_keystream)

    p = sub.add_parser("uws", help="unique window size of a 0/1 string (argument or stdin)")
    p.add_argument("bits", nargs="?")
    p.add_argument("--cyclic", action="store_true")
    p.add_argument("--witness", action="store_true")
    p.set_defaults(func=cmd_uws)

    ds = sub.add_parser("dataset", help="dataset generation").add_subparsers(dest="dataset_command", required=True)
    p = ds.add_parser("gen")
    p.add_argument("--sg-degree", type=int, required=True)
    _add_dataset_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset_gen)
    p = ds.add_parser("merge")
    p.add_argument("files", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset_merge)
    p = ds.add_parser("split")
    p.add_argument("file")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=123)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    p.set_defaults(func=cmd_dataset_split)

    p = sub.add_parser("train")
    p.add_argument("--data", required=True)
    _add_train_flags(p, 0.0001)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True, help="input_degree,input_weight,control_degree,control_weight")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("summary", help="layer table for a model file or a layer list")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--model")
    g.add_argument("--layers", type=int, nargs="+", default=list(DEFAULT_LAYERS))
    p.set_defaults(func=cmd_summary)

    p = sub.add_parser("pipeline", help="generate, merge, split, train, evaluate, importance")
    p.add_argument("--sg-degrees", required=True, help="range like 8..14 or list like 8,10,12")
    _add_dataset_flags(p)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--split-seed", type=int, default=123)
    p.add_argument("--repeats", type=int, default=5)
    _add_train_flags(p, 0.001)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.command_path = " ".join(
        x for x in (args.command, getattr(args, "poly_command", None), getattr(args, "dataset_command", None)) if x)
    record = Run(args)
    try:
        args.func(args, record)
        manifest = Path(args.out) / "manifest.json" if args.command == "pipeline" else None
        record.finish(manifest)
    except KeyboardInterrupt:
        record.rollback()
        raise
    except Exception as exc:
        record.rollback()
        print(f"sguws {args.command_path}: error: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return 1
    return 0


def main() -> None:
    sys.exit(run())

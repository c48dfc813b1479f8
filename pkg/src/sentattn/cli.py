"""Command-line entry point for the whole pipeline.

Subcommands: build-vocab, split, stats, train, evaluate, predict,
segment, gradcheck. Machine-readable JSON goes to standard output (or
--out); progress text goes to standard error. Exit codes: 0 success,
1 usage or config error, 2 data error, 3 numeric failure.

The optional config file is line-oriented `key = value` with `#`
comments; explicit flags override config-file values.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import corpus as corpus_mod
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .corpus import CorpusError, build_vocabulary, label_stats, load_corpus, split_dataset
from .encoder import ENCODER_KINDS, MEANPOOL, ModelDims
from .segmenter import EmptyText, segment
from .trainer import (
    LEARNED,
    UNIFORM,
    DimsMismatch,
    EmptySplit,
    NonFiniteLoss,
    TrainConfig,
    evaluate,
    grad_check,
    predict_records,
    train,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

DEFAULTS = {
    "h": 64, "f": 128, "c": 50, "v_buckets": 32768, "t_max": 64, "k_max": 128,
    "encoder": MEANPOOL, "lr": 1e-3, "beta1": 0.9, "beta2": 0.999,
    "adam_eps": 1e-8, "batch_size": 16, "max_epochs": 200, "patience": 10,
    "seed": 42, "use_description": False, "attention_mode": LEARNED,
    "log_train_f1": False, "threshold": 0.5, "eps": 1e-3, "top_c": 50,
}

_INT_KEYS = {"h", "f", "c", "v_buckets", "t_max", "k_max", "batch_size",
             "max_epochs", "patience", "seed", "top_c"}
_FLOAT_KEYS = {"lr", "beta1", "beta2", "adam_eps", "threshold", "eps"}
_BOOL_KEYS = {"use_description", "log_train_f1"}
_STR_KEYS = {"encoder", "attention_mode"}


class ConfigError(Exception):
    """Config file problem; message carries the line number."""


class UnknownKey(ConfigError):
    pass


class BadValue(ConfigError):
    pass


def load_config(path: str | Path) -> dict:
    """Parse a `key = value` config file into a typed flag map."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values: dict = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadValue(f"line {lineno}: expected `key = value`, got {raw!r}")
        key, _, text = (part.strip() for part in line.partition("="))
        if key in _INT_KEYS:
            try:
                values[key] = int(text)
            except ValueError as exc:
                raise BadValue(f"line {lineno}: {key} expects an integer, got {text!r}") from exc
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(text)
            except ValueError as exc:
                raise BadValue(f"line {lineno}: {key} expects a number, got {text!r}") from exc
        elif key in _BOOL_KEYS:
            if text.lower() not in ("true", "false"):
                raise BadValue(f"line {lineno}: {key} expects true/false, got {text!r}")
            values[key] = text.lower() == "true"
        elif key in _STR_KEYS:
            values[key] = text
        else:
            raise UnknownKey(f"line {lineno}: unknown key {key!r}")
    return values


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we pin exit code 1
        raise _UsageError(self, message)


def _resolve(args: argparse.Namespace, keys: list[str]) -> dict:
    """Defaults < config file < explicit flags."""
    config = load_config(args.config) if getattr(args, "config", None) else {}
    out = {}
    for key in keys:
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
        elif key in config:
            out[key] = config[key]
        else:
            out[key] = DEFAULTS[key]
    return out


def _emit(payload, out_path: str | None) -> None:
    text = json.dumps(payload, ensure_ascii=False, indent=2)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _add_common(p: _Parser, *names: str) -> None:
    if "config" in names:
        p.add_argument("--config", help="key = value config file")
    if "seed" in names:
        p.add_argument("--seed", type=int, help="split / init seed")
    if "out" in names:
        p.add_argument("--out", help="write the JSON result here instead of stdout")


def build_parser() -> _Parser:
    parser = _Parser(prog="sentattn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-vocab", help="build the top-C label vocabulary")
    p.add_argument("corpus")
    p.add_argument("--top-c", dest="top_c", type=int)
    p.add_argument("--split", choices=["train", "validation", "test", "all"], default="all")
    _add_common(p, "config", "seed", "out")
    p.set_defaults(func=_cmd_build_vocab)

    p = sub.add_parser("split", help="deterministic 8:1:1 id-hash split")
    p.add_argument("corpus")
    _add_common(p, "seed", "out")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("stats", help="per-code document counts")
    p.add_argument("corpus")
    p.add_argument("--top-c", dest="top_c", type=int)
    _add_common(p, "config", "out")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("train", help="train a model on the corpus")
    p.add_argument("corpus")
    p.add_argument("model_out", help="checkpoint output path")
    p.add_argument("--log-out", help="per-epoch JSONL log path")
    for key in ("h", "f", "c", "v-buckets", "t-max", "k-max", "batch-size",
                "max-epochs", "patience"):
        p.add_argument(f"--{key}", dest=key.replace("-", "_"), type=int)
    for key in ("lr", "beta1", "beta2", "adam-eps"):
        p.add_argument(f"--{key}", dest=key.replace("-", "_"), type=float)
    p.add_argument("--encoder", choices=list(ENCODER_KINDS))
    p.add_argument("--attention-mode", dest="attention_mode", choices=[LEARNED, UNIFORM])
    p.add_argument("--use-description", dest="use_description", action="store_true", default=None)
    p.add_argument("--log-train-f1", dest="log_train_f1", action="store_true", default=None)
    _add_common(p, "config", "seed", "out")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="metrics report for one split")
    p.add_argument("model")
    p.add_argument("corpus")
    p.add_argument("--split", choices=["train", "validation", "test", "all"], default="test")
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--use-description", dest="use_description", action="store_true", default=None)
    _add_common(p, "config", "seed", "out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("predict", help="score documents against a checkpoint")
    p.add_argument("model")
    p.add_argument("corpus")
    p.add_argument("--split", choices=["train", "validation", "test", "all"], default="all")
    p.add_argument("--threshold", type=float)
    p.add_argument("--attention", action="store_true", help="include the c x k attention matrix")
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--use-description", dest="use_description", action="store_true", default=None)
    _add_common(p, "config", "seed", "out")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("segment", help="segment stdin text into sentences")
    p.add_argument("--k-max", dest="k_max", type=int)
    _add_common(p, "out")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--encoder", choices=list(ENCODER_KINDS))
    p.add_argument("--eps", type=float)
    _add_common(p, "config", "seed", "out")
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def _select_records(args, records):
    if args.split == "all":
        return records
    resolved = _resolve(args, ["seed"])
    part = split_dataset((r.id for r in records), resolved["seed"]).part(args.split)
    return [r for r in records if r.id in part]


def _cmd_build_vocab(args):
    records, report = load_corpus(args.corpus)
    records = _select_records(args, records)
    resolved = _resolve(args, ["top_c"])
    vocab = build_vocabulary(records, resolved["top_c"])
    _progress(f"read {report.read} lines, retained {report.retained} records")
    return {"codes": vocab.codes, "counts": vocab.counts}


def _cmd_split(args):
    records, _ = load_corpus(args.corpus)
    resolved = _resolve(args, ["seed"])
    split = split_dataset((r.id for r in records), resolved["seed"])
    payload = {name: sorted(split.part(name)) for name in ("train", "validation", "test")}
    payload["counts"] = {name: len(payload[name]) for name in ("train", "validation", "test")}
    return payload


def _cmd_stats(args):
    records, report = load_corpus(args.corpus)
    resolved = _resolve(args, ["top_c"])
    vocab = build_vocabulary(records, resolved["top_c"])
    counts = label_stats(records, vocab)
    dropped = sum(1 for r in records if corpus_mod.encode_labels(r, vocab) is None)
    return {"counts": counts, "dropped": dropped, "skipped": report.total_skipped}


def _cmd_train(args):
    keys = ["h", "f", "c", "v_buckets", "t_max", "k_max", "encoder", "lr",
            "beta1", "beta2", "adam_eps", "batch_size", "max_epochs",
            "patience", "seed", "use_description", "attention_mode", "log_train_f1"]
    r = _resolve(args, keys)
    try:
        config = TrainConfig(
            dims=ModelDims(h=r["h"], c=r["c"], v_buckets=r["v_buckets"], t_max=r["t_max"], f=r["f"]),
            k_max=r["k_max"], encoder=r["encoder"], lr=r["lr"], beta1=r["beta1"],
            beta2=r["beta2"], adam_eps=r["adam_eps"], batch_size=r["batch_size"],
            max_epochs=r["max_epochs"], patience=r["patience"], seed=r["seed"],
            use_description=r["use_description"], attention_mode=r["attention_mode"],
            log_train_f1=r["log_train_f1"],
        )
    except ValueError as exc:
        raise BadValue(str(exc)) from exc
    result = train(config, args.corpus)
    save_checkpoint(result.checkpoint, args.model_out)
    if args.log_out:
        with Path(args.log_out).open("w", encoding="utf-8") as fh:
            for entry in result.epochs:
                row = {k: v for k, v in asdict(entry).items() if v is not None}
                fh.write(json.dumps(row) + "\n")
    for entry in result.epochs:
        _progress(f"epoch {entry.epoch}: loss {entry.train_loss:.4f} "
                  f"val_micro_f1 {entry.val_micro_f1:.4f}")
    meta = result.checkpoint.meta
    return {
        "model": args.model_out,
        "epochs_run": meta.epochs_run,
        "best_val_micro_f1": meta.best_val_micro_f1,
        "labels": len(result.checkpoint.vocab),
        "split_sizes": result.split_sizes,
        "dropped": result.dropped,
        "skipped": result.load_report.total_skipped,
    }


def _cmd_evaluate(args):
    ckpt = load_checkpoint(args.model)
    r = _resolve(args, ["seed", "k_max", "use_description"])
    return evaluate(ckpt, args.corpus, split_name=args.split, seed=r["seed"],
                    k_max=r["k_max"], use_description=r["use_description"])


def _cmd_predict(args):
    ckpt = load_checkpoint(args.model)
    records, _ = load_corpus(args.corpus)
    records = _select_records(args, records)
    r = _resolve(args, ["k_max", "threshold", "use_description"])
    return predict_records(ckpt, records, k_max=r["k_max"], threshold=r["threshold"],
                           with_attention=args.attention, use_description=r["use_description"])


def _cmd_segment(args):
    r = _resolve(args, ["k_max"])
    text = sys.stdin.read()
    return [s.text for s in segment(text, r["k_max"])]


def _cmd_gradcheck(args):
    r = _resolve(args, ["seed", "eps", "encoder"])
    report = grad_check(kind=r["encoder"], seed=r["seed"], eps=r["eps"])
    return {"encoder": report.kind, "max_rel_error": report.max_rel_error,
            "worst_param": report.worst_param, "n_checked": report.n_checked}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        exc.parser.print_help(sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help lands here
        return int(exc.code or 0)
    try:
        payload = args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, CheckpointError, EmptySplit, DimsMismatch, EmptyText) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NonFiniteLoss as exc:
        print(f"error: NonFiniteLoss: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(payload, getattr(args, "out", None))
    return EXIT_OK

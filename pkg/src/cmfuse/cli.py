"""Command-line surface: prep, train, eval, predict, gradcheck.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
failure (training divergence or a failed gradient check).

Config precedence is built-in defaults < config file < command-line flags.
Config files are plain key=value lines with # comments; the keys are the
TrainConfig field names. CMFUSE_CONFIG names a default config file.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict, fields

from . import dataio, layers, metrics, preprocess, report, trainer
from .errors import DataError, NumericalError, UsageError

CONFIG_ENV_VAR = "CMFUSE_CONFIG"
GRADCHECK_THRESHOLD = 1e-4

# dimensions small enough that every scalar gets finite-differenced quickly
GRADCHECK_DEFAULTS = dict(vocab_size=18, embed_dim=8, text_hidden=4,
                          time_hidden=4, d_fuse=8, d_att=8, max_len=5,
                          dropout=0.0)


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems via UsageError (exit code 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _config_fields():
    return {f.name: f.type for f in fields(trainer.TrainConfig)}


def load_config_file(path: str) -> dict:
    """key=value lines; blank lines and # comments ignored."""
    if not os.path.exists(path):
        raise DataError(f"config file not found: {path}")
    known = _config_fields()
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = value
    return out


def _coerce(key: str, value):
    defaults = trainer.TrainConfig()
    current = getattr(defaults, key)
    try:
        return int(value) if isinstance(current, int) else float(value)
    except (TypeError, ValueError):
        raise UsageError(f"config key {key!r}: cannot parse {value!r}") from None


def resolve_config(args, base_overrides: dict = None) -> trainer.TrainConfig:
    """defaults < CMFUSE_CONFIG/--config file < explicit flags."""
    values = asdict(trainer.TrainConfig())
    if base_overrides:
        values.update(base_overrides)
    cfg_path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV_VAR)
    if cfg_path:
        for key, raw in load_config_file(cfg_path).items():
            values[key] = _coerce(key, raw)
    for key in _config_fields():
        if hasattr(args, key):  # flags use SUPPRESS, present only if passed
            values[key] = getattr(args, key)
    return trainer.TrainConfig(**values)


def _add_config_flags(p, overrides: dict = None):
    base = asdict(trainer.TrainConfig())
    if overrides:
        base.update(overrides)
    for name, default in base.items():
        kind = int if isinstance(default, int) else float
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=kind,
                       default=argparse.SUPPRESS,
                       help=f"{name} (default: {default})")


def build_parser() -> _Parser:
    parser = _Parser(prog="cmfuse",
                     description="Multi-modal (text + posting time) post classifier.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", parents=[], help="preprocess a posts CSV into dataset artifacts")
    p.add_argument("--input", required=True, help="posts CSV (title, selftext, created_utc, over_18, subreddit)")
    p.add_argument("--out", required=True, help="artifacts output directory")
    p.add_argument("--train-fraction", type=float, default=0.8,
                   help="per-class train share (default: 0.8)")
    p.add_argument("--seed", type=int, default=0, help="split shuffle seed (default: 0)")
    p.add_argument("--vocab-size", type=int, default=10000,
                   help="max learned tokens (default: 10000)")
    p.add_argument("--max-len", type=int, default=100,
                   help="tokens kept per post (default: 100)")

    p = sub.add_parser("train", help="train on prepared artifacts, save the best checkpoint")
    p.add_argument("--artifacts", required=True, help="directory written by prep")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--config", help=f"key=value config file (or ${CONFIG_ENV_VAR})")
    p.add_argument("--log", help="epoch log file (default: <out>.log)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads per batch (default: 1, exact reproducibility)")
    _add_config_flags(p)

    p = sub.add_parser("eval", help="evaluate a checkpoint on prepared artifacts")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--artifacts", required=True)
    p.add_argument("--split", choices=("val", "train"), default="val",
                   help="which split to score (default: val)")
    p.add_argument("--out", default=".",
                   help="directory for eval_report.txt and confusion_matrix.png (default: .)")

    p = sub.add_parser("predict", help="classify one raw post with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--title", default="", help="post title (default: empty)")
    p.add_argument("--selftext", default="", help="post body (default: empty)")
    p.add_argument("--created-utc", type=int, required=True, help="epoch seconds, UTC")

    p = sub.add_parser("gradcheck",
                       help="verify analytic gradients against central finite differences")
    p.add_argument("--config", help=f"key=value config file (or ${CONFIG_ENV_VAR})")
    p.add_argument("--eps", type=float, default=1e-5,
                   help="finite-difference step (default: 1e-05)")
    p.add_argument("--classes", type=int, default=3,
                   help="output classes for the check model (default: 3)")
    _add_config_flags(p, GRADCHECK_DEFAULTS)

    return parser


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_prep(args) -> int:
    posts, load_report = dataio.load_posts(args.input)
    kept, drop_counts = dataio.filter_posts(posts)

    records = []
    dropped_empty = 0
    for post in kept:
        text = preprocess.clean_text(post.title, post.selftext)
        if not text:  # would encode to all padding
            dropped_empty += 1
            continue
        records.append(_PrepRecord(text=text,
                                   raw_temporal=preprocess.extract_temporal(post.created_utc),
                                   label=post.subreddit))
    if not records:
        raise DataError("no examples after filtering")

    labelmap = preprocess.LabelMap.from_labels(r.label for r in records)
    spec = dataio.SplitSpec(train_fraction=args.train_fraction, seed=args.seed)
    train_recs, val_recs = dataio.stratified_split(records, spec)

    vocab = preprocess.build_vocab([r.text for r in train_recs], args.vocab_size)
    scaler = preprocess.fit_scaler([r.raw_temporal for r in train_recs])

    def encode(recs):
        out = []
        for r in recs:
            ids, mask = preprocess.encode_text(r.text, vocab, args.max_len)
            scaled = preprocess.apply_scaler(r.raw_temporal, scaler)
            out.append(preprocess.Example(token_ids=ids, mask=mask,
                                          temporal=[float(v) for v in scaled],
                                          label=labelmap.id_of(r.label)))
        return out

    train_ex, val_ex = encode(train_recs), encode(val_recs)

    covered = total_toks = 0
    for r in train_recs:
        for tok in r.text.split()[:args.max_len]:
            total_toks += 1
            covered += vocab.id_of(tok) != preprocess.OOV_ID
    class_counts = {name: {"train": 0, "val": 0} for name in labelmap.names}
    for ex in train_ex:
        class_counts[labelmap.name_of(ex.label)]["train"] += 1
    for ex in val_ex:
        class_counts[labelmap.name_of(ex.label)]["val"] += 1

    manifest = {"seed": args.seed, "train_fraction": args.train_fraction,
                "max_len": args.max_len, "classes": class_counts,
                "train_examples": len(train_ex), "val_examples": len(val_ex)}
    dataio.save_artifacts(args.out, train_ex, val_ex, vocab, scaler, labelmap, manifest)

    stats = [
        f"rows_read={load_report.rows_read}",
        f"rows_malformed={load_report.malformed}",
        f"dropped_nsfw={drop_counts.get('nsfw', 0)}",
        f"dropped_removed={drop_counts.get('removed', 0)}",
        f"dropped_year={drop_counts.get('year', 0)}",
        f"dropped_empty_text={dropped_empty}",
        f"examples={len(records)}",
        f"train_examples={len(train_ex)}",
        f"val_examples={len(val_ex)}",
        f"classes={len(labelmap)}",
        f"vocab_size={len(vocab)}",
        f"vocab_coverage={covered / total_toks:.6f}" if total_toks else "vocab_coverage=0",
    ]
    for name in labelmap.names:
        stats.append(f"class.{name}.train={class_counts[name]['train']}")
        stats.append(f"class.{name}.val={class_counts[name]['val']}")
    body = "\n".join(stats) + "\n"
    with open(os.path.join(args.out, dataio.STATS_FILE), "w", encoding="utf-8") as fh:
        fh.write(body)
    sys.stdout.write(body)
    return 0


class _PrepRecord:
    __slots__ = ("text", "raw_temporal", "label")

    def __init__(self, text, raw_temporal, label):
        self.text = text
        self.raw_temporal = raw_temporal
        self.label = label


def cmd_train(args) -> int:
    train_ex, val_ex, vocab, scaler, labelmap = dataio.load_artifacts(args.artifacts)
    if not train_ex or not val_ex:
        raise DataError("artifacts contain an empty split")
    config = resolve_config(args)
    log_path = args.log or f"{args.out}.log"

    with open(log_path, "w", encoding="utf-8") as log_fh:
        def emit(line):
            print(line)
            log_fh.write(line + "\n")

        best, logs = trainer.train(train_ex, val_ex, config,
                                   vocab_rows=len(vocab), n_classes=len(labelmap),
                                   threads=args.threads, log_writer=emit)
    dataio.save_checkpoint(best, vocab, scaler, labelmap, config, args.out)
    if logs:
        best_epoch = max(range(len(logs)), key=lambda i: logs[i].val_weighted_f1)
        print(f"best_epoch={best_epoch} "
              f"best_val_weighted_f1={logs[best_epoch].val_weighted_f1:.6f}")
    print(f"checkpoint={args.out}")
    print(f"log={log_path}")
    return 0


def cmd_eval(args) -> int:
    bundle = dataio.load_checkpoint(args.checkpoint)
    train_ex, val_ex, vocab, _, labelmap = dataio.load_artifacts(args.artifacts)
    if len(vocab) != len(bundle.vocab):
        raise DataError(
            f"artifact vocab has {len(vocab)} entries but checkpoint was trained "
            f"with {len(bundle.vocab)}")
    if labelmap.names != bundle.labelmap.names:
        raise DataError("artifact labels do not match checkpoint labels")
    examples = val_ex if args.split == "val" else train_ex
    if not examples:
        raise DataError(f"split {args.split!r} is empty")

    loss, cm = trainer.evaluate_split(bundle.params, examples, len(labelmap))
    eval_report = metrics.evaluate(cm)
    text = report.format_eval_report(eval_report, cm, labelmap.names)
    sys.stdout.write(f"split={args.split}\nloss={loss:.6f}\n" + text)
    text_path, fig_path = report.write_eval_outputs(eval_report, cm,
                                                    labelmap.names, args.out)
    print(f"report={text_path}")
    print(f"figure={fig_path}")
    return 0


def cmd_predict(args) -> int:
    bundle = dataio.load_checkpoint(args.checkpoint)
    result = trainer.predict(bundle, args.title, args.selftext, args.created_utc)
    print(f"label={result.label}")
    for name, p in result.class_probs.items():
        print(f"prob.{name}={p:.6f}")
    print(f"alpha_text={result.alpha_text:.6f}")
    print(f"alpha_time={result.alpha_time:.6f}")
    return 0


def cmd_gradcheck(args) -> int:
    config = resolve_config(args, base_overrides=GRADCHECK_DEFAULTS)
    dims = layers.ModelDims(
        vocab_rows=config.vocab_size + 2, embed_dim=config.embed_dim,
        text_hidden=config.text_hidden, time_hidden=config.time_hidden,
        d_fuse=config.d_fuse, d_att=config.d_att, n_classes=args.classes)
    results = layers.grad_check(dims, max_len=config.max_len,
                                seed=config.seed, eps=args.eps)
    worst = 0.0
    for name, err in results.items():
        print(f"tensor={name} max_rel_err={err:.3e}")
        worst = max(worst, err)
    ok = worst < GRADCHECK_THRESHOLD
    print(f"max_rel_err={worst:.3e} threshold={GRADCHECK_THRESHOLD:.0e} "
          f"status={'ok' if ok else 'fail'}")
    if not ok:
        raise NumericalError(f"gradient check failed: max relative error {worst:.3e}")
    return 0


_DISPATCH = {"prep": cmd_prep, "train": cmd_train, "eval": cmd_eval,
             "predict": cmd_predict, "gradcheck": cmd_gradcheck}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _DISPATCH[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

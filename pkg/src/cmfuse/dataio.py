"""Dataset ingestion, row filtering, stratified splitting, and file formats.

Input posts arrive as CSV with header columns title, selftext,
created_utc, over_18, subreddit (case-insensitive, any order); quoted
fields may contain commas and newlines. Malformed rows are counted and
reported, never silently dropped.

Checkpoints are a little-endian binary archive:

    magic "CMSQ" | version u16 | meta_len u32 | meta JSON (config, vocab,
    scaler, label names) | tensor_count u32 | per tensor: name_len u16,
    name bytes, rank u8, dims u32 x rank, float64 data

Tensors round-trip bit-exactly. Files are written atomically (temp file
then rename).
"""

from __future__ import annotations

import csv
import json
import os
import struct
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import DataError
from .layers import (AttentionParams, BiLstmParams, LstmParams, ModelDims,
                     ModelParams)
from .ndcore import RngState
from .preprocess import Example, LabelMap, TemporalScaler, Vocab

MAGIC = b"CMSQ"
VERSION = 1
EXPECTED_COLUMNS = ("title", "selftext", "created_utc", "over_18", "subreddit")
REMOVAL_SENTINELS = ("[removed]", "[deleted]")
KEEP_YEARS = (2021, 2022)

_TRUE = {"true", "t", "1", "yes"}
_FALSE = {"false", "f", "0", "no", ""}


@dataclass
class RawPost:
    title: str
    selftext: str
    created_utc: int
    over_18: bool
    subreddit: str


@dataclass
class LoadReport:
    rows_read: int
    malformed: int
    malformed_lines: list


def _parse_bool(s: str):
    v = s.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    return None


def load_posts(path: str):
    """Parse a posts CSV. Returns (posts, LoadReport).

    Raises DataError for a missing file or missing columns; bad rows
    (short, non-numeric or negative timestamp, unparseable flag, empty
    subreddit) are tallied in the report with their line numbers.
    """
    if not os.path.exists(path):
        raise DataError(f"input file not found: {path}")
    posts = []
    malformed_lines = []
    rows_read = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        idx = {}
        for i, name in enumerate(header):
            idx.setdefault(name.strip().lower(), i)
        missing = [c for c in EXPECTED_COLUMNS if c not in idx]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
        for row in reader:
            rows_read += 1
            if len(row) <= max(idx[c] for c in EXPECTED_COLUMNS):
                malformed_lines.append(reader.line_num)
                continue
            try:
                ts = int(float(row[idx["created_utc"]].strip()))
            except ValueError:
                malformed_lines.append(reader.line_num)
                continue
            over_18 = _parse_bool(row[idx["over_18"]])
            subreddit = row[idx["subreddit"]].strip()
            if ts < 0 or over_18 is None or not subreddit:
                malformed_lines.append(reader.line_num)
                continue
            posts.append(RawPost(title=row[idx["title"]],
                                 selftext=row[idx["selftext"]],
                                 created_utc=ts, over_18=over_18,
                                 subreddit=subreddit))
    return posts, LoadReport(rows_read=rows_read, malformed=len(malformed_lines),
                             malformed_lines=malformed_lines)


def filter_posts(posts):
    """Drop NSFW posts, posts with removed/empty bodies, and posts outside
    the kept years. Returns (kept, counts per drop reason). Idempotent."""
    kept = []
    reasons = Counter()
    for post in posts:
        if post.over_18:
            reasons["nsfw"] += 1
            continue
        body = post.selftext.strip()
        if not body or body.lower() in REMOVAL_SENTINELS:
            reasons["removed"] += 1
            continue
        year = datetime.fromtimestamp(post.created_utc, tz=timezone.utc).year
        if year not in KEEP_YEARS:
            reasons["year"] += 1
            continue
        kept.append(post)
    return kept, dict(reasons)


@dataclass
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def stratified_split(items, spec: SplitSpec):
    """Per-class seeded shuffle and split; every item needs a ``.label``.

    Train takes floor(n_c * fraction) of each class, validation the rest,
    with at least one validation item per class. Output is a partition of
    the input. Classes with fewer than 2 items are an error.
    """
    by_class = defaultdict(list)
    for i, item in enumerate(items):
        by_class[item.label].append(i)
    train_idx, val_idx = [], []
    for label in sorted(by_class):
        idxs = by_class[label]
        if len(idxs) < 2:
            raise DataError(f"class {label!r} has {len(idxs)} example(s); need >= 2 to split")
        perm = RngState(spec.seed).split("stratified", label).permutation(len(idxs))
        shuffled = [idxs[p] for p in perm]
        n_train = min(int(len(idxs) * spec.train_fraction), len(idxs) - 1)
        train_idx += shuffled[:n_train]
        val_idx += shuffled[n_train:]
    return [items[i] for i in train_idx], [items[i] for i in val_idx]


# --------------------------------------------------------------------------
# Checkpoint archive
# --------------------------------------------------------------------------

@dataclass
class CheckpointBundle:
    params: ModelParams
    vocab: Vocab
    scaler: TemporalScaler
    labelmap: LabelMap
    config: "TrainConfig"  # noqa: F821  (trainer imports this module)


def _atomic_write(path: str, payload: bytes):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def save_checkpoint(params: ModelParams, vocab: Vocab, scaler: TemporalScaler,
                    labelmap: LabelMap, config, path: str):
    """Serialize model + preprocessing artifacts + config to one file."""
    meta = {
        "config": asdict(config),
        "vocab": vocab.id_to_token,
        "scaler": {"mins": scaler.mins.tolist(), "maxs": scaler.maxs.tolist()},
        "labels": labelmap.names,
    }
    meta_bytes = json.dumps(meta, sort_keys=True, ensure_ascii=False).encode("utf-8")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", VERSION)
    out += struct.pack("<I", len(meta_bytes))
    out += meta_bytes
    tensors = params.named_tensors()
    out += struct.pack("<I", len(tensors))
    for name, arr in tensors:
        nb = name.encode("utf-8")
        out += struct.pack("<H", len(nb))
        out += nb
        out += struct.pack("<B", arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    _atomic_write(path, bytes(out))


class _Cursor:
    """Bounds-checked reader; any short read means a truncated archive."""

    def __init__(self, buf: bytes, path: str):
        self.buf = buf
        self.off = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if n < 0 or self.off + n > len(self.buf):
            raise DataError(f"{self.path}: truncated checkpoint")
        out = self.buf[self.off:self.off + n]
        self.off += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def expected_tensor_shapes(dims: ModelDims) -> dict:
    """Canonical name -> shape map for consistency checks."""
    shapes = {"embedding": (dims.vocab_rows, dims.embed_dim)}
    for prefix, hidden, inp in (("text_fwd", dims.text_hidden, dims.embed_dim),
                                ("text_bwd", dims.text_hidden, dims.embed_dim),
                                ("time", dims.time_hidden, 1)):
        for g in "fioc":
            shapes[f"{prefix}.W_{g}"] = (hidden, hidden + inp)
            shapes[f"{prefix}.b_{g}"] = (hidden, 1)
    shapes["proj_text"] = (dims.d_fuse, 2 * dims.text_hidden)
    shapes["proj_time"] = (dims.d_fuse, dims.time_hidden)
    shapes["attention.W_text"] = (dims.d_att, dims.d_fuse)
    shapes["attention.b_text"] = (dims.d_att, 1)
    shapes["attention.W_time"] = (dims.d_att, dims.d_fuse)
    shapes["attention.b_time"] = (dims.d_att, 1)
    shapes["attention.w"] = (dims.d_att, 1)
    shapes["output.W"] = (dims.n_classes, dims.d_fuse)
    shapes["output.b"] = (dims.n_classes, 1)
    return shapes


def _params_from_tensors(tensors: dict, dims: ModelDims) -> ModelParams:
    expected = expected_tensor_shapes(dims)
    if set(tensors) != set(expected):
        raise DataError("checkpoint tensor names do not match the model layout")
    for name, shape in expected.items():
        if tensors[name].shape != shape:
            raise DataError(
                f"checkpoint tensor {name!r} has shape {tensors[name].shape}, "
                f"config implies {shape}")

    def lstm(prefix):
        return LstmParams(**{f"W_{g}": tensors[f"{prefix}.W_{g}"] for g in "fioc"},
                          **{f"b_{g}": tensors[f"{prefix}.b_{g}"] for g in "fioc"})

    return ModelParams(
        embedding=tensors["embedding"],
        text_bilstm=BiLstmParams(lstm("text_fwd"), lstm("text_bwd")),
        time_lstm=lstm("time"),
        proj_text=tensors["proj_text"],
        proj_time=tensors["proj_time"],
        attention=AttentionParams(
            W_text=tensors["attention.W_text"], b_text=tensors["attention.b_text"],
            W_time=tensors["attention.W_time"], b_time=tensors["attention.b_time"],
            w=tensors["attention.w"]),
        W_output=tensors["output.W"],
        b_output=tensors["output.b"],
    )


def load_checkpoint(path: str) -> CheckpointBundle:
    """Parse and validate an archive; bit-exact inverse of save_checkpoint."""
    from .trainer import TrainConfig  # local import to avoid a cycle

    if not os.path.exists(path):
        raise DataError(f"checkpoint not found: {path}")
    with open(path, "rb") as fh:
        cur = _Cursor(fh.read(), path)
    if cur.take(4) != MAGIC:
        raise DataError(f"{path}: not a checkpoint file (bad magic)")
    (version,) = cur.unpack("<H")
    if version != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    (meta_len,) = cur.unpack("<I")
    try:
        meta = json.loads(cur.take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataError(f"{path}: corrupt metadata block: {e}") from None
    for key in ("config", "vocab", "scaler", "labels"):
        if key not in meta:
            raise DataError(f"{path}: metadata missing {key!r}")
    try:
        config = TrainConfig(**meta["config"])
    except TypeError as e:
        raise DataError(f"{path}: bad config block: {e}") from None
    vocab = Vocab(id_to_token=list(meta["vocab"]))
    scaler = TemporalScaler(mins=np.asarray(meta["scaler"]["mins"], dtype=np.float64),
                            maxs=np.asarray(meta["scaler"]["maxs"], dtype=np.float64))
    labelmap = LabelMap(names=list(meta["labels"]))

    (count,) = cur.unpack("<I")
    tensors = {}
    for _ in range(count):
        (name_len,) = cur.unpack("<H")
        name = cur.take(name_len).decode("utf-8")
        (rank,) = cur.unpack("<B")
        if rank == 0 or rank > 4:
            raise DataError(f"{path}: tensor {name!r} has unsupported rank {rank}")
        dims_t = cur.unpack(f"<{rank}I")
        size = 1
        for d in dims_t:
            if d == 0 or d > 2**31 - 1:
                raise DataError(f"{path}: tensor {name!r} dimension overflow: {dims_t}")
            size *= d
        if size * 8 > len(cur.buf) - cur.off:
            raise DataError(f"{path}: tensor {name!r} dimension overflow: {dims_t}")
        data = np.frombuffer(cur.take(size * 8), dtype="<f8").reshape(dims_t)
        tensors[name] = data.astype(np.float64)  # writable copy
    if cur.off != len(cur.buf):
        raise DataError(f"{path}: trailing bytes after tensor section")

    dims = ModelDims(vocab_rows=len(vocab), embed_dim=config.embed_dim,
                     text_hidden=config.text_hidden, time_hidden=config.time_hidden,
                     d_fuse=config.d_fuse, d_att=config.d_att,
                     n_classes=len(labelmap))
    params = _params_from_tensors(tensors, dims)
    return CheckpointBundle(params=params, vocab=vocab, scaler=scaler,
                            labelmap=labelmap, config=config)


# --------------------------------------------------------------------------
# Preprocessed-dataset artifacts (one directory per prepared dataset)
# --------------------------------------------------------------------------

VOCAB_FILE = "vocab.json"
SCALER_FILE = "scaler.json"
LABELS_FILE = "labelmap.json"
TRAIN_FILE = "train.jsonl"
VAL_FILE = "val.jsonl"
MANIFEST_FILE = "manifest.json"
STATS_FILE = "prep_stats.txt"


def _write_json(path: str, obj):
    payload = json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2)
    _atomic_write(path, (payload + "\n").encode("utf-8"))


def save_examples(path: str, examples):
    lines = [json.dumps({"label": ex.label, "mask": ex.mask,
                         "temporal": list(map(float, ex.temporal)),
                         "token_ids": ex.token_ids}, sort_keys=True)
             for ex in examples]
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8") if lines else b"")


def load_examples(path: str):
    if not os.path.exists(path):
        raise DataError(f"examples file not found: {path}")
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                out.append(Example(token_ids=list(d["token_ids"]), mask=list(d["mask"]),
                                   temporal=list(d["temporal"]), label=int(d["label"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise DataError(f"{path}:{lineno}: bad example record: {e}") from None
    return out


def save_artifacts(out_dir: str, train, val, vocab: Vocab, scaler: TemporalScaler,
                   labelmap: LabelMap, manifest: dict):
    os.makedirs(out_dir, exist_ok=True)
    save_examples(os.path.join(out_dir, TRAIN_FILE), train)
    save_examples(os.path.join(out_dir, VAL_FILE), val)
    _write_json(os.path.join(out_dir, VOCAB_FILE), vocab.id_to_token)
    _write_json(os.path.join(out_dir, SCALER_FILE),
                {"mins": scaler.mins.tolist(), "maxs": scaler.maxs.tolist()})
    _write_json(os.path.join(out_dir, LABELS_FILE), labelmap.names)
    _write_json(os.path.join(out_dir, MANIFEST_FILE), manifest)


def load_artifacts(art_dir: str):
    """Returns (train, val, vocab, scaler, labelmap)."""
    if not os.path.isdir(art_dir):
        raise DataError(f"artifacts directory not found: {art_dir}")

    def read_json(name):
        p = os.path.join(art_dir, name)
        if not os.path.exists(p):
            raise DataError(f"missing artifact {name} in {art_dir}")
        with open(p, encoding="utf-8") as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as e:
                raise DataError(f"{p}: bad JSON: {e}") from None

    train = load_examples(os.path.join(art_dir, TRAIN_FILE))
    val = load_examples(os.path.join(art_dir, VAL_FILE))
    vocab = Vocab(id_to_token=list(read_json(VOCAB_FILE)))
    sc = read_json(SCALER_FILE)
    scaler = TemporalScaler(mins=np.asarray(sc["mins"], dtype=np.float64),
                            maxs=np.asarray(sc["maxs"], dtype=np.float64))
    labelmap = LabelMap(names=list(read_json(LABELS_FILE)))
    return train, val, vocab, scaler, labelmap

"""Raw posts to model-ready examples.

Text: concatenate title and body, lowercase, swap URLs for a "<url>"
sentinel, strip everything outside ASCII letters/digits/apostrophes/
whitespace, collapse runs of whitespace. Tokenization is a plain
whitespace split; cleaning is idempotent, so re-cleaning cleaned text is
a no-op.

Time: a UTC timestamp becomes the 6-vector (month, day, hour, weekday,
is_working_hour, is_weekend), min-max scaled to [0, 1] with statistics
fit on the training split only.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import DataError

PAD_ID = 0
OOV_ID = 1
URL_TOKEN = "<url>"
TEMPORAL_FEATURES = ("month", "day", "hour", "weekday", "is_working_hour", "is_weekend")

# "<url>" matches too so already-cleaned text survives a second pass
_URL_RE = re.compile(r"(?:https?://|www\.)\S+|<url>")
_CTRL_RE = re.compile(r"[\x00-\x08\x0b-\x1f\x7f]")
_STRIP_RE = re.compile(r"[^a-z0-9'\s\x01]")
_WS_RE = re.compile(r"\s+")


def clean_text(title: str, selftext: str) -> str:
    text = _CTRL_RE.sub(" ", f"{title} {selftext}").lower()
    text = _URL_RE.sub("\x01", text)
    text = _STRIP_RE.sub(" ", text)
    text = _WS_RE.sub(" ", text).strip()
    return text.replace("\x01", URL_TOKEN)


@dataclass
class Vocab:
    """Token ids with PAD fixed at 0 and OOV at 1.

    Built from the training split only; ids 2.. are assigned by frequency
    (descending), ties broken lexicographically, so two builds over the
    same corpus are identical.
    """

    id_to_token: list

    def __post_init__(self):
        self.token_to_id = {tok: i for i, tok in enumerate(self.id_to_token)}

    def __len__(self) -> int:
        return len(self.id_to_token)

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, OOV_ID)


def build_vocab(corpus: list, max_tokens: int = 10000) -> Vocab:
    """Top ``max_tokens`` whitespace tokens of the cleaned corpus."""
    counts = Counter()
    for text in corpus:
        counts.update(text.split())
    if not counts:
        raise DataError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_tokens]
    return Vocab(id_to_token=["<pad>", "<oov>"] + [tok for tok, _ in ranked])


def encode_text(text: str, vocab: Vocab, max_len: int = 100):
    """First ``max_len`` tokens mapped to ids, right-padded; mask marks
    real tokens (OOV counts as real)."""
    toks = text.split()[:max_len]
    ids = [vocab.id_of(t) for t in toks]
    mask = [1] * len(ids)
    pad = max_len - len(ids)
    return ids + [PAD_ID] * pad, mask + [0] * pad


def extract_temporal(created_utc: int) -> np.ndarray:
    """UTC calendar decomposition of an epoch timestamp.

    month 1..12, day 1..31, hour 0..23, weekday 0..6 with Monday=0,
    is_working_hour = hour in 9..17 on a weekday, is_weekend = Sat/Sun.
    """
    if created_utc < 0:
        raise DataError(f"negative timestamp {created_utc}")
    dt = datetime.fromtimestamp(created_utc, tz=timezone.utc)
    weekend = 1.0 if dt.weekday() >= 5 else 0.0
    working = 1.0 if (9 <= dt.hour <= 17 and weekend == 0.0) else 0.0
    return np.array([dt.month, dt.day, dt.hour, dt.weekday(), working, weekend],
                    dtype=np.float64)


@dataclass
class TemporalScaler:
    """Per-feature min/max from the training split."""

    mins: np.ndarray
    maxs: np.ndarray


def fit_scaler(raw_vectors) -> TemporalScaler:
    stack = np.asarray(raw_vectors, dtype=np.float64)
    if stack.ndim != 2 or stack.shape[0] < 1 or stack.shape[1] != len(TEMPORAL_FEATURES):
        raise DataError("fit_scaler needs at least one 6-feature vector")
    return TemporalScaler(mins=stack.min(axis=0), maxs=stack.max(axis=0))


def apply_scaler(raw: np.ndarray, scaler: TemporalScaler) -> np.ndarray:
    """(x - min) / (max - min), constant features map to 0, clamped to [0, 1]
    so unseen validation values cannot escape the training range."""
    raw = np.asarray(raw, dtype=np.float64)
    span = scaler.maxs - scaler.mins
    out = np.zeros_like(raw)
    nz = span > 0
    out[nz] = (raw[nz] - scaler.mins[nz]) / span[nz]
    return np.clip(out, 0.0, 1.0)


@dataclass
class LabelMap:
    """Class names assigned ids in lexicographic order, so the mapping is
    stable across runs for the same label set."""

    names: list

    def __post_init__(self):
        self._ids = {name: i for i, name in enumerate(self.names)}

    @classmethod
    def from_labels(cls, labels) -> "LabelMap":
        names = sorted(set(labels))
        if not names:
            raise DataError("no labels to map")
        return cls(names=names)

    def __len__(self) -> int:
        return len(self.names)

    def id_of(self, name: str) -> int:
        if name not in self._ids:
            raise DataError(f"unknown label {name!r}")
        return self._ids[name]

    def name_of(self, class_id: int) -> str:
        if not 0 <= class_id < len(self.names):
            raise DataError(f"class id {class_id} out of range")
        return self.names[class_id]


@dataclass
class Example:
    """One preprocessed sample: fixed-length token ids plus mask, scaled
    6-feature temporal vector, class id. mask[i] == 0 iff token_ids[i]
    is padding."""

    token_ids: list
    mask: list
    temporal: list
    label: int

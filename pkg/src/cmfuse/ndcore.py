"""Dense float64 matrix kernels and deterministic, splittable randomness.

Every numeric value in the package is a 2-D numpy float64 array ("matrix"):
rows/cols are the shape, the flat row-major buffer is the data. Column
vectors are (n, 1) matrices. All kernels here keep finite inputs finite;
the saturating activations use overflow-proof formulations.

Randomness comes from Philox4x64-10, a counter-based generator whose output
depends only on (key, counter). Stream keys are derived by SHA-256 from a
seed plus a path of string labels, so every named stream is reproducible
bit-for-bit across runs and platforms, and drawing from one stream never
perturbs another.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np


class ShapeError(ValueError):
    """Operand shapes cannot be combined."""


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit conformability check.

    Raises ShapeError naming both shapes when a.cols != b.rows.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def sigmoid(x) -> np.ndarray:
    """Elementwise logistic function, stable for any finite input.

    exp is only ever evaluated at non-positive arguments, so large |x|
    saturates to 0.0 or 1.0 instead of overflowing.
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def tanh_m(x) -> np.ndarray:
    """Elementwise hyperbolic tangent. Output in (-1, 1)."""
    return np.tanh(np.asarray(x, dtype=np.float64))


def softmax_row(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a 2-D matrix, computed with max-subtraction.

    Each output row sums to 1 and preserves the argmax of its input row.
    Safe for logits of any finite magnitude.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise ShapeError(f"softmax_row needs a 2-D matrix, got shape {z.shape}")
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def init_glorot(rows: int, cols: int, rng: "RngState") -> np.ndarray:
    """Uniform Glorot initialization: entries in +-sqrt(6/(rows+cols))."""
    if rows < 1 or cols < 1:
        raise ShapeError(f"init_glorot needs positive dims, got ({rows}, {cols})")
    limit = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, (rows, cols))


class RngState:
    """Deterministic random stream with named substreams.

    A stream is identified by (seed, path). The Philox key is the first
    128 bits of SHA-256 over "seed/label/label/...", so identical seeds
    and paths reproduce identical draw sequences everywhere. ``split``
    derives an independent child stream without consuming parent state.
    """

    def __init__(self, seed: int, _path: tuple = ()):
        self.seed = int(seed)
        self._path = tuple(str(p) for p in _path)
        tag = "/".join([str(self.seed), *self._path]).encode("utf-8")
        key = int.from_bytes(hashlib.sha256(tag).digest()[:16], "little")
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def split(self, *labels) -> "RngState":
        """Independent child stream addressed by the given labels."""
        return RngState(self.seed, self._path + tuple(str(l) for l in labels))

    def uniform(self, low: float, high: float, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size)

    def random(self, size=None) -> np.ndarray:
        return self._gen.random(size)

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=replace)

    def __repr__(self):
        return f"RngState(seed={self.seed}, path={'/'.join(self._path) or '.'})"

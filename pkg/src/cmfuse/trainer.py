"""End-to-end training loop and single-post inference.

Each epoch: seeded shuffle (the stream is derived from (seed, epoch), so
any epoch's order can be reproduced in isolation), fixed-order mini-batches
with the last partial batch kept, per-example forward/backward, mean-loss
gradients, one RMSprop step per batch. After every epoch a full validation
pass runs in infer mode; the returned parameters are the snapshot with the
highest validation weighted F1 (ties keep the earlier epoch).

Everything downstream of (seed, data, config) is bit-reproducible, with
one exception: the wall-time field of an epoch log measures the host, not
the computation.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import layers, metrics, optim, preprocess
from .errors import NumericalError, UsageError
from .ndcore import RngState


@dataclass
class TrainConfig:
    """Hyperparameters; every field can be overridden by config file or flag."""

    epochs: int = 30
    batch_size: int = 64
    max_len: int = 100
    vocab_size: int = 10000       # cap on learned tokens, excludes pad/oov
    embed_dim: int = 128
    text_hidden: int = 64         # per direction
    time_hidden: int = 64
    d_fuse: int = 64
    d_att: int = 64
    dropout: float = 0.6
    eta: float = 0.0005
    beta: float = 0.99
    mu: float = 0.9
    epsilon: float = 1e-8
    weight_decay: float = 1e-5
    seed: int = 0


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float
    val_weighted_f1: float
    wall_s: float


def format_epoch_line(log: EpochLog) -> str:
    return (f"epoch={log.epoch} train_loss={log.train_loss:.6f} "
            f"val_loss={log.val_loss:.6f} val_accuracy={log.val_accuracy:.6f} "
            f"val_weighted_f1={log.val_weighted_f1:.6f} wall_s={log.wall_s:.2f}")


def _infer_dims(config: TrainConfig, examples, vocab_rows, n_classes) -> layers.ModelDims:
    if vocab_rows is None:
        vocab_rows = max(max(ex.token_ids) for ex in examples) + 1
        vocab_rows = max(vocab_rows, 2)
    if n_classes is None:
        n_classes = max(ex.label for ex in examples) + 1
    return layers.ModelDims(
        vocab_rows=vocab_rows, embed_dim=config.embed_dim,
        text_hidden=config.text_hidden, time_hidden=config.time_hidden,
        d_fuse=config.d_fuse, d_att=config.d_att, n_classes=n_classes)


def _example_pass(ex, params, config, rng):
    probs, trace = layers.model_forward(
        ex.token_ids, ex.mask, ex.temporal, params,
        mode="train", rng=rng, dropout=config.dropout)
    loss = optim.cross_entropy(probs, ex.label)
    grads = layers.model_backward(trace, params, optim.ce_softmax_grad(probs, ex.label))
    return loss, grads


def evaluate_split(params, examples, n_classes: int):
    """Infer-mode pass over a split: (mean loss, confusion matrix)."""
    y_true, y_pred = [], []
    total = 0.0
    for ex in examples:
        probs, _ = layers.model_forward(ex.token_ids, ex.mask, ex.temporal,
                                        params, mode="infer")
        total += optim.cross_entropy(probs, ex.label)
        y_true.append(ex.label)
        y_pred.append(int(np.argmax(probs)))  # lowest index wins ties
    cm = metrics.confusion(y_true, y_pred, n_classes)
    return total / len(examples), cm


def train(train_set, val_set, config: TrainConfig, *, vocab_rows=None,
          n_classes=None, threads: int = 1, log_writer=None):
    """Returns (best parameters by validation weighted F1, epoch logs)."""
    if not train_set or not val_set:
        raise UsageError("train and validation sets must be non-empty")
    dims = _infer_dims(config, list(train_set) + list(val_set), vocab_rows, n_classes)
    params = layers.init_model_params(dims, config.seed)
    state = optim.OptimizerState.fresh(
        params, eta=config.eta, beta=config.beta, mu=config.mu,
        epsilon=config.epsilon, weight_decay=config.weight_decay)
    root = RngState(config.seed)

    best = layers.copy_model_params(params)
    best_f1 = -1.0
    logs = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for epoch in range(config.epochs):
            started = time.perf_counter()
            order = root.split("shuffle", epoch).permutation(len(train_set))
            loss_sum = 0.0
            n_batches = math.ceil(len(order) / config.batch_size)
            for b in range(n_batches):
                batch = [train_set[i] for i in
                         order[b * config.batch_size:(b + 1) * config.batch_size]]
                rngs = [root.split("dropout", epoch, b, j) for j in range(len(batch))]
                if pool is not None:
                    results = list(pool.map(_example_pass, batch,
                                            [params] * len(batch),
                                            [config] * len(batch), rngs))
                else:
                    results = [_example_pass(ex, params, config, r)
                               for ex, r in zip(batch, rngs)]
                grads = layers.zero_grads(params)
                batch_loss = 0.0
                for loss, g in results:  # batch-index order, bit-reproducible
                    batch_loss += loss
                    for name in grads:
                        grads[name] += g[name]
                batch_loss /= len(batch)
                if not math.isfinite(batch_loss):
                    raise NumericalError(
                        f"training diverged: non-finite loss at epoch {epoch} batch {b}")
                for name in grads:
                    grads[name] /= len(batch)
                optim.rmsprop_step(params, grads, state)
                loss_sum += batch_loss * len(batch)

            val_loss, cm = evaluate_split(params, val_set, dims.n_classes)
            report = metrics.evaluate(cm)
            log = EpochLog(epoch=epoch, train_loss=loss_sum / len(train_set),
                           val_loss=val_loss, val_accuracy=report.accuracy,
                           val_weighted_f1=report.weighted_f1,
                           wall_s=time.perf_counter() - started)
            logs.append(log)
            if log_writer is not None:
                log_writer(format_epoch_line(log))
            if log.val_weighted_f1 > best_f1:
                best_f1 = log.val_weighted_f1
                best = layers.copy_model_params(params)
    finally:
        if pool is not None:
            pool.shutdown()
    return best, logs


@dataclass
class PredictResult:
    label: str
    class_probs: dict
    alpha_text: float
    alpha_time: float


def predict(bundle, title: str, selftext: str, created_utc: int) -> PredictResult:
    """Full preprocessing plus infer-mode forward for one raw post.

    Empty text still predicts: the pool then sees only the padding row.
    """
    text = preprocess.clean_text(title, selftext)
    ids, mask = preprocess.encode_text(text, bundle.vocab, bundle.config.max_len)
    if not any(mask):
        mask = [1] + mask[1:]
    raw = preprocess.extract_temporal(created_utc)
    scaled = preprocess.apply_scaler(raw, bundle.scaler)
    probs, trace = layers.model_forward(ids, mask, scaled, bundle.params, mode="infer")
    names = bundle.labelmap.names
    return PredictResult(
        label=names[int(np.argmax(probs))],
        class_probs={name: float(p) for name, p in zip(names, probs)},
        alpha_text=trace.attention.alpha_text,
        alpha_time=trace.attention.alpha_time,
    )

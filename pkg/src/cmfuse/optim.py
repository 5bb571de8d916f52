"""RMSprop-with-momentum updates, cross-entropy loss, and its logit gradient.

The update per tensor, with gradient g and parameter theta:

    g       <- g + weight_decay * theta          (coupled L2)
    sq_avg  <- beta * sq_avg + (1 - beta) * g^2
    step    <- eta * g / sqrt(sq_avg + epsilon)
    v       <- mu * v + step
    theta   <- theta - v

With mu = 0 this is plain RMSprop; the momentum buffer is classic velocity
applied to the adaptive step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, UsageError
from .ndcore import ShapeError

PROB_FLOOR = 1e-12  # clamp applied before log so the loss stays finite


@dataclass
class OptimizerState:
    """Per-tensor squared-gradient averages and momentum buffers.

    Tensor keys and shapes mirror the model's named tensors exactly.
    sq_avg entries stay >= 0 under any update sequence.
    """

    eta: float = 5e-4
    beta: float = 0.99
    mu: float = 0.9
    epsilon: float = 1e-8
    weight_decay: float = 1e-5
    sq_avg: dict = field(default_factory=dict)
    momentum: dict = field(default_factory=dict)

    @classmethod
    def fresh(cls, params, eta=5e-4, beta=0.99, mu=0.9, epsilon=1e-8,
              weight_decay=1e-5) -> "OptimizerState":
        """Zero-initialized state mirroring ``params.named_tensors()``."""
        state = cls(eta=eta, beta=beta, mu=mu, epsilon=epsilon,
                    weight_decay=weight_decay)
        for name, arr in params.named_tensors():
            state.sq_avg[name] = np.zeros_like(arr)
            state.momentum[name] = np.zeros_like(arr)
        return state


def rmsprop_step(params, grads: dict, state: OptimizerState) -> None:
    """Apply one update in place to every named tensor of ``params``.

    ``grads`` maps tensor name to a gradient of identical shape. Non-finite
    gradients abort with the offending tensor named; shape drift raises.
    """
    for name, theta in params.named_tensors():
        if name not in grads:
            raise UsageError(f"missing gradient for tensor '{name}'")
        g = grads[name]
        if g.shape != theta.shape:
            raise ShapeError(
                f"gradient shape {g.shape} != parameter shape {theta.shape} "
                f"for tensor '{name}'")
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient in tensor '{name}'")
        if state.weight_decay != 0.0:
            g = g + state.weight_decay * theta
        sq = state.sq_avg[name]
        sq *= state.beta
        sq += (1.0 - state.beta) * g * g
        step = state.eta * g / np.sqrt(sq + state.epsilon)
        v = state.momentum[name]
        v *= state.mu
        v += step
        theta -= v


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """-log p[label], with p clamped to >= 1e-12 before the log."""
    probs = np.asarray(probs, dtype=np.float64).reshape(-1)
    if not 0 <= label < probs.shape[0]:
        raise UsageError(f"label {label} out of range for {probs.shape[0]} classes")
    return -math.log(max(float(probs[label]), PROB_FLOOR))


def ce_softmax_grad(probs: np.ndarray, label: int) -> np.ndarray:
    """Gradient of cross-entropy wrt the logits that produced ``probs``.

    For softmax outputs this is probs - onehot(label); the components sum
    to zero because the probabilities sum to one.
    """
    probs = np.asarray(probs, dtype=np.float64).reshape(-1)
    if not 0 <= label < probs.shape[0]:
        raise UsageError(f"label {label} out of range for {probs.shape[0]} classes")
    grad = probs.copy()
    grad[label] -= 1.0
    return grad

"""Multi-modal post classifier: BiLSTM text branch + LSTM posting-time
branch, fused by a two-way modality attention gate. Pure numpy with
hand-derived gradients; fully deterministic given a seed."""

from .errors import CmfuseError, DataError, NumericalError, UsageError
from .layers import (ModelDims, ModelParams, grad_check, init_model_params,
                     model_backward, model_forward)
from .metrics import EvalReport, confusion, evaluate
from .ndcore import RngState
from .optim import OptimizerState, ce_softmax_grad, cross_entropy, rmsprop_step
from .preprocess import (Example, LabelMap, TemporalScaler, Vocab, build_vocab,
                         clean_text, encode_text, extract_temporal)
from .trainer import EpochLog, TrainConfig, predict, train

__version__ = "0.1.0"

__all__ = [
    "CmfuseError", "DataError", "NumericalError", "UsageError",
    "ModelDims", "ModelParams", "grad_check", "init_model_params",
    "model_backward", "model_forward",
    "EvalReport", "confusion", "evaluate",
    "RngState",
    "OptimizerState", "ce_softmax_grad", "cross_entropy", "rmsprop_step",
    "Example", "LabelMap", "TemporalScaler", "Vocab", "build_vocab",
    "clean_text", "encode_text", "extract_temporal",
    "EpochLog", "TrainConfig", "predict", "train",
    "__version__",
]

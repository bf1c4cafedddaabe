from .checkpoint import Checkpoint
from .layers import (
    batchnorm_forward,
    class_weights_from_frequencies,
    conv2d_forward,
    maxpool2x2,
    relu,
    sgdm_step,
    softmax,
    softmax_cross_entropy,
    softmax_cross_entropy_batch,
)
from .network import Network, NetworkSpec, backward
from .train import CurvePoint, TrainConfig, evaluate_loss, train, write_curves_csv

__all__ = [
    "BatchNorm",
    "Checkpoint",
    "CurvePoint",
    "Network",
    "NetworkSpec",
    "TrainConfig",
    "backward",
    "batchnorm_forward",
    "class_weights_from_frequencies",
    "conv2d_forward",
    "evaluate_loss",
    "maxpool2x2",
    "relu",
    "sgdm_step",
    "softmax",
    "softmax_cross_entropy",
    "softmax_cross_entropy_batch",
    "train",
    "write_curves_csv",
]

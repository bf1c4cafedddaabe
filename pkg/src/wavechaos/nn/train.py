"""SGDM training loop with per-iteration curves and deterministic seeding."""

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError, InvalidInputError
from .checkpoint import Checkpoint
from .layers import sgdm_step, softmax_cross_entropy_batch
from .network import Network, NetworkSpec


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 64
    max_epochs: int = 30
    seed: int = 0
    class_weights: tuple[float, float] = (1.0, 1.0)
    validation_frequency: int = 50
    lr_drop_factor: float = 0.0  # 0 disables; otherwise multiplies lr each epoch

    def __post_init__(self):
        if self.learning_rate < 0:
            raise InvalidInputError("learning_rate must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise InvalidInputError("momentum must be in [0, 1)")
        if self.batch_size < 1:
            raise InvalidInputError("batch_size must be >= 1")
        if self.max_epochs < 0:
            raise InvalidInputError("max_epochs must be >= 0")
        if min(self.class_weights) <= 0:
            raise InvalidInputError("class weights must be positive")
        if self.validation_frequency < 1:
            raise InvalidInputError("validation_frequency must be >= 1")


@dataclass
class CurvePoint:
    iteration: int
    loss: float
    accuracy: float
    split: str


def train(
    x,
    y,
    spec: NetworkSpec,
    config: TrainConfig,
    x_val=None,
    y_val=None,
) -> tuple[Checkpoint, list[CurvePoint]]:
    """Train a fresh network; returns the final checkpoint and curves.

    Shuffling is reseeded from ``config.seed`` so identical inputs give
    bit-identical parameters. Raises DivergenceError with the iteration
    index if the loss stops being finite.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 4 or x.shape[0] == 0:
        raise InvalidInputError("training images must be a nonempty NHWC array")
    if y.shape != (x.shape[0],):
        raise InvalidInputError("one label per training image required")
    network = Network(spec, seed=config.seed)
    velocities = [np.zeros_like(p) for _, p in network.param_items()]
    shuffle_rng = np.random.default_rng([config.seed & 0x7FFFFFFFFFFFFFFF, 0xD5])
    curves: list[CurvePoint] = []
    iteration = 0
    n = x.shape[0]
    for epoch in range(config.max_epochs):
        lr = config.learning_rate
        if config.lr_drop_factor > 0:
            lr *= config.lr_drop_factor**epoch
        order = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = x[idx], y[idx]
            logits = network.forward(xb, train=True)
            loss, dlogits = softmax_cross_entropy_batch(logits, yb, config.class_weights)
            if not math.isfinite(loss):
                raise DivergenceError("training loss became non-finite", iteration)
            network.backward(dlogits)
            params = [p for _, p in network.param_items()]
            sgdm_step(params, velocities, network.grad_list(), lr, config.momentum)
            acc = float((logits.argmax(axis=1) == yb).mean())
            curves.append(CurvePoint(iteration, loss, acc, "train"))
            iteration += 1
            if (
                x_val is not None
                and len(x_val)
                and iteration % config.validation_frequency == 0
            ):
                v_loss, v_acc = evaluate_loss(network, x_val, y_val, config.class_weights)
                curves.append(CurvePoint(iteration, v_loss, v_acc, "val"))
    checkpoint = Checkpoint.capture(network, velocities, seed=config.seed, epoch=config.max_epochs)
    return checkpoint, curves


def evaluate_loss(network: Network, x, y, class_weights, batch_size: int = 64):
    """Mean weighted loss and accuracy in inference mode."""
    y = np.asarray(y, dtype=np.int64)
    losses = []
    correct = 0
    for start in range(0, len(x), batch_size):
        xb = x[start : start + batch_size]
        yb = y[start : start + batch_size]
        logits = network.forward(xb, train=False)
        loss, _ = softmax_cross_entropy_batch(logits, yb, class_weights)
        losses.append(loss * len(xb))
        correct += int((logits.argmax(axis=1) == yb).sum())
    return float(np.sum(losses) / len(x)), correct / len(x)


def write_curves_csv(curves, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("iteration", "loss", "accuracy", "split"))
        for pt in curves:
            writer.writerow((pt.iteration, repr(pt.loss), repr(pt.accuracy), pt.split))

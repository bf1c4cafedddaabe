"""Network assembly: three conv/bn/relu/pool blocks, flatten, dense head."""

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError, InvalidStateError
from .layers import (
    BatchNorm,
    Conv2D,
    Dense,
    Flatten,
    MaxPool2x2,
    ReLU,
    softmax,
    softmax_cross_entropy_batch,
)


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture description; the default is the full-size classifier.

    Input is ``input_size`` square with ``in_channels`` channels; each conv
    block is [conv 3x3 same, batchnorm, relu, maxpool 2x2]; the dense head
    maps the flattened final block to ``n_classes`` logits.
    """

    input_size: int = 512
    in_channels: int = 1
    conv_channels: tuple[int, ...] = (8, 16, 32)
    n_classes: int = 2
    init_std: float = 0.01

    def __post_init__(self):
        if self.input_size % (1 << len(self.conv_channels)):
            raise InvalidInputError(
                f"input_size {self.input_size} not divisible by "
                f"2^{len(self.conv_channels)}"
            )
        if self.init_std <= 0:
            raise InvalidInputError("init_std must be positive")

    @property
    def dense_in(self) -> int:
        side = self.input_size >> len(self.conv_channels)
        return side * side * self.conv_channels[-1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "input_size": self.input_size,
                "in_channels": self.in_channels,
                "conv_channels": list(self.conv_channels),
                "n_classes": self.n_classes,
                "init_std": self.init_std,
            },
            sort_keys=True,
        )

    def hash(self) -> bytes:
        return hashlib.sha256(self.to_json().encode("ascii")).digest()


class Network:
    """An initialized network: ordered layers plus batched forward/backward."""

    def __init__(self, spec: NetworkSpec, seed: int):
        self.spec = spec
        self.layers = []
        c_in = spec.in_channels
        for i, c_out in enumerate(spec.conv_channels):
            rng = np.random.default_rng([seed & 0x7FFFFFFFFFFFFFFF, i])
            self.layers.append(Conv2D(c_in, c_out, rng, init_std=spec.init_std))
            self.layers.append(BatchNorm(c_out))
            self.layers.append(ReLU())
            self.layers.append(MaxPool2x2())
            c_in = c_out
        self.layers.append(Flatten())
        rng = np.random.default_rng([seed & 0x7FFFFFFFFFFFFFFF, len(spec.conv_channels)])
        self.layers.append(Dense(spec.dense_in, spec.n_classes, rng, init_std=spec.init_std))

    def forward(self, x, train: bool = False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 3:
            x = x[None]
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, dlogits):
        d = dlogits
        for layer in reversed(self.layers):
            d = layer.backward(d)
        return d

    def trace_shapes(self, x=None):
        """Per-layer (name, output shape sans batch) for one forward pass."""
        if x is None:
            x = np.zeros(
                (1, self.spec.input_size, self.spec.input_size, self.spec.in_channels)
            )
        shapes = []
        out = np.asarray(x, dtype=np.float64)
        if out.ndim == 3:
            out = out[None]
        for layer in self.layers:
            out = layer.forward(out, train=False)
            shapes.append((layer.name, out.shape[1:]))
        return shapes

    def predict_proba(self, x):
        """Class probabilities in inference mode."""
        return softmax(self.forward(x, train=False))

    def predict(self, x):
        return self.forward(x, train=False).argmax(axis=1)

    # fixed parameter traversal order shared by optimizer and checkpoints
    def param_items(self):
        out = []
        for i, layer in enumerate(self.layers):
            for name in sorted(layer.params):
                out.append((f"{i}.{layer.name}.{name}", layer.params[name]))
        return out

    def grad_list(self):
        out = []
        for layer in self.layers:
            for name in sorted(layer.params):
                if name not in layer.grads:
                    raise InvalidStateError("backward has not run for this network")
                out.append(layer.grads[name])
        return out

    def state_items(self):
        out = []
        for i, layer in enumerate(self.layers):
            for name in sorted(layer.state()):
                out.append((f"{i}.{layer.name}.{name}", layer.state()[name]))
        return out


def backward(network: Network, batch, labels, class_weights):
    """Full-network gradients of the mean weighted cross-entropy.

    Runs forward in train mode, then reverse-mode through every layer;
    returns (loss, gradients) with gradients in ``param_items`` order.
    """
    if not getattr(network, "layers", None):
        raise InvalidStateError("network has no layers")
    logits = network.forward(batch, train=True)
    loss, dlogits = softmax_cross_entropy_batch(logits, labels, class_weights)
    network.backward(dlogits)
    return loss, network.grad_list()

"""Layer primitives: forward/backward pairs over plain float64 ndarrays.

Activations are NHWC. Convolution kernels are (3, 3, c_in, c_out) and do
same-padding stride-1 cross-correlation. Every layer class caches what its
backward pass needs and accumulates parameter gradients in ``self.grads``.
"""

import numpy as np

from ..backend import kernels
from ..errors import InvalidInputError

BN_EPSILON = 1.0e-5
BN_DECAY = 0.9


def conv2d_forward(x, weights, bias):
    """3x3 same-padding convolution plus per-channel bias."""
    x = _as_batch(x)
    if weights.ndim != 4 or weights.shape[:2] != (3, 3):
        raise InvalidInputError(f"weights must be (3,3,ci,co), got {weights.shape}")
    if x.shape[3] != weights.shape[2]:
        raise InvalidInputError(
            f"input channels {x.shape[3]} != kernel channels {weights.shape[2]}"
        )
    if bias.shape != (weights.shape[3],):
        raise InvalidInputError(f"bias shape {bias.shape} != ({weights.shape[3]},)")
    return kernels().conv2d_fwd(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(bias, dtype=np.float64),
    )


def relu(x):
    """Element-wise max(0, x)."""
    return np.maximum(x, 0.0)


def maxpool2x2(x):
    """Non-overlapping 2x2 max pool, stride 2. Returns (output, argmax)."""
    x = _as_batch(x)
    if x.shape[1] % 2 or x.shape[2] % 2:
        raise InvalidInputError(f"spatial dims must be even, got {x.shape[1:3]}")
    return kernels().maxpool2x2_fwd(np.ascontiguousarray(x, dtype=np.float64))


def batchnorm_forward(
    x, gamma, beta_offset, epsilon=BN_EPSILON, mode="train", running=None, decay=BN_DECAY
):
    """Per-channel batch normalization over the (N, H, W) axes.

    Train mode normalizes by batch statistics and, when ``running`` (a dict
    with 'mean' and 'var' arrays) is given, folds them into the running
    exponential averages in place. Infer mode normalizes by the running
    statistics, which are then required.
    """
    x = _as_batch(x)
    if x.shape[0] == 0:
        raise InvalidInputError("zero-size batch")
    c = x.shape[3]
    if gamma.shape != (c,) or beta_offset.shape != (c,):
        raise InvalidInputError("gamma/beta length must equal channel count")
    if mode == "train":
        mean = x.mean(axis=(0, 1, 2))
        var = x.var(axis=(0, 1, 2))
        if running is not None:
            running["mean"][:] = decay * running["mean"] + (1.0 - decay) * mean
            running["var"][:] = decay * running["var"] + (1.0 - decay) * var
    elif mode == "infer":
        if running is None:
            raise InvalidInputError("infer mode requires running statistics")
        mean, var = running["mean"], running["var"]
    else:
        raise InvalidInputError(f"mode must be 'train' or 'infer', got {mode!r}")
    xhat = (x - mean) / np.sqrt(var + epsilon)
    return gamma * xhat + beta_offset


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, label, class_weights):
    """Weighted softmax cross-entropy for one sample.

    loss = -w[label] * log softmax(logits)[label]; the returned gradient is
    w[label] * (softmax(logits) - onehot(label)).
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1:
        raise InvalidInputError("single-sample loss expects a 1-D logit vector")
    if not 0 <= label < logits.size:
        raise InvalidInputError(f"label {label} out of range for {logits.size} classes")
    w = float(class_weights[label])
    z = logits - logits.max()
    logp = z - np.log(np.exp(z).sum())
    p = np.exp(logp)
    grad = w * p
    grad[label] -= w
    return -w * logp[label], grad


def softmax_cross_entropy_batch(logits, labels, class_weights):
    """Mean weighted cross-entropy over a batch; gradient matches the mean."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    n = logits.shape[0]
    if labels.shape != (n,):
        raise InvalidInputError("labels must be one index per row of logits")
    w = np.asarray(class_weights, dtype=np.float64)[labels]
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = float(-(w * logp[np.arange(n), labels]).mean())
    grad = np.exp(logp) * w[:, None]
    grad[np.arange(n), labels] -= w
    return loss, grad / n


def class_weights_from_frequencies(counts):
    """w_i = 1 / f_i with f_i the relative class frequency."""
    c0, c1 = counts
    if c0 <= 0 or c1 <= 0:
        raise InvalidInputError(f"class counts must be positive, got {counts}")
    total = c0 + c1
    return total / c0, total / c1


def sgdm_step(params, velocities, gradients, learning_rate, momentum):
    """In-place momentum update: v <- mu*v + g; p <- p - lr*v."""
    if not (len(params) == len(velocities) == len(gradients)):
        raise InvalidInputError("params, velocities and gradients must align")
    for p, v, g in zip(params, velocities, gradients):
        if p.shape != v.shape or p.shape != g.shape:
            raise InvalidInputError(
                f"shape mismatch in update: {p.shape}, {v.shape}, {g.shape}"
            )
        v *= momentum
        v += g
        p -= learning_rate * v
    return params, velocities


def _as_batch(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        x = x[None]
    if x.ndim != 4:
        raise InvalidInputError(f"expected NHWC activations, got shape {x.shape}")
    return x


# --- layer classes ----------------------------------------------------------


class Layer:
    name = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x, train: bool):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def state(self) -> dict[str, np.ndarray]:
        """Non-trainable tensors that must persist across save/load."""
        return {}


class Conv2D(Layer):
    name = "conv"

    def __init__(self, c_in, c_out, rng, init_std=0.01):
        super().__init__()
        self.params = {
            "w": rng.normal(0.0, init_std, size=(3, 3, c_in, c_out)),
            "b": np.zeros(c_out),
        }
        self._x = None

    def forward(self, x, train):
        self._x = x
        return conv2d_forward(x, self.params["w"], self.params["b"])

    def backward(self, dout):
        dx, dw, db = kernels().conv2d_bwd(
            np.ascontiguousarray(self._x),
            np.ascontiguousarray(self.params["w"]),
            np.ascontiguousarray(dout),
        )
        self.grads = {"w": dw, "b": db}
        return dx


class BatchNorm(Layer):
    name = "batchnorm"

    def __init__(self, channels, epsilon=BN_EPSILON, decay=BN_DECAY):
        super().__init__()
        self.params = {"gamma": np.ones(channels), "beta": np.zeros(channels)}
        self.running = {"mean": np.zeros(channels), "var": np.ones(channels)}
        self.epsilon = epsilon
        self.decay = decay
        self._cache = None

    def forward(self, x, train):
        if train:
            m = x.shape[0] * x.shape[1] * x.shape[2]
            mean = np.einsum("nhwc->c", x) / m
            var = np.einsum("nhwc,nhwc->c", x, x) / m - mean * mean
            self.running["mean"][:] = self.decay * self.running["mean"] + (1 - self.decay) * mean
            self.running["var"][:] = self.decay * self.running["var"] + (1 - self.decay) * var
        else:
            mean, var = self.running["mean"], self.running["var"]
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        # in-place arithmetic: these arrays are 10^6+ elements in training
        xhat = x - mean
        xhat *= inv_std
        self._cache = (xhat, inv_std, x.shape, train)
        out = xhat * self.params["gamma"]
        out += self.params["beta"]
        return out

    def backward(self, dout):
        xhat, inv_std, shape, train = self._cache
        m = shape[0] * shape[1] * shape[2]
        self.grads = {
            "gamma": np.einsum("nhwc,nhwc->c", dout, xhat),
            "beta": dout.sum(axis=(0, 1, 2)),
        }
        dxhat = dout * self.params["gamma"]
        if not train:
            dxhat *= inv_std
            return dxhat
        # gradient through the batch statistics
        sum_dxhat = dxhat.sum(axis=(0, 1, 2))
        sum_dxhat_xhat = np.einsum("nhwc,nhwc->c", dxhat, xhat)
        dxhat *= m
        dxhat -= sum_dxhat
        xhat *= sum_dxhat_xhat  # xhat cache is consumed by backward
        dxhat -= xhat
        dxhat *= inv_std / m
        return dxhat

    def state(self):
        return {"running_mean": self.running["mean"], "running_var": self.running["var"]}


class ReLU(Layer):
    name = "relu"

    def __init__(self):
        super().__init__()
        self._mask = None

    def forward(self, x, train):
        self._mask = x > 0
        return np.maximum(x, 0.0)

    def backward(self, dout):
        return dout * self._mask


class MaxPool2x2(Layer):
    name = "maxpool"

    def __init__(self):
        super().__init__()
        self._arg = None

    def forward(self, x, train):
        out, self._arg = maxpool2x2(x)
        return out

    def backward(self, dout):
        return kernels().maxpool2x2_bwd(np.ascontiguousarray(dout), self._arg)


class Flatten(Layer):
    name = "flatten"

    def __init__(self):
        super().__init__()
        self._shape = None

    def forward(self, x, train):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)


class Dense(Layer):
    name = "dense"

    def __init__(self, n_in, n_out, rng, init_std=0.01):
        super().__init__()
        self.params = {
            "w": rng.normal(0.0, init_std, size=(n_in, n_out)),
            "b": np.zeros(n_out),
        }
        self._x = None

    def forward(self, x, train):
        if x.ndim != 2 or x.shape[1] != self.params["w"].shape[0]:
            raise InvalidInputError(
                f"dense input shape {x.shape} incompatible with {self.params['w'].shape}"
            )
        self._x = x
        return x @ self.params["w"] + self.params["b"]

    def backward(self, dout):
        self.grads = {"w": self._x.T @ dout, "b": dout.sum(axis=0)}
        return dout @ self.params["w"].T

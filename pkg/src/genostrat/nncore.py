"""Dense-network substrate shared by the MLP, DBN and autoencoder code.

Arrays are plain float64 numpy arrays (rows = samples).  A network is a list of
:class:`DenseLayer`; :func:`forward` returns the output plus a cache that
:func:`backward` consumes to produce exact reverse-mode gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ConfigError, ShapeMismatch

LOG_CLAMP = 1e-12


class Activation(str, Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    SOFTMAX = "softmax"
    LINEAR = "linear"


def sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def activate(z: np.ndarray, kind: Activation) -> np.ndarray:
    if kind is Activation.RELU:
        return np.maximum(z, 0.0)
    if kind is Activation.SIGMOID:
        return sigmoid(z)
    if kind is Activation.TANH:
        return np.tanh(z)
    if kind is Activation.SOFTMAX:
        return softmax(z)
    return z


def activation_backward(grad: np.ndarray, z: np.ndarray, a: np.ndarray, kind: Activation) -> np.ndarray:
    """Map dL/da to dL/dz for one layer."""
    if kind is Activation.RELU:
        return grad * (z > 0)
    if kind is Activation.SIGMOID:
        return grad * a * (1.0 - a)
    if kind is Activation.TANH:
        return grad * (1.0 - a * a)
    if kind is Activation.SOFTMAX:
        return a * (grad - (grad * a).sum(axis=1, keepdims=True))
    return grad


@dataclass
class DenseLayer:
    weights: np.ndarray  # (in, out)
    bias: np.ndarray     # (out,)
    activation: Activation = Activation.LINEAR

    def __post_init__(self):
        self.activation = Activation(self.activation)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[1],):
            raise ShapeMismatch(f"weights {self.weights.shape} and bias {self.bias.shape} disagree")

    @property
    def n_in(self) -> int:
        return self.weights.shape[0]

    @property
    def n_out(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.bias.copy(), self.activation)


@dataclass(frozen=True)
class DropoutSpec:
    drop_probability: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.drop_probability < 1.0:
            raise ConfigError(f"drop_probability must lie in [0, 1), got {self.drop_probability}")


@dataclass
class ForwardCache:
    layers: list[DenseLayer]
    inputs: list[np.ndarray] = field(default_factory=list)   # input to each layer (after dropout)
    pre: list[np.ndarray] = field(default_factory=list)
    post: list[np.ndarray] = field(default_factory=list)     # activation before dropout
    masks: list[np.ndarray | None] = field(default_factory=list)


def check_chain(layers: Sequence[DenseLayer], n_features: int) -> None:
    width = n_features
    for i, layer in enumerate(layers):
        if layer.n_in != width:
            raise ShapeMismatch(f"layer {i} expects {layer.n_in} inputs, got {width}")
        if layer.activation is Activation.SOFTMAX and i != len(layers) - 1:
            raise ConfigError("softmax is only allowed on the output layer")
        width = layer.n_out


def forward(layers: Sequence[DenseLayer], x: np.ndarray, dropout: DropoutSpec | None = None,
            training: bool = False, rng: np.random.Generator | None = None) -> tuple[np.ndarray, ForwardCache]:
    """Affine + activation per layer; inverted dropout on hidden activations when training."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D input, got shape {x.shape}")
    check_chain(layers, x.shape[1])
    use_dropout = training and dropout is not None and dropout.drop_probability > 0.0
    if use_dropout and rng is None:
        rng = np.random.default_rng(dropout.seed)
    cache = ForwardCache(list(layers))
    a = x
    last = len(layers) - 1
    for i, layer in enumerate(layers):
        cache.inputs.append(a)
        z = a @ layer.weights + layer.bias
        out = activate(z, layer.activation)
        cache.pre.append(z)
        cache.post.append(out)
        mask = None
        if use_dropout and i < last:
            keep = 1.0 - dropout.drop_probability
            mask = (rng.random(out.shape) < keep) / keep
            out = out * mask
        cache.masks.append(mask)
        a = out
    return a, cache


def backward(cache: ForwardCache, grad_output: np.ndarray) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Return ([(dW, db) per layer], dL/dx) for the forward pass recorded in ``cache``."""
    grad = np.asarray(grad_output, dtype=np.float64)
    if grad.shape != cache.post[-1].shape:
        raise ShapeMismatch(f"grad_output {grad.shape} does not match output {cache.post[-1].shape}")
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(cache.layers)  # type: ignore[list-item]
    for i in range(len(cache.layers) - 1, -1, -1):
        layer = cache.layers[i]
        if cache.masks[i] is not None:
            grad = grad * cache.masks[i]
        dz = activation_backward(grad, cache.pre[i], cache.post[i], layer.activation)
        grads[i] = (cache.inputs[i].T @ dz, dz.sum(axis=0))
        grad = dz @ layer.weights.T
    return grads, grad


def predict(layers: Sequence[DenseLayer], x: np.ndarray) -> np.ndarray:
    return forward(layers, x, training=False)[0]


def cross_entropy(probabilities: np.ndarray, one_hot: np.ndarray) -> float:
    if probabilities.shape != one_hot.shape:
        raise ShapeMismatch(f"probabilities {probabilities.shape} vs labels {one_hot.shape}")
    if probabilities.shape[0] == 0:
        return 0.0
    logp = np.log(np.maximum(probabilities, LOG_CLAMP))
    return float(-(one_hot * logp).sum(axis=1).mean())


def cross_entropy_grad(probabilities: np.ndarray, one_hot: np.ndarray) -> np.ndarray:
    """dL/dp of :func:`cross_entropy` (mean over rows)."""
    n = probabilities.shape[0]
    return -one_hot / np.maximum(probabilities, LOG_CLAMP) / n


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def mse(y: np.ndarray, target: np.ndarray) -> float:
    """Mean over all elements of the squared difference."""
    return float(np.mean((y - target) ** 2))


def mse_grad(y: np.ndarray, target: np.ndarray) -> np.ndarray:
    return 2.0 * (y - target) / y.size


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def xavier_init(rows: int, cols: int, seed=0) -> np.ndarray:
    """U[-a, a] with a = sqrt(6 / (rows + cols)); ``seed`` may be an int or a Generator."""
    if rows < 1 or cols < 1:
        raise ShapeMismatch("xavier_init needs positive dimensions")
    limit = math.sqrt(6.0 / (rows + cols))
    return _as_rng(seed).uniform(-limit, limit, size=(rows, cols))


def init_layers(widths: Sequence[int], activations: Sequence[Activation], seed=0) -> list[DenseLayer]:
    """Xavier weights, zero biases, for the width chain ``widths``."""
    rng = _as_rng(seed)
    return [DenseLayer(xavier_init(a, b, rng), np.zeros(b), act)
            for a, b, act in zip(widths[:-1], widths[1:], activations)]


def layer_params(layers: Sequence[DenseLayer]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for layer in layers:
        out += [layer.weights, layer.bias]
    return out


def flat_grads(grads: Sequence[tuple[np.ndarray, np.ndarray]]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for dw, db in grads:
        out += [dw, db]
    return out


def set_layer_params(layers: Sequence[DenseLayer], params: Sequence[np.ndarray]) -> None:
    for i, layer in enumerate(layers):
        layer.weights = params[2 * i]
        layer.bias = params[2 * i + 1]


# optimizers -----------------------------------------------------------------

OPTIMIZERS = ("sgd_momentum", "adadelta")


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "sgd_momentum"
    learning_rate: float = 0.01
    momentum: float = 0.9
    rho: float = 0.95
    epsilon: float = 1e-6
    batch_size: int = 32

    def __post_init__(self):
        if self.kind not in OPTIMIZERS:
            raise ConfigError(f"optimizer kind must be one of {OPTIMIZERS}, got {self.kind!r}")
        if self.kind == "sgd_momentum" and self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.kind == "sgd_momentum" and not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must lie in [0, 1)")
        if self.kind == "adadelta":
            if not 0.0 < self.rho < 1.0:
                raise ConfigError("rho must lie in (0, 1)")
            if self.epsilon <= 0:
                raise ConfigError("epsilon must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")

    @classmethod
    def sgd(cls, learning_rate=0.01, momentum=0.9, batch_size=32) -> "OptimizerConfig":
        return cls("sgd_momentum", learning_rate=learning_rate, momentum=momentum, batch_size=batch_size)

    @classmethod
    def adadelta(cls, rho=0.95, epsilon=1e-6, batch_size=32) -> "OptimizerConfig":
        return cls("adadelta", rho=rho, epsilon=epsilon, batch_size=batch_size)


def _check_shapes(params, grads):
    if len(params) != len(grads) or any(p.shape != g.shape for p, g in zip(params, grads)):
        raise ShapeMismatch("parameter and gradient shapes differ")


def sgd_momentum_step(params, grads, state, config: OptimizerConfig):
    """v <- mu*v - lr*g ; p <- p + v.  Returns (new_params, new_state)."""
    _check_shapes(params, grads)
    velocity = state if state is not None else [np.zeros_like(p) for p in params]
    new_v = [config.momentum * v - config.learning_rate * g for v, g in zip(velocity, grads)]
    return [p + v for p, v in zip(params, new_v)], new_v


def adadelta_step(params, grads, state, config: OptimizerConfig):
    """Running averages of g^2 and update^2 with decay rho; step = -RMS(update)/RMS(g) * g."""
    _check_shapes(params, grads)
    if state is None:
        state = ([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])
    acc_g, acc_d = state
    rho, eps = config.rho, config.epsilon
    new_g, new_d, new_p = [], [], []
    for p, g, ag, ad in zip(params, grads, acc_g, acc_d):
        ag = rho * ag + (1.0 - rho) * g * g
        delta = -np.sqrt(ad + eps) / np.sqrt(ag + eps) * g
        ad = rho * ad + (1.0 - rho) * delta * delta
        new_g.append(ag)
        new_d.append(ad)
        new_p.append(p + delta)
    return new_p, (new_g, new_d)


def optimizer_step(params, grads, state, config: OptimizerConfig):
    if config.kind == "adadelta":
        return adadelta_step(params, grads, state, config)
    return sgd_momentum_step(params, grads, state, config)


def minibatches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]

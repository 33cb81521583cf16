"""Bernoulli restricted Boltzmann machine: energy, conditionals, CD-1 and exact enumeration.

Visible inputs may be real values in [0, 1]; they are used as Bernoulli means
at the data layer.  ``exact_partition``/``exact_marginal`` enumerate every
binary configuration and are only meant for tiny models (m + n <= 20).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, ShapeMismatch, TooLarge, ValueOutOfRange
from .nncore import sigmoid

ENUMERATION_LIMIT = 20


@dataclass
class Rbm:
    weights: np.ndarray       # (m visible, n hidden)
    visible_bias: np.ndarray  # (m,)
    hidden_bias: np.ndarray   # (n,)

    def __post_init__(self):
        m, n = self.weights.shape
        if self.visible_bias.shape != (m,) or self.hidden_bias.shape != (n,):
            raise ShapeMismatch("bias shapes do not match the weight matrix")

    @property
    def n_visible(self) -> int:
        return self.weights.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def init(cls, n_visible: int, n_hidden: int, seed=0, scale: float = 0.01,
             visible_mean: np.ndarray | None = None) -> "Rbm":
        """Small Gaussian weights and zero hidden biases.

        Visible biases are zero, or logit(visible_mean) when the data marginals
        are given, so the weights start out modelling covariance rather than means.
        """
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        b = np.zeros(n_visible)
        if visible_mean is not None:
            p = np.clip(np.asarray(visible_mean, dtype=np.float64), 1e-3, 1.0 - 1e-3)
            b = np.log(p / (1.0 - p))
        return cls(rng.normal(0.0, scale, size=(n_visible, n_hidden)), b, np.zeros(n_hidden))

    def copy(self) -> "Rbm":
        return Rbm(self.weights.copy(), self.visible_bias.copy(), self.hidden_bias.copy())


@dataclass(frozen=True)
class CdConfig:
    learning_rate: float = 0.1
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")


def energy(rbm: Rbm, v, h) -> float:
    v = np.asarray(v, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if v.shape != (rbm.n_visible,) or h.shape != (rbm.n_hidden,):
        raise ShapeMismatch(f"expected v of length {rbm.n_visible} and h of length {rbm.n_hidden}")
    return float(-(rbm.visible_bias @ v) - (rbm.hidden_bias @ h) - v @ rbm.weights @ h)


def hidden_probs(rbm: Rbm, v) -> np.ndarray:
    """p(h_j = 1 | v) for a vector or a batch of rows."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != rbm.n_visible:
        raise ShapeMismatch(f"expected {rbm.n_visible} visible units, got {v.shape[-1]}")
    return sigmoid(rbm.hidden_bias + v @ rbm.weights)


def visible_probs(rbm: Rbm, h) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != rbm.n_hidden:
        raise ShapeMismatch(f"expected {rbm.n_hidden} hidden units, got {h.shape[-1]}")
    return sigmoid(rbm.visible_bias + h @ rbm.weights.T)


def check_unit_interval(x: np.ndarray) -> None:
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ValueOutOfRange("visible values must lie in [0, 1]")


@dataclass
class CdTrace:
    """Intermediate quantities of one CD-1 step (for inspection and tests)."""
    h_data: np.ndarray
    h_sample: np.ndarray
    v_recon: np.ndarray
    h_recon: np.ndarray


def cd1_update(rbm: Rbm, batch: np.ndarray, config: CdConfig, rng: np.random.Generator,
               trace: list | None = None) -> tuple[Rbm, float]:
    """One contrastive-divergence step on ``batch``; returns (new rbm, reconstruction MSE).

    Statistics use probabilities; only the hidden state driving the
    reconstruction is sampled.
    """
    v_data = np.asarray(batch, dtype=np.float64)
    if v_data.ndim != 2 or v_data.shape[1] != rbm.n_visible:
        raise ShapeMismatch(f"batch shape {v_data.shape} does not match {rbm.n_visible} visible units")
    check_unit_interval(v_data)
    b = v_data.shape[0]
    h_data = hidden_probs(rbm, v_data)
    h_sample = (rng.random(h_data.shape) < h_data).astype(np.float64)
    v_recon = visible_probs(rbm, h_sample)
    h_recon = hidden_probs(rbm, v_recon)
    if trace is not None:
        trace.append(CdTrace(h_data, h_sample, v_recon, h_recon))
    eps = config.learning_rate
    dw = eps * (v_data.T @ h_data - v_recon.T @ h_recon) / b
    db = eps * (v_data - v_recon).mean(axis=0)
    dc = eps * (h_data - h_recon).mean(axis=0)
    new = Rbm(rbm.weights + dw, rbm.visible_bias + db, rbm.hidden_bias + dc)
    return new, float(np.mean((v_data - v_recon) ** 2))


def reconstruction_error(rbm: Rbm, data: np.ndarray) -> float:
    """Deterministic mean-field reconstruction MSE: v -> p(h|v) -> p(v|h)."""
    v = np.asarray(data, dtype=np.float64)
    return float(np.mean((v - visible_probs(rbm, hidden_probs(rbm, v))) ** 2))


def train_rbm(rbm: Rbm, data: np.ndarray, config: CdConfig,
              rng: np.random.Generator | None = None) -> tuple[Rbm, list[float]]:
    """Mini-batch CD-1 for ``config.epochs`` epochs.

    The history holds the mean-field reconstruction error before training
    followed by one value per epoch.
    """
    data = np.asarray(data, dtype=np.float64)
    check_unit_interval(data)
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    history = [reconstruction_error(rbm, data)]
    for _ in range(config.epochs):
        order = rng.permutation(len(data))
        for start in range(0, len(data), config.batch_size):
            rbm, _ = cd1_update(rbm, data[order[start:start + config.batch_size]], config, rng)
        history.append(reconstruction_error(rbm, data))
    return rbm, history


# exact enumeration ------------------------------------------------------------

def _binary_states(k: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=k))).reshape(2 ** k, k)


def _check_enumerable(rbm: Rbm) -> None:
    if rbm.n_visible + rbm.n_hidden > ENUMERATION_LIMIT:
        raise TooLarge(f"m + n = {rbm.n_visible + rbm.n_hidden} exceeds {ENUMERATION_LIMIT}")


def _neg_energies(rbm: Rbm) -> tuple[np.ndarray, np.ndarray]:
    """-E(v, h) for every visible state (rows) and hidden state (columns)."""
    vs = _binary_states(rbm.n_visible)
    hs = _binary_states(rbm.n_hidden)
    neg = (vs @ rbm.visible_bias)[:, None] + (hs @ rbm.hidden_bias)[None, :] + vs @ rbm.weights @ hs.T
    return vs, neg


def log_partition(rbm: Rbm) -> float:
    _check_enumerable(rbm)
    _, neg = _neg_energies(rbm)
    return float(logsumexp(neg))


def exact_partition(rbm: Rbm) -> float:
    """Z = sum over all (v, h) of exp(-E(v, h))."""
    return float(np.exp(log_partition(rbm)))


def exact_log_marginal(rbm: Rbm, v) -> float:
    _check_enumerable(rbm)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (rbm.n_visible,):
        raise ShapeMismatch(f"expected v of length {rbm.n_visible}")
    hs = _binary_states(rbm.n_hidden)
    neg = rbm.visible_bias @ v + hs @ rbm.hidden_bias + hs @ (v @ rbm.weights)
    return float(logsumexp(neg) - log_partition(rbm))


def exact_marginal(rbm: Rbm, v) -> float:
    return float(np.exp(exact_log_marginal(rbm, v)))


def exact_marginals(rbm: Rbm) -> tuple[np.ndarray, np.ndarray]:
    """All visible states and their probabilities p(v)."""
    _check_enumerable(rbm)
    vs, neg = _neg_energies(rbm)
    log_pv = logsumexp(neg, axis=1) - logsumexp(neg)
    return vs, np.exp(log_pv)


def average_log_likelihood(rbm: Rbm, patterns: np.ndarray) -> float:
    """(1/|D|) sum log p(v) over binary training patterns, by enumeration."""
    return float(np.mean([exact_log_marginal(rbm, v) for v in np.asarray(patterns, dtype=np.float64)]))

"""Deep embedded clustering on a dense stacked denoising autoencoder.

Pipeline: greedy layer-wise denoising pre-training, end-to-end autoencoder
fine-tuning, K-means on the latent codes to place the initial centroids, then
alternating target-distribution refreshes with mini-batch SGD on
``KL(P || Q) + gamma * reconstruction`` over the encoder, decoder and centroids.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import kmeans, nncore
from .errors import (
    ConfigError,
    DegenerateCluster,
    KTooLarge,
    NotPretrained,
    ShapeMismatch,
    ValueOutOfRange,
    ZeroQEntry,
)
from .featurize import FeatureMatrix
from .nncore import Activation, DenseLayer, DropoutSpec, OptimizerConfig


@dataclass
class Autoencoder:
    encoder: list[DenseLayer]
    decoder: list[DenseLayer]  # decoder[0] consumes the code, decoder[-1] emits the input width
    pretrained: bool = False
    finetuned: bool = False
    offset: np.ndarray | None = None  # per-feature mean removed before encoding

    def center(self, x: np.ndarray) -> np.ndarray:
        return x if self.offset is None else x - self.offset

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.encoder[0].n_in, *(layer.n_out for layer in self.encoder))

    @property
    def latent_dim(self) -> int:
        return self.encoder[-1].n_out

    @property
    def layers(self) -> list[DenseLayer]:
        return self.encoder + self.decoder

    def copy(self) -> "Autoencoder":
        offset = None if self.offset is None else self.offset.copy()
        return Autoencoder([l.copy() for l in self.encoder], [l.copy() for l in self.decoder],
                           self.pretrained, self.finetuned, offset)


def build_autoencoder(dims, seed=0) -> Autoencoder:
    """Xavier-initialised mirror stack for ``dims = (input, h1, ..., latent)``.

    ReLU throughout except the latent code and the final reconstruction, which
    are linear.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ConfigError(f"autoencoder dims need >= 2 positive widths, got {dims}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_pairs = len(dims) - 1
    encoder, decoder_pairs = [], []
    for i in range(n_pairs):
        d_in, d_out = dims[i], dims[i + 1]
        enc_act = Activation.LINEAR if i == n_pairs - 1 else Activation.RELU
        dec_act = Activation.LINEAR if i == 0 else Activation.RELU
        encoder.append(DenseLayer(nncore.xavier_init(d_in, d_out, rng), np.zeros(d_out), enc_act))
        decoder_pairs.append(DenseLayer(nncore.xavier_init(d_out, d_in, rng), np.zeros(d_in), dec_act))
    return Autoencoder(encoder, decoder_pairs[::-1])


def _features(data) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        return data.to_float("half")
    return np.asarray(data, dtype=np.float64)


def encode(ae: Autoencoder, data) -> np.ndarray:
    return nncore.predict(ae.encoder, ae.center(_features(data)))


def reconstruct(ae: Autoencoder, data) -> np.ndarray:
    y = nncore.predict(ae.layers, ae.center(_features(data)))
    return y if ae.offset is None else y + ae.offset


def squared_error(y: np.ndarray, target: np.ndarray) -> float:
    """Mean over rows of the squared Euclidean reconstruction error."""
    return float(np.einsum("ij,ij->", y - target, y - target) / len(y))


def squared_error_grad(y: np.ndarray, target: np.ndarray) -> np.ndarray:
    return 2.0 * (y - target) / len(y)


def reconstruction_loss(ae: Autoencoder, data) -> float:
    x = _features(data)
    return squared_error(reconstruct(ae, x), x)


def step_learning_rate(base: float, iteration: int, decay_every: int | None, factor: float = 0.1) -> float:
    if not decay_every:
        return base
    return base * factor ** (iteration // decay_every)


class _BatchCycler:
    """Endless shuffled mini-batches: one permutation per pass over the data."""

    def __init__(self, n: int, batch_size: int, rng: np.random.Generator):
        self.n, self.batch_size, self.rng = n, batch_size, rng
        self._order = rng.permutation(n)
        self._pos = 0

    def __next__(self) -> np.ndarray:
        if self._pos >= self.n:
            self._order = self.rng.permutation(self.n)
            self._pos = 0
        idx = self._order[self._pos:self._pos + self.batch_size]
        self._pos += self.batch_size
        return idx


def _train_reconstruction(layers: list[DenseLayer], x: np.ndarray, iterations: int,
                          optimizer: OptimizerConfig, rng: np.random.Generator,
                          corruption: float = 0.0, lr_decay_every: int | None = None) -> None:
    """Minimise mean squared reconstruction of ``x`` by ``layers`` in place.

    With ``corruption > 0`` the input and every hidden activation are passed
    through (inverted) dropout at rate ``corruption``.
    """
    dropout = DropoutSpec(corruption, 0) if corruption > 0 else None
    keep = 1.0 - corruption
    params = nncore.layer_params(layers)
    state = None
    batches = _BatchCycler(len(x), optimizer.batch_size, rng)
    for it in range(iterations):
        idx = next(batches)
        target = x[idx]
        inp = target
        if dropout is not None:
            inp = target * ((rng.random(target.shape) < keep) / keep)
        y, cache = nncore.forward(layers, inp, dropout, training=True, rng=rng)
        grads, _ = nncore.backward(cache, squared_error_grad(y, target))
        cfg = optimizer
        if lr_decay_every and optimizer.kind == "sgd_momentum":
            cfg = OptimizerConfig.sgd(step_learning_rate(optimizer.learning_rate, it, lr_decay_every),
                                      optimizer.momentum, optimizer.batch_size)
        params, state = nncore.optimizer_step(params, nncore.flat_grads(grads), state, cfg)
        nncore.set_layer_params(layers, params)


def pretrain_sae(unlabeled, dims, dropout_corruption: float = 0.5, iterations_per_layer: int = 5000,
                 optimizer: OptimizerConfig = OptimizerConfig.sgd(0.001, 0.9, 128), seed: int = 0,
                 lr_decay_every: int | None = 500) -> Autoencoder:
    """Greedy layer-wise denoising pre-training.

    ``dims`` lists the hidden widths down to the latent code; the input width is
    taken from the data.  Pair l trains on the clean codes of pairs < l.
    Features are centred on their column means first: an uncentred
    non-negative input leaves most first-layer ReLUs always on or always off.
    """
    x = _features(unlabeled)
    if x.size and (x.min() < 0.0 or not np.isfinite(x).all()):
        raise ValueOutOfRange("autoencoder input must be finite and non-negative")
    if not 0.0 <= dropout_corruption < 1.0:
        raise ConfigError("dropout_corruption must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    ae = build_autoencoder((x.shape[1], *dims), rng)
    ae.offset = x.mean(axis=0)
    n_pairs = len(ae.encoder)
    h = ae.center(x)
    for i in range(n_pairs):
        enc = ae.encoder[i]
        dec = ae.decoder[n_pairs - 1 - i]
        _train_reconstruction([enc, dec], h, iterations_per_layer, optimizer, rng,
                              dropout_corruption, lr_decay_every)
        h = nncore.predict([enc], h)
    ae.pretrained = True
    return ae


def finetune_ae(autoencoder: Autoencoder, data, iterations: int = 5000,
                optimizer: OptimizerConfig = OptimizerConfig.sgd(0.001, 0.9, 128), seed: int = 0,
                lr_decay_every: int | None = 500) -> Autoencoder:
    """End-to-end reconstruction training of the unrolled stack, no corruption."""
    ae = autoencoder.copy()
    x = ae.center(_features(data))
    _train_reconstruction(ae.layers, x, iterations, optimizer, np.random.default_rng(seed),
                          0.0, lr_decay_every)
    ae.finetuned = True
    return ae


# clustering objective ----------------------------------------------------------

def _sq_dist(z: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    if z.ndim != 2 or centroids.ndim != 2 or z.shape[1] != centroids.shape[1]:
        raise ShapeMismatch(f"latent points {z.shape} vs centroids {centroids.shape}")
    d = np.empty((len(z), len(centroids)))
    for j, c in enumerate(centroids):
        diff = z - c
        d[:, j] = np.einsum("ij,ij->i", diff, diff)
    return d


def soft_assign(z: np.ndarray, centroids: np.ndarray, alpha: float = 1.0) -> np.ndarray:
    """Student-t similarity of each point to each centroid, rows normalised."""
    d = _sq_dist(np.asarray(z, dtype=np.float64), np.asarray(centroids, dtype=np.float64))
    kernel = (1.0 + d / alpha) ** (-(alpha + 1.0) / 2.0)
    return kernel / kernel.sum(axis=1, keepdims=True)


def target_distribution(q: np.ndarray) -> np.ndarray:
    """Square Q, divide by soft cluster frequencies, renormalise rows."""
    q = np.asarray(q, dtype=np.float64)
    freq = q.sum(axis=0)
    if (freq <= 0).any():
        raise DegenerateCluster(f"cluster(s) {np.flatnonzero(freq <= 0).tolist()} have zero soft frequency")
    weight = q * q / freq
    return weight / weight.sum(axis=1, keepdims=True)


def kl_loss(p: np.ndarray, q: np.ndarray) -> float:
    """sum_ij p_ij log(p_ij / q_ij) with 0 log 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ShapeMismatch(f"P {p.shape} vs Q {q.shape}")
    active = p > 0
    if (q[active] <= 0).any():
        raise ZeroQEntry("Q has a zero entry where P is positive")
    return float((p[active] * np.log(p[active] / q[active])).sum())


def dec_gradients(z: np.ndarray, centroids: np.ndarray, p: np.ndarray, q: np.ndarray,
                  alpha: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """(dL/dz, dL/dmu) of KL(P || Q) with P held fixed."""
    z = np.asarray(z, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    if p.shape != q.shape or p.shape != (len(z), len(centroids)):
        raise ShapeMismatch("P and Q must be (points x centroids)")
    w = 1.0 / (1.0 + _sq_dist(z, centroids) / alpha)
    coef = (alpha + 1.0) / alpha * w * (p - q)
    grad_z = coef.sum(axis=1)[:, None] * z - coef @ centroids
    grad_mu = -(coef.T @ z - coef.sum(axis=0)[:, None] * centroids)
    return grad_z, grad_mu


# training -------------------------------------------------------------------------

@dataclass(frozen=True)
class DecConfig:
    alpha: float = 1.0
    tol: float = 0.001
    gamma: float = 0.1
    update_interval: int | None = None  # None: one pass over the data
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 256
    max_iterations: int = 5000
    kmeans_restarts: int = 100
    seed: int = 0
    # autoencoder construction when none is supplied
    hidden_dims: tuple[int, ...] = (500, 250, 100)
    corruption: float = 0.5
    pretrain_iterations: int = 5000
    finetune_iterations: int = 5000
    ae_learning_rate: float = 0.001
    ae_batch_size: int = 128
    lr_decay_every: int | None = 500

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if not 0.0 <= self.tol <= 1.0:
            raise ConfigError("tol must lie in [0, 1]")
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if self.update_interval is not None and self.update_interval < 1:
            raise ConfigError("update_interval must be >= 1")
        if self.learning_rate < 0 or self.ae_learning_rate <= 0:
            raise ConfigError("learning rates must be non-negative (autoencoder: positive)")
        if self.batch_size < 1 or self.max_iterations < 0:
            raise ConfigError("batch_size must be >= 1 and max_iterations >= 0")


@dataclass(frozen=True)
class DecInterval:
    iteration: int
    kl_loss: float
    reconstruction_loss: float
    label_change_fraction: float


@dataclass
class DecState:
    autoencoder: Autoencoder
    centroids: np.ndarray
    alpha: float
    tol: float
    gamma: float
    q: np.ndarray
    p: np.ndarray
    history: list[DecInterval] = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False
    initial_labels: np.ndarray | None = None


def build_pretrained_autoencoder(x: np.ndarray, config: DecConfig) -> Autoencoder:
    opt = OptimizerConfig.sgd(config.ae_learning_rate, 0.9, config.ae_batch_size)
    ae = pretrain_sae(x, config.hidden_dims, config.corruption, config.pretrain_iterations, opt,
                      config.seed, config.lr_decay_every)
    return finetune_ae(ae, x, config.finetune_iterations, opt, config.seed + 1, config.lr_decay_every)


def train_dec(data, k: int, config: DecConfig = DecConfig(),
              autoencoder: Autoencoder | None = None) -> tuple[DecState, np.ndarray]:
    x = _features(data)
    n = len(x)
    if k < 2 or k > n:
        raise KTooLarge(f"k={k} must lie in [2, {n}]")
    if autoencoder is None:
        autoencoder = build_pretrained_autoencoder(x, config)
    elif not autoencoder.pretrained:
        raise NotPretrained("train_dec needs a pre-trained autoencoder")
    ae = autoencoder.copy()
    alpha = config.alpha
    x = ae.center(x)

    km = kmeans.fit(nncore.predict(ae.encoder, x), k, restarts=config.kmeans_restarts, seed=config.seed)
    centroids = km.centroids.copy()
    prev_labels = km.assignments.copy()

    interval = config.update_interval or max(1, math.ceil(n / config.batch_size))
    # learning_rate 0 freezes every parameter; the loop still runs and reports
    opt = OptimizerConfig.sgd(config.learning_rate, config.momentum, config.batch_size) \
        if config.learning_rate > 0 else None
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[1])
    batches = _BatchCycler(n, config.batch_size, rng)
    n_enc = len(ae.encoder)
    params = nncore.layer_params(ae.encoder) + nncore.layer_params(ae.decoder) + [centroids]
    state = None
    history: list[DecInterval] = []
    p = q = None
    converged = False
    it = 0
    while True:
        if it % interval == 0:
            z_all = nncore.predict(ae.encoder, x)
            q = soft_assign(z_all, centroids, alpha)
            p = target_distribution(q)
            labels = q.argmax(axis=1)
            change = float(np.mean(labels != prev_labels))
            recon = squared_error(nncore.predict(ae.decoder, z_all), x)
            history.append(DecInterval(it, kl_loss(p, q), recon, change))
            prev_labels = labels
            if it > 0 and change < config.tol:
                converged = True
                break
        if it >= config.max_iterations:
            break
        idx = next(batches)
        it += 1
        if opt is None:
            continue
        xb = x[idx]
        z, enc_cache = nncore.forward(ae.encoder, xb)
        qb = soft_assign(z, centroids, alpha)
        grad_z, grad_mu = dec_gradients(z, centroids, p[idx], qb, alpha)
        grad_z /= len(idx)
        grad_mu /= len(idx)
        dec_grads = [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in ae.decoder]
        if config.gamma > 0:
            y, dec_cache = nncore.forward(ae.decoder, z)
            dec_grads, grad_z_rec = nncore.backward(dec_cache, config.gamma * squared_error_grad(y, xb))
            grad_z = grad_z + grad_z_rec
        enc_grads, _ = nncore.backward(enc_cache, grad_z)
        grads = nncore.flat_grads(enc_grads) + nncore.flat_grads(dec_grads) + [grad_mu]
        params, state = nncore.optimizer_step(params, grads, state, opt)
        nncore.set_layer_params(ae.encoder, params[: 2 * n_enc])
        nncore.set_layer_params(ae.decoder, params[2 * n_enc: -1])
        centroids = params[-1]

    q = soft_assign(nncore.predict(ae.encoder, x), centroids, alpha)
    labels = q.argmax(axis=1)
    dec_state = DecState(ae, centroids, alpha, config.tol, config.gamma, q, target_distribution(q),
                         history, it, converged, km.assignments.copy())
    return dec_state, labels


def write_embedding_csv(sample_ids, z: np.ndarray, labels, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", *[f"z_{i + 1}" for i in range(z.shape[1])], "cluster"])
        for s, row, c in zip(sample_ids, z, labels):
            w.writerow([s, *[repr(float(v)) for v in row], int(c)])


def write_history_csv(history, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["interval", "kl_loss", "recon_loss", "label_change_fraction"])
        for i, h in enumerate(history):
            w.writerow([i, repr(h.kl_loss), repr(h.reconstruction_loss), repr(h.label_change_fraction)])

"""Feed-forward softmax classifier with dropout, stratified k-fold CV and grid search."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import nncore
from .errors import ClassTooSmall, ConfigError, EmptyDataset, EmptyGrid, ShapeMismatch, SingleClass
from .featurize import FeatureMatrix, LabeledDataset
from .metrics import ClassificationScore, classification_score, mean_score
from .nncore import Activation, DenseLayer, DropoutSpec, OptimizerConfig


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    accuracy: float
    val_loss: float | None = None
    val_accuracy: float | None = None


@dataclass(frozen=True)
class MlpConfig:
    hidden_layers: tuple[int, ...] = (256, 256, 256, 256)
    epochs: int = 50
    dropout: DropoutSpec = DropoutSpec(0.5, 0)
    optimizer: OptimizerConfig = OptimizerConfig.adadelta(rho=0.99, epsilon=1e-8, batch_size=32)
    seed: int = 0
    hidden_activation: Activation = Activation.RELU
    scaling: str = "half"

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        object.__setattr__(self, "hidden_activation", Activation(self.hidden_activation))
        if any(w < 1 for w in self.hidden_layers):
            raise ConfigError("hidden layer widths must be >= 1")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.hidden_activation is Activation.SOFTMAX:
            raise ConfigError("softmax is only allowed on the output layer")


@dataclass
class MlpClassifier:
    layers: list[DenseLayer]
    label_vocabulary: tuple[str, ...]
    history: list[EpochStats] = field(default_factory=list)
    scaling: str = "half"

    @property
    def n_features(self) -> int:
        return self.layers[0].n_in


def seed_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (init, shuffle) generators derived from one seed."""
    init_ss, shuffle_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_ss), np.random.default_rng(shuffle_ss)


def as_features(x, scaling: str) -> np.ndarray:
    if isinstance(x, FeatureMatrix):
        return x.to_float(scaling)
    return np.asarray(x, dtype=np.float64)


def check_labels(dataset: LabeledDataset) -> None:
    if len(dataset) == 0 or dataset.matrix.shape[1] == 0:
        raise EmptyDataset("training matrix is empty")
    if len(np.unique(dataset.labels)) < 2:
        raise SingleClass("training data contains a single class")


def fit_network(layers: list[DenseLayer], x: np.ndarray, labels: np.ndarray, n_classes: int,
                epochs: int, optimizer: OptimizerConfig, dropout: DropoutSpec | None,
                shuffle_rng: np.random.Generator,
                validation: tuple[np.ndarray, np.ndarray] | None = None) -> list[EpochStats]:
    """Mini-batch cross-entropy training of ``layers`` in place; returns per-epoch stats."""
    y = nncore.one_hot(labels, n_classes)
    y_val = nncore.one_hot(validation[1], n_classes) if validation is not None else None
    mask_rng = np.random.default_rng(dropout.seed) if dropout is not None else None
    params = nncore.layer_params(layers)
    state = None
    history = []
    for epoch in range(1, epochs + 1):
        for batch in nncore.minibatches(len(x), optimizer.batch_size, shuffle_rng):
            probs, cache = nncore.forward(layers, x[batch], dropout, training=True, rng=mask_rng)
            grads, _ = nncore.backward(cache, nncore.cross_entropy_grad(probs, y[batch]))
            params, state = nncore.optimizer_step(params, nncore.flat_grads(grads), state, optimizer)
            nncore.set_layer_params(layers, params)
        probs = nncore.predict(layers, x)
        stats = dict(epoch=epoch, loss=nncore.cross_entropy(probs, y),
                     accuracy=float(np.mean(probs.argmax(axis=1) == labels)))
        if validation is not None:
            vp = nncore.predict(layers, validation[0])
            stats.update(val_loss=nncore.cross_entropy(vp, y_val),
                         val_accuracy=float(np.mean(vp.argmax(axis=1) == validation[1])))
        history.append(EpochStats(**stats))
    return history


def build_layers(n_features: int, n_classes: int, config: MlpConfig,
                 init_rng: np.random.Generator) -> list[DenseLayer]:
    widths = (n_features, *config.hidden_layers, n_classes)
    acts = [config.hidden_activation] * len(config.hidden_layers) + [Activation.SOFTMAX]
    return nncore.init_layers(widths, acts, init_rng)


def train_mlp(train: LabeledDataset, config: MlpConfig = MlpConfig(),
              validation: LabeledDataset | None = None) -> MlpClassifier:
    check_labels(train)
    init_rng, shuffle_rng = seed_streams(config.seed)
    x = train.matrix.to_float(config.scaling)
    n_classes = len(train.label_vocabulary)
    layers = build_layers(x.shape[1], n_classes, config, init_rng)
    val = None
    if validation is not None:
        val = (validation.matrix.to_float(config.scaling), validation.labels)
    history = fit_network(layers, x, train.labels, n_classes, config.epochs, config.optimizer,
                          config.dropout, shuffle_rng, val)
    return MlpClassifier(layers, train.label_vocabulary, history, config.scaling)


def predict_proba(model, matrix) -> np.ndarray:
    """Class probabilities; works for any model exposing ``layers`` and ``scaling``."""
    x = as_features(matrix, model.scaling)
    if x.ndim != 2 or (x.shape[0] and x.shape[1] != model.layers[0].n_in):
        raise ShapeMismatch(f"model expects {model.layers[0].n_in} features, got {x.shape}")
    if x.shape[0] == 0:
        return np.zeros((0, model.layers[-1].n_out))
    return nncore.predict(model.layers, x)


def predict(model, matrix) -> list[int]:
    # np.argmax returns the first maximum, i.e. ties go to the lowest index
    return predict_proba(model, matrix).argmax(axis=1).tolist()


def evaluate(model, dataset: LabeledDataset) -> ClassificationScore:
    return classification_score(dataset.labels, predict(model, dataset.matrix), len(dataset.label_vocabulary))


def stratified_folds(labels: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    if k < 2:
        raise ConfigError(f"cross-validation needs k >= 2, got {k}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) < k:
            raise ClassTooSmall(f"class {c} has {len(idx)} members, fewer than k={k}")
        idx = rng.permutation(idx)
        # continue the round-robin across classes so fold sizes stay balanced
        fold_of[idx] = (np.arange(len(idx)) + offset) % k
        offset += len(idx)
    return [np.flatnonzero(fold_of == f) for f in range(k)]


@dataclass
class CrossValidation:
    folds: list[np.ndarray]
    scores: list[ClassificationScore]
    mean: ClassificationScore


def cross_validate(dataset: LabeledDataset, config: MlpConfig = MlpConfig(), k: int = 5) -> CrossValidation:
    check_labels(dataset)
    folds = stratified_folds(dataset.labels, k, config.seed)
    scores = []
    for f, test_idx in enumerate(folds):
        train_idx = np.sort(np.concatenate([folds[g] for g in range(k) if g != f]))
        model = train_mlp(dataset.subset(train_idx), config)
        scores.append(evaluate(model, dataset.subset(test_idx)))
    return CrossValidation(folds, scores, mean_score(scores))


@dataclass
class GridSearchResult:
    best_config: MlpConfig
    best_index: int
    table: list[tuple[MlpConfig, float]]


def grid_search(dataset: LabeledDataset, config_grid: Sequence[MlpConfig], k: int = 5) -> GridSearchResult:
    if not config_grid:
        raise EmptyGrid("config grid is empty")
    table = []
    best = 0
    for i, cfg in enumerate(config_grid):
        acc = cross_validate(dataset, cfg, k).mean.accuracy
        table.append((cfg, acc))
        if acc > table[best][1]:
            best = i
    return GridSearchResult(config_grid[best], best, table)


def write_history_csv(history: Sequence[EpochStats], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "accuracy"])
        for h in history:
            w.writerow([h.epoch, repr(h.loss), repr(h.accuracy)])

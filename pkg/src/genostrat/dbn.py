"""Deep belief network classifier.

Greedy layer-wise CD-1 pre-training of an RBM stack on unlabeled rows, then the
stack is unrolled into a sigmoid feed-forward encoder (weights + hidden biases)
topped with a softmax layer and fine-tuned on cross-entropy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import mlp
from .errors import ConfigError
from .featurize import FeatureMatrix, LabeledDataset
from .mlp import EpochStats, MlpConfig
from .nncore import Activation, DenseLayer, DropoutSpec, OptimizerConfig, xavier_init
from .rbm import CdConfig, Rbm, check_unit_interval, hidden_probs, train_rbm


@dataclass(frozen=True)
class FinetuneConfig:
    optimizer: OptimizerConfig = OptimizerConfig.adadelta(rho=0.95, epsilon=1e-8, batch_size=32)
    epochs: int = 50
    dropout: DropoutSpec = DropoutSpec(0.1, 0)

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("finetune epochs must be >= 0")


@dataclass(frozen=True)
class DbnConfig:
    hidden_widths: tuple[int, ...] = (256, 256, 256, 256)
    pretrain: CdConfig = CdConfig(learning_rate=0.01, epochs=50, batch_size=32, seed=0)
    finetune: FinetuneConfig = FinetuneConfig()
    seed: int = 0
    pretrain_enabled: bool = True
    scaling: str = "half"

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ConfigError("a DBN needs at least one hidden layer of width >= 1")
        if self.scaling == "unit-norm":
            raise ConfigError("RBM visible units need values in [0, 1]; use scaling 'half' or 'none'")

    def as_mlp_config(self) -> MlpConfig:
        """The MLP this DBN degenerates to when pre-training is disabled."""
        return MlpConfig(hidden_layers=self.hidden_widths, epochs=max(self.finetune.epochs, 1),
                         dropout=self.finetune.dropout, optimizer=self.finetune.optimizer,
                         seed=self.seed, hidden_activation=Activation.SIGMOID, scaling=self.scaling)


@dataclass
class Dbn:
    rbm_stack: list[Rbm]
    layers: list[DenseLayer]
    label_vocabulary: tuple[str, ...]
    pretrain_history: list[list[float]] = field(default_factory=list)
    finetune_history: list[EpochStats] = field(default_factory=list)
    scaling: str = "half"

    @property
    def classifier_head(self) -> DenseLayer:
        return self.layers[-1]


def _features(x, scaling: str) -> np.ndarray:
    if isinstance(x, FeatureMatrix):
        return x.to_float(scaling)
    return np.asarray(x, dtype=np.float64)


def pretrain(unlabeled, config: DbnConfig = DbnConfig()) -> tuple[list[Rbm], list[list[float]]]:
    """Train RBM layer l on the mean-field hidden probabilities of layers < l.

    Takes a feature matrix (or float array), never labels.
    """
    x = _features(unlabeled, config.scaling)
    check_unit_interval(x)
    rng = np.random.default_rng(config.pretrain.seed)
    rbms, histories = [], []
    width = x.shape[1]
    for n_hidden in config.hidden_widths:
        rbm = Rbm.init(width, n_hidden, rng, visible_mean=x.mean(axis=0))
        rbm, hist = train_rbm(rbm, x, config.pretrain, rng)
        rbms.append(rbm)
        histories.append(hist)
        x = hidden_probs(rbm, x)
        width = n_hidden
    return rbms, histories


def encoder_from_rbms(rbms: list[Rbm]) -> list[DenseLayer]:
    """Recognition path of the stack: sigmoid(x W + c); visible biases are not used."""
    return [DenseLayer(r.weights.copy(), r.hidden_bias.copy(), Activation.SIGMOID) for r in rbms]


def finetune(rbms: list[Rbm], train: LabeledDataset, config: DbnConfig = DbnConfig(),
             validation: LabeledDataset | None = None,
             pretrain_history: list[list[float]] | None = None) -> Dbn:
    mlp.check_labels(train)
    init_rng, shuffle_rng = mlp.seed_streams(config.seed)
    x = train.matrix.to_float(config.scaling)
    n_classes = len(train.label_vocabulary)
    encoder = encoder_from_rbms(rbms)
    top = encoder[-1].n_out if encoder else x.shape[1]
    head = DenseLayer(xavier_init(top, n_classes, init_rng), np.zeros(n_classes), Activation.SOFTMAX)
    layers = encoder + [head]
    val = None
    if validation is not None:
        val = (validation.matrix.to_float(config.scaling), validation.labels)
    ft = config.finetune
    history = mlp.fit_network(layers, x, train.labels, n_classes, ft.epochs, ft.optimizer,
                              ft.dropout, shuffle_rng, val)
    return Dbn(list(rbms), layers, train.label_vocabulary, pretrain_history or [], history, config.scaling)


def train_dbn(train: LabeledDataset, config: DbnConfig = DbnConfig(),
              validation: LabeledDataset | None = None,
              unlabeled: FeatureMatrix | None = None) -> Dbn:
    """Pre-train on ``unlabeled`` (default: the training matrix) then fine-tune.

    With ``pretrain_enabled=False`` the network is randomly initialised exactly
    as :func:`genostrat.mlp.train_mlp` would initialise a sigmoid MLP.
    """
    if not config.pretrain_enabled:
        mlp.check_labels(train)
        mcfg = config.as_mlp_config()
        init_rng, shuffle_rng = mlp.seed_streams(config.seed)
        x = train.matrix.to_float(config.scaling)
        n_classes = len(train.label_vocabulary)
        layers = mlp.build_layers(x.shape[1], n_classes, mcfg, init_rng)
        val = None
        if validation is not None:
            val = (validation.matrix.to_float(config.scaling), validation.labels)
        ft = config.finetune
        history = mlp.fit_network(layers, x, train.labels, n_classes, ft.epochs, ft.optimizer,
                                  ft.dropout, shuffle_rng, val)
        return Dbn([], layers, train.label_vocabulary, [], history, config.scaling)
    rbms, hist = pretrain(unlabeled if unlabeled is not None else train.matrix, config)
    return finetune(rbms, train, config, validation, hist)


predict_proba = mlp.predict_proba
predict = mlp.predict
evaluate = mlp.evaluate


def write_history_csv(model: Dbn, pretrain_path, finetune_path) -> None:
    with open(pretrain_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["layer", "epoch", "reconstruction_error"])
        for layer, hist in enumerate(model.pretrain_history):
            for epoch, err in enumerate(hist):
                w.writerow([layer, epoch, repr(err)])
    mlp.write_history_csv(model.finetune_history, finetune_path)

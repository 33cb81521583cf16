"""Small synthetic datasets shared by the model tests."""

import numpy as np

from genostrat.featurize import FeatureMatrix, LabeledDataset, VariantKey


def float_dataset(x: np.ndarray, labels, vocabulary=None) -> LabeledDataset:
    labels = np.asarray(labels, dtype=np.int64)
    vocab = tuple(vocabulary or [f"c{i}" for i in range(int(labels.max()) + 1)])
    m = FeatureMatrix(tuple(f"s{i}" for i in range(len(x))),
                      tuple(VariantKey("1", j + 1, f"f{j}") for j in range(x.shape[1])),
                      np.asarray(x, dtype=np.float64))
    return LabeledDataset(m, labels, vocab)


def blobs(n=100, seed=0, separation=10.0) -> LabeledDataset:
    """Two unit-variance Gaussian blobs in 2-D whose means sit ``separation`` sigma apart."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    centres = np.array([[0.0, 0.0], [separation / np.sqrt(2), separation / np.sqrt(2)]])
    return float_dataset(centres[labels] + rng.normal(size=(n, 2)), labels)

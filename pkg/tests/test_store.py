import numpy as np
import pytest

from genostrat import dbn, dec, kmeans, mlp, store
from genostrat.dbn import DbnConfig, FinetuneConfig
from genostrat.errors import ConfigError, CorruptArtifact, VersionMismatch
from genostrat.mlp import MlpConfig
from genostrat.rbm import CdConfig

from helpers import blobs


@pytest.fixture(scope="module")
def trained_mlp():
    return mlp.train_mlp(blobs(), MlpConfig(hidden_layers=(8, 4), epochs=3, scaling="none"))


def test_mlp_round_trip(tmp_path, trained_mlp):
    store.save_model(trained_mlp, tmp_path / "m", "abc123")
    loaded = store.load_model(tmp_path / "m")
    probe = np.random.default_rng(0).normal(size=(17, 2)) * 5
    assert np.array_equal(mlp.predict_proba(loaded, probe), mlp.predict_proba(trained_mlp, probe))
    assert loaded.label_vocabulary == trained_mlp.label_vocabulary
    assert store.settings_hash_of(tmp_path / "m") == "abc123"
    assert store.model_kind(loaded) == "mlp"


def test_dbn_round_trip(tmp_path):
    data = blobs()
    x = (data.matrix.values - data.matrix.values.min()) / np.ptp(data.matrix.values)
    from helpers import float_dataset
    d = float_dataset(x, data.labels)
    model = dbn.train_dbn(d, DbnConfig(hidden_widths=(5, 3), pretrain=CdConfig(0.05, 2, 16), scaling="none",
                                       finetune=FinetuneConfig(epochs=2)))
    store.save_model(model, tmp_path / "d")
    loaded = store.load_model(tmp_path / "d")
    assert np.array_equal(dbn.predict_proba(loaded, x), dbn.predict_proba(model, x))
    assert all(np.array_equal(a.weights, b.weights) for a, b in zip(loaded.rbm_stack, model.rbm_stack))


def test_kmeans_round_trip(tmp_path):
    pts = np.random.default_rng(1).normal(size=(30, 3))
    model = kmeans.fit(pts, 3, restarts=2)
    store.save_model(model, tmp_path / "k")
    loaded = store.load_model(tmp_path / "k")
    assert np.array_equal(loaded.centroids, model.centroids)
    assert np.array_equal(loaded.assignments, model.assignments) and loaded.wcss == model.wcss


def test_dec_round_trip(tmp_path):
    x = np.random.default_rng(2).random((40, 6))
    ae = dec.pretrain_sae(x, (4, 2), iterations_per_layer=10)
    state, _ = dec.train_dec(x, 2, dec.DecConfig(max_iterations=5, kmeans_restarts=2), ae)
    store.save_model(state, tmp_path / "dec")
    loaded = store.load_model(tmp_path / "dec")
    q, p = store.dec_assign(loaded, x)
    assert np.array_equal(q, state.q)
    assert loaded.iterations_run == state.iterations_run and loaded.alpha == state.alpha


def test_corrupt_and_version(tmp_path, trained_mlp):
    d = store.save_model(trained_mlp, tmp_path / "m")
    raw = (d / store.ARRAYS).read_bytes()
    (d / store.ARRAYS).write_bytes(raw[:-8])
    with pytest.raises(CorruptArtifact):
        store.load_model(d)
    (d / store.ARRAYS).write_bytes(raw)
    manifest = (d / store.MANIFEST).read_text()
    (d / store.MANIFEST).write_text(manifest.replace("format_version=1", "format_version=2"))
    with pytest.raises(VersionMismatch):
        store.load_model(d)
    (d / store.ARRAYS).unlink()
    with pytest.raises(CorruptArtifact):
        store.load_model(d)
    with pytest.raises(ConfigError):
        store.save_model(object(), tmp_path / "x")


def test_arrays_are_little_endian_float64(tmp_path, trained_mlp):
    d = store.save_model(trained_mlp, tmp_path / "m")
    first = trained_mlp.layers[0].weights
    raw = np.frombuffer((d / store.ARRAYS).read_bytes()[: first.size * 8], dtype="<f8")
    assert np.array_equal(raw.reshape(first.shape), first)
    text = (d / store.MANIFEST).read_text()
    assert "layer=net relu" in text and "array=net.0.weights 2,8" in text

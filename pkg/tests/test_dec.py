import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from genostrat import dec, nncore
from genostrat.dec import DecConfig
from genostrat.errors import ConfigError, DegenerateCluster, KTooLarge, NotPretrained, ShapeMismatch, ValueOutOfRange, ZeroQEntry
from genostrat.nncore import OptimizerConfig

from oracles import central_difference, rel_error

rows = st.integers(1, 6).flatmap(lambda k: st.lists(
    st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k), min_size=1, max_size=8))


def _normalise(r):
    q = np.array(r, dtype=float)
    return q / q.sum(axis=1, keepdims=True)


def test_soft_assign_examples():
    z = np.random.default_rng(0).normal(size=(4, 3))
    assert np.array_equal(dec.soft_assign(z, np.ones((1, 3))), np.ones((4, 1)))
    assert np.allclose(dec.soft_assign(np.zeros((1, 2)), np.array([[1.0, 0.0], [0.0, -1.0]])), 0.5)
    q = dec.soft_assign(np.array([[0.0, 0.0]]), np.array([[0.0, 0.0], [1.0, 0.0]]), alpha=1.0)
    assert np.allclose(q, [[2 / 3, 1 / 3]], rtol=1e-15)
    with pytest.raises(ShapeMismatch):
        dec.soft_assign(z, np.ones((2, 2)))


def test_target_examples():
    assert np.allclose(dec.target_distribution(np.array([[0.5, 0.5]])), [[0.5, 0.5]])
    p = dec.target_distribution(np.array([[1.0, 0.0], [0.5, 0.5]]))
    assert np.allclose(p, [[1.0, 0.0], [0.25, 0.75]], rtol=1e-15)
    one_hot = np.eye(3)[[0, 2, 1, 1]]
    assert np.array_equal(dec.target_distribution(one_hot), one_hot)
    with pytest.raises(DegenerateCluster):
        dec.target_distribution(np.array([[1.0, 0.0], [1.0, 0.0]]))


@given(rows)
def test_rows_sum_to_one(r):
    q = _normalise(r)
    assert np.allclose(dec.target_distribution(q).sum(axis=1), 1.0, atol=1e-9)
    z = np.array(r)
    assert np.allclose(dec.soft_assign(z, z[:1] * 0.5).sum(axis=1), 1.0, atol=1e-9)


@given(st.integers(2, 5), st.integers(0, 10_000))
def test_sharpening_with_balanced_clusters(k, seed):
    # rows of a matrix whose columns all carry the same soft frequency
    rng = np.random.default_rng(seed)
    base = rng.dirichlet(np.ones(k), size=3)
    q = np.concatenate([np.roll(base, s, axis=1) for s in range(k)])
    p = dec.target_distribution(q)
    assert (p.max(axis=1) >= q.max(axis=1) - 1e-12).all()


@given(rows)
def test_single_row_target_is_identity(r):
    q = _normalise(r[:1])
    assert np.allclose(dec.target_distribution(q), q, atol=1e-12)


def test_sharpening_can_flip_a_row_between_unequal_clusters():
    # documented counterexample: a borderline point next to a crowded cluster moves to the sparse one
    q = np.array([[0.95, 0.05]] * 9 + [[0.6, 0.4]])
    p = dec.target_distribution(q)
    assert p[-1].argmax() == 1 and p[-1].max() > q[-1].max()
    assert p[-1, 0] < q[-1, 0]


def test_kl_examples():
    q = _normalise([[0.2, 0.3, 0.5], [0.6, 0.3, 0.1]])
    assert dec.kl_loss(q, q) == 0.0
    assert dec.kl_loss(np.array([[1.0, 0.0]]), np.array([[0.5, 0.5]])) == pytest.approx(math.log(2), abs=1e-15)
    with pytest.raises(ZeroQEntry):
        dec.kl_loss(np.array([[0.5, 0.5]]), np.array([[1.0, 0.0]]))
    assert dec.kl_loss(np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]])) == 0.0


@given(rows, st.integers(0, 1000))
def test_kl_nonnegative(r, seed):
    q = _normalise(r)
    p = _normalise(np.random.default_rng(seed).uniform(0.01, 1, size=q.shape))
    assert dec.kl_loss(p, q) >= -1e-15


def _instance(seed, n=5, k=3, d=4):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(n, d))
    mu = rng.normal(size=(k, d))
    p = _normalise(rng.uniform(0.05, 1, size=(n, k)))
    return z, mu, p


def test_gradient_identities():
    z, mu, _ = _instance(0)
    q = dec.soft_assign(z, mu)
    gz, gm = dec.dec_gradients(z, mu, q, q)
    assert not gz.any() and not gm.any()
    z, mu, p = _instance(1)
    gz, gm = dec.dec_gradients(z, mu, p, dec.soft_assign(z, mu))
    assert np.allclose(gm.sum(axis=0), -gz.sum(axis=0), atol=1e-14)
    with pytest.raises(ShapeMismatch):
        dec.dec_gradients(z, mu, p[:, :2], p[:, :2])


@pytest.mark.parametrize("alpha", [1.0, 0.5, 3.0])
@pytest.mark.parametrize("seed", range(5))
def test_gradients_match_finite_differences(alpha, seed):
    z, mu, p = _instance(seed)
    loss = lambda: dec.kl_loss(p, dec.soft_assign(z, mu, alpha))
    gz, gm = dec.dec_gradients(z, mu, p, dec.soft_assign(z, mu, alpha), alpha)
    assert rel_error(gz, central_difference(loss, z)).max() < 1e-5
    assert rel_error(gm, central_difference(loss, mu)).max() < 1e-5


@pytest.mark.parametrize("seed", range(10))
def test_small_step_does_not_increase_kl(seed):
    z, mu, p = _instance(seed + 100)
    q = dec.soft_assign(z, mu)
    before = dec.kl_loss(p, q)
    gz, gm = dec.dec_gradients(z, mu, p, q)
    step = 1.0
    while step > 1e-12:
        after = dec.kl_loss(p, dec.soft_assign(z - step * gz, mu - step * gm))
        if after <= before:
            break
        step /= 2
    assert after <= before


def test_autoencoder_layout():
    ae = dec.build_autoencoder((10, 6, 4, 2), 0)
    assert ae.dims == (10, 6, 4, 2) and ae.latent_dim == 2
    assert [l.activation.value for l in ae.encoder] == ["relu", "relu", "linear"]
    assert [l.activation.value for l in ae.decoder] == ["relu", "relu", "linear"]
    assert [(l.n_in, l.n_out) for l in ae.decoder] == [(2, 4), (4, 6), (6, 10)]
    with pytest.raises(ConfigError):
        dec.build_autoencoder((5,))


def test_autoencoder_gradient_check():
    rng = np.random.default_rng(3)
    ae = dec.build_autoencoder((6, 4, 3), rng)
    for layer in ae.layers:
        layer.bias = rng.normal(0, 0.3, size=layer.bias.shape)
    x = rng.normal(size=(5, 6))
    loss = lambda: dec.squared_error(nncore.predict(ae.layers, x), x)
    y, cache = nncore.forward(ae.layers, x)
    grads, _ = nncore.backward(cache, dec.squared_error_grad(y, x))
    for layer, (dw, db) in zip(ae.layers, grads):
        assert rel_error(dw, central_difference(loss, layer.weights)).max() < 1e-5
        assert rel_error(db, central_difference(loss, layer.bias)).max() < 1e-5


def test_zero_iterations_keep_initialisation():
    x = np.random.default_rng(0).random((20, 8))
    ae = dec.pretrain_sae(x, (5, 3), iterations_per_layer=0, seed=4)
    fresh = dec.build_autoencoder((8, 5, 3), np.random.default_rng(4))
    for a, b in zip(ae.layers, fresh.layers):
        assert np.array_equal(a.weights, b.weights)
    same = dec.finetune_ae(ae, x, iterations=0)
    for a, b in zip(ae.layers, same.layers):
        assert np.array_equal(a.weights, b.weights)


def test_pretrain_determinism_and_errors():
    x = np.random.default_rng(1).random((30, 8))
    a = dec.pretrain_sae(x, (5, 3), iterations_per_layer=20, seed=2)
    b = dec.pretrain_sae(x, (5, 3), iterations_per_layer=20, seed=2)
    assert all(np.array_equal(la.weights, lb.weights) for la, lb in zip(a.layers, b.layers))
    with pytest.raises(ValueOutOfRange):
        dec.pretrain_sae(-x, (5, 3))


def test_rank_one_linear_autoencoder():
    rng = np.random.default_rng(5)
    x = np.outer(rng.random(60), rng.random(7))
    ae = dec.pretrain_sae(x, (1,), dropout_corruption=0.0, iterations_per_layer=3000,
                          optimizer=OptimizerConfig.sgd(0.05, 0.9, 60), seed=1, lr_decay_every=None)
    assert dec.reconstruction_loss(ae, x) < 1e-8


def test_finetune_reduces_loss(small_cohort):
    x = small_cohort.matrix
    ae = dec.pretrain_sae(x, (32, 8), iterations_per_layer=100, seed=0)
    ft = dec.finetune_ae(ae, x, iterations=200)
    assert dec.reconstruction_loss(ft, x) <= dec.reconstruction_loss(ae, x)


@pytest.fixture(scope="module")
def small_ae(small_cohort):
    return dec.build_pretrained_autoencoder(
        small_cohort.matrix.to_float(),
        DecConfig(hidden_dims=(32, 8), pretrain_iterations=100, finetune_iterations=100))


def _cfg(**kw):
    base = dict(hidden_dims=(32, 8), max_iterations=30, kmeans_restarts=5, batch_size=32)
    base.update(kw)
    return DecConfig(**base)


def test_tol_one_stops_at_first_check(small_cohort, small_ae):
    state, labels = dec.train_dec(small_cohort.matrix, 3, _cfg(tol=1.0), small_ae)
    interval = math.ceil(90 / 32)
    assert state.converged and state.iterations_run == interval
    assert len(state.history) == 2
    assert len(labels) == 90


def test_frozen_parameters_change_nothing(small_cohort, small_ae):
    state, labels = dec.train_dec(small_cohort.matrix, 3, _cfg(learning_rate=0.0, tol=0.0), small_ae)
    assert all(h.label_change_fraction == 0.0 for h in state.history)
    assert np.array_equal(labels, state.initial_labels)


def test_run_invariants(small_cohort, small_ae):
    state, labels = dec.train_dec(small_cohort.matrix, 3, _cfg(tol=0.0), small_ae)
    assert np.allclose(state.q.sum(axis=1), 1, atol=1e-9) and np.allclose(state.p.sum(axis=1), 1, atol=1e-9)
    assert all(0.0 <= h.label_change_fraction <= 1.0 for h in state.history)
    assert state.iterations_run == 30 and not state.converged
    again, labels2 = dec.train_dec(small_cohort.matrix, 3, _cfg(tol=0.0), small_ae)
    assert np.array_equal(labels, labels2) and np.array_equal(state.centroids, again.centroids)


def test_gamma_zero_leaves_decoder(small_cohort, small_ae):
    state, _ = dec.train_dec(small_cohort.matrix, 3, _cfg(gamma=0.0, tol=0.0), small_ae)
    for a, b in zip(state.autoencoder.decoder, small_ae.decoder):
        assert np.array_equal(a.weights, b.weights)
    assert any(not np.array_equal(a.weights, b.weights)
               for a, b in zip(state.autoencoder.encoder, small_ae.encoder))
    state, _ = dec.train_dec(small_cohort.matrix, 3, _cfg(gamma=0.5, tol=0.0), small_ae)
    assert any(not np.array_equal(a.weights, b.weights)
               for a, b in zip(state.autoencoder.decoder, small_ae.decoder))


def test_train_errors(small_cohort, small_ae):
    with pytest.raises(KTooLarge):
        dec.train_dec(small_cohort.matrix, 1, _cfg(), small_ae)
    with pytest.raises(KTooLarge):
        dec.train_dec(small_cohort.matrix, 91, _cfg(), small_ae)
    with pytest.raises(NotPretrained):
        dec.train_dec(small_cohort.matrix, 3, _cfg(), dec.build_autoencoder((400, 32, 8)))
    for bad in [dict(alpha=0.0), dict(tol=2.0), dict(gamma=-1.0), dict(update_interval=0), dict(learning_rate=-1.0)]:
        with pytest.raises(ConfigError):
            DecConfig(**bad)


def test_csv_exports(tmp_path, small_cohort, small_ae):
    state, labels = dec.train_dec(small_cohort.matrix, 3, _cfg(max_iterations=5), small_ae)
    z = dec.encode(state.autoencoder, small_cohort.matrix)
    dec.write_embedding_csv(small_cohort.matrix.sample_ids, z, labels, tmp_path / "e.csv")
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "sample_id,z_1,z_2,z_3,z_4,z_5,z_6,z_7,z_8,cluster" and len(lines) == 91
    dec.write_history_csv(state.history, tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_text().startswith("interval,kl_loss,recon_loss,label_change_fraction")

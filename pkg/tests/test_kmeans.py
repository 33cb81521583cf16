import numpy as np
import pytest

from genostrat import kmeans
from genostrat.errors import KTooLarge, ShapeMismatch
from genostrat.metrics import adjusted_rand_index

from oracles import brute_force_wcss


def test_assign_examples():
    pts = np.array([[0.0], [1.0], [9.0], [10.0]])
    assert kmeans.assign_step(pts, np.array([[0.5], [9.5]])).tolist() == [0, 0, 1, 1]
    assert kmeans.assign_step(np.array([[1.0]]), np.array([[0.0], [2.0]])).tolist() == [0]
    assert kmeans.assign_step(pts, np.array([[3.0]])).tolist() == [0, 0, 0, 0]
    with pytest.raises(ShapeMismatch):
        kmeans.assign_step(pts, np.zeros((2, 2)))


def test_update_examples():
    pts = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 8.0]])
    assert np.allclose(kmeans.update_step(pts, [0, 0, 0], 1), pts.mean(axis=0))
    assert np.array_equal(kmeans.update_step(pts, [2, 0, 1], 3), pts[[1, 2, 0]])
    # cluster 1 is empty; the point farthest from its centroid (index 2, centroid mean of all) is used
    c = kmeans.update_step(pts, [0, 0, 0], 2)
    assert np.array_equal(c[1], pts[2])


def test_wcss_examples():
    pts = np.random.default_rng(0).normal(size=(6, 3))
    assert kmeans.wcss(pts, pts, np.arange(6)) == 0.0
    assert kmeans.wcss(np.array([[0.0], [2.0]]), np.array([[1.0]]), [0, 0]) == 2.0
    cent = np.random.default_rng(1).normal(size=(2, 3))
    lab = np.array([0, 1, 1, 0, 1, 0])
    naive = 0.0
    for i in range(6):
        for d in range(3):
            naive += (pts[i, d] - cent[lab[i], d]) ** 2
    assert kmeans.wcss(pts, cent, lab) == pytest.approx(naive, rel=1e-14)
    with pytest.raises(ShapeMismatch):
        kmeans.wcss(pts, cent, lab[:3])


def test_two_pairs():
    pts = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
    model = kmeans.fit(pts, 2, restarts=10, seed=0)
    assert model.wcss == pytest.approx(brute_force_wcss(pts, 2)) == pytest.approx(1.0)
    assert model.assignments[0] == model.assignments[1] != model.assignments[2] == model.assignments[3]


def test_k_equals_n_and_errors():
    pts = np.random.default_rng(2).normal(size=(5, 2))
    assert kmeans.fit(pts, 5, restarts=3).wcss == 0.0
    with pytest.raises(KTooLarge):
        kmeans.fit(pts, 6)
    with pytest.raises(KTooLarge):
        kmeans.fit(pts, 0)


def test_brute_force_equivalence():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(3, 11))
        k = int(rng.integers(1, min(3, n) + 1))
        pts = rng.normal(size=(n, 2)) + rng.integers(0, 3, size=(n, 1)) * 4.0
        model = kmeans.fit(pts, k, restarts=60, seed=int(rng.integers(1 << 30)))
        assert model.wcss == pytest.approx(brute_force_wcss(pts, k), rel=1e-9, abs=1e-12)


def test_lloyd_monotone_every_iteration():
    pts = np.random.default_rng(4).normal(size=(200, 4))
    trace = []
    initial = pts[:6].copy()
    centroids = initial
    assignments = kmeans.assign_step(pts, centroids)
    trace.append(kmeans.wcss(pts, centroids, assignments))
    for _ in range(30):
        centroids = kmeans.update_step(pts, assignments, 6)
        assignments = kmeans.assign_step(pts, centroids)
        trace.append(kmeans.wcss(pts, centroids, assignments))
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
    kmeans.lloyd(pts, initial)  # raises MonotonicityViolation on a violation


def test_more_restarts_never_worse():
    pts = np.random.default_rng(5).normal(size=(80, 3))
    w = [kmeans.fit(pts, 5, restarts=r, seed=9).wcss for r in (1, 5, 20)]
    assert w[0] >= w[1] >= w[2]


def test_determinism_and_workers():
    pts = np.random.default_rng(6).normal(size=(60, 2))
    a = kmeans.fit(pts, 3, restarts=8, seed=1)
    b = kmeans.fit(pts, 3, restarts=8, seed=1, workers=4)
    assert np.array_equal(a.assignments, b.assignments) and a.wcss == b.wcss


def test_cohort_kmeans(cohort):
    model = kmeans.fit(cohort.matrix.to_float(), 3, restarts=10, seed=0)
    assert adjusted_rand_index(cohort.labels, model.assignments) >= 0.9


def test_elbow_examples(tmp_path):
    pts = np.random.default_rng(7).normal(size=(6, 2))
    rep = kmeans.elbow_sweep(pts, [6], restarts=2)
    assert rep.entries == [(6, 0.0)]
    rep = kmeans.elbow_sweep(pts, range(1, 5), restarts=5)
    assert [k for k, _ in rep.entries] == [1, 2, 3, 4]
    assert all(b <= a for (_, a), (_, b) in zip(rep.entries, rep.entries[1:]))
    rep.write_csv(tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == "k,wcss"


def test_elbow_on_five_population_cohort():
    from conftest import cohort_dataset
    from genostrat.synthgen import CohortSpec

    data = cohort_dataset(CohortSpec(5, 40, 1000, 0.1, 1))
    assert kmeans.elbow_sweep(data.matrix.to_float(), range(1, 9), restarts=10).elbow() == 5

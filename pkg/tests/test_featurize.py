import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from genostrat import featurize, genio
from genostrat.errors import ClassTooSmall, ConfigError, CorruptArtifact, InconsistentSampleSet, UnknownSample, VersionMismatch
from genostrat.featurize import SampleVariant, VariantKey

from test_genio import vcf_with_samples


def records_from(samples, rows):
    return genio.parse_vcf(vcf_with_samples(samples, rows))


def test_extract_counts():
    samples, recs = records_from(["A", "B", "C"], ["1\t5\tv1\tA\tC\t.\t.\t.\tGT\t0|0\t0|1\t1|1"])
    out = list(featurize.extract_sample_variants(recs, samples))
    assert [(sv.sample_id, sv.alt_count) for sv in out] == [("A", 0), ("B", 1), ("C", 2)]
    assert list(featurize.extract_sample_variants([], samples)) == []


def test_missing_policies():
    rows = ["1\t5\tv1\tA\tC\t.\t.\t.\tGT\t./.\t1|1", "1\t6\tv2\tA\tC\t.\t.\t.\tGT\t0|1\t1|1"]
    samples, recs = records_from(["A", "B"], rows)
    out = list(featurize.extract_sample_variants(recs, samples))
    assert out[0].alt_count == 0
    samples, recs = records_from(["A", "B"], rows)
    kept = {sv.variant_key.id for sv in featurize.extract_sample_variants(recs, samples, "drop-variant")}
    assert kept == {"v2"}
    samples, recs = records_from(["A", "B"], rows)
    m = featurize.build_feature_matrix(recs, samples, min_alt=0, missing="drop-variant")
    assert [k.id for k in m.variant_keys] == ["v2"]


def _grouped(columns):
    return {VariantKey("1", i, f"v{i}"): {f"s{j}": c for j, c in enumerate(col)} for i, col in enumerate(columns)}


def test_support_filter():
    g = _grouped([[0, 0, 0], [0, 0, 1]])
    assert [k.id for k in featurize.support_filter(g)] == ["v1"]
    assert featurize.support_filter({}) == []


def test_frequency_filter_boundary():
    g = _grouped([[2] * 5 + [1], [2] * 6])  # 11 and 12
    assert [k.id for k in featurize.frequency_filter(g, 12)] == ["v1"]
    support = featurize.support_filter(_grouped([[0, 0], [0, 1], [2, 2]]))
    assert featurize.frequency_filter(_grouped([[0, 0], [0, 1], [2, 2]]), 0) != support


@given(st.lists(st.lists(st.integers(0, 2), min_size=4, max_size=4), min_size=1, max_size=8),
       st.integers(0, 10), st.integers(0, 10))
def test_frequency_filter_monotone(columns, a, b):
    a, b = min(a, b), max(a, b)
    g = _grouped(columns)
    assert set(featurize.frequency_filter(g, a)) >= set(featurize.frequency_filter(g, b))


def test_assemble_layout_and_errors():
    v1, v2 = VariantKey("1", 1, "v1"), VariantKey("1", 2, "v2")
    svs = [SampleVariant("B", v2, 1), SampleVariant("A", v1, 1), SampleVariant("B", v1, 2), SampleVariant("A", v2, 0)]
    m = featurize.assemble_matrix(svs, [v2, v1])
    assert m.sample_ids == ("A", "B")
    assert m.variant_keys == (v1, v2)
    assert m.values.tolist() == [[1, 0], [2, 1]]
    assert m.values.dtype == np.uint8
    random.Random(3).shuffle(svs)
    assert featurize.assemble_matrix(svs, [v1, v2]) == m
    with pytest.raises(InconsistentSampleSet):
        featurize.assemble_matrix(svs[:-1] if svs[-1].sample_id == "B" else [s for s in svs if not (s.sample_id == "B" and s.variant_key == v2)], [v1, v2])


def test_variant_order_is_chrom_string_pos_id():
    keys = [VariantKey("10", 5, "a"), VariantKey("2", 1, "b"), VariantKey("10", 5, "0"), VariantKey("10", 1, "z")]
    svs = [SampleVariant("S", k, 1) for k in keys]
    m = featurize.assemble_matrix(svs, keys)
    assert m.variant_keys == (VariantKey("10", 1, "z"), VariantKey("10", 5, "0"), VariantKey("10", 5, "a"),
                              VariantKey("2", 1, "b"))


def test_record_and_column_paths_agree(small_cohort):
    from genostrat import synthgen

    vcf, _ = synthgen.generate(synthgen.CohortSpec(3, 30, 400, 0.1, 7))
    samples, recs = genio.parse_vcf(vcf)
    recs = list(recs)
    svs = list(featurize.extract_sample_variants(recs, samples))
    grouped = featurize.group_by_variant(svs)
    retained = set(featurize.support_filter(grouped)) & set(featurize.frequency_filter(grouped, 12))
    slow = featurize.assemble_matrix(svs, retained)
    assert slow == small_cohort.matrix
    shuffled = recs[:]
    random.Random(0).shuffle(shuffled)
    assert featurize.build_feature_matrix(shuffled, samples) == small_cohort.matrix


def test_attach_labels_table_rows():
    panel = genio.parse_panel(["HG00096 GBR EUR male", "HG00171 FIN EUR female"])
    m = featurize.FeatureMatrix(("HG00096", "HG00171"), (VariantKey("1", 1, "v"),), np.array([[1], [0]], np.uint8))
    sup = featurize.attach_labels(m, panel, "super_population")
    assert sup.label_names() == ["EUR", "EUR"]
    pop = featurize.attach_labels(m, panel, "population")
    assert pop.label_names() == ["GBR", "FIN"]
    assert pop.label_vocabulary == ("FIN", "GBR")
    with pytest.raises(UnknownSample):
        featurize.attach_labels(m, panel[:1], "population")
    with pytest.raises(ConfigError):
        featurize.attach_labels(m, panel, "region")


def _labels(counts):
    return np.repeat(np.arange(len(counts)), counts)


def test_split_sizes():
    tr, te, va = featurize.split_indices(_labels([100]), featurize.SplitSpec(0.6, 0.2, 0.2, 5))
    assert (len(tr), len(te), len(va)) == (60, 20, 20)
    tr, te, va = featurize.split_indices(_labels([7, 5]), featurize.SplitSpec(1.0, 0.0, 0.0, 5))
    assert len(tr) == 12 and len(te) == len(va) == 0
    a = featurize.split_indices(_labels([40, 30]), featurize.SplitSpec(seed=9))
    b = featurize.split_indices(_labels([40, 30]), featurize.SplitSpec(seed=9))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    with pytest.raises(ClassTooSmall):
        featurize.split_indices(_labels([10, 2]), featurize.SplitSpec())


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(3, 40), min_size=1, max_size=5), st.integers(0, 2**32),
       st.sampled_from([(0.6, 0.2, 0.2), (0.5, 0.25, 0.25), (0.8, 0.1, 0.1), (0.34, 0.33, 0.33)]))
def test_split_partition_and_stratification(counts, seed, fractions):
    labels = _labels(counts)
    parts = featurize.split_indices(labels, featurize.SplitSpec(*fractions, seed))
    joined = np.concatenate(parts)
    assert sorted(joined.tolist()) == list(range(len(labels)))
    for c, n in enumerate(counts):
        for part, f in zip(parts, fractions):
            assert abs(int((labels[part] == c).sum()) - f * n) <= 1.0 + 1e-9


def test_split_spec_validation():
    with pytest.raises(ConfigError):
        featurize.SplitSpec(0.5, 0.2, 0.2)
    with pytest.raises(ConfigError):
        featurize.SplitSpec(1.2, -0.1, -0.1)


def test_scaling():
    v = np.array([[0, 1, 2], [0, 0, 0]], np.uint8)
    assert featurize.scale_features(v, "half").tolist() == [[0, 0.5, 1], [0, 0, 0]]
    unit = featurize.scale_features(v, "unit-norm")
    assert np.isclose((unit[0] ** 2).sum() / 3, 1.0)
    assert featurize.scale_features(v, "none").dtype == np.float64


def test_matrix_cache_round_trip(tmp_path, small_cohort):
    s = featurize.FeatureSettings(12, "impute-zero", "half")
    featurize.write_matrix_cache(small_cohort.matrix, tmp_path / "m", s)
    m, s2 = featurize.read_matrix_cache(tmp_path / "m")
    assert m == small_cohort.matrix and s2 == s
    raw = (tmp_path / "m" / "values.u8").read_bytes()
    (tmp_path / "m" / "values.u8").write_bytes(raw[:-1])
    with pytest.raises(CorruptArtifact):
        featurize.read_matrix_cache(tmp_path / "m")
    text = (tmp_path / "m" / "manifest.txt").read_text().replace("format_version=1", "format_version=9")
    (tmp_path / "m" / "manifest.txt").write_text(text)
    with pytest.raises(VersionMismatch):
        featurize.read_matrix_cache(tmp_path / "m")


def test_settings_digest_changes():
    assert featurize.FeatureSettings().digest() != featurize.FeatureSettings(min_alt=11).digest()
    assert featurize.FeatureSettings().digest() == featurize.FeatureSettings().digest()


def test_export_csv(tmp_path, small_cohort):
    featurize.export_csv(small_cohort, tmp_path / "x.csv")
    lines = (tmp_path / "x.csv").read_text().splitlines()
    assert len(lines) == len(small_cohort) + 1
    assert lines[0].startswith("sample_id,label,1:")

"""Samples x variants alternate-allele count matrices, labels and splits.

The per-(sample, variant) path (:func:`extract_sample_variants`,
:func:`assemble_matrix`) mirrors the record-level description of the
pipeline.  :func:`build_feature_matrix` is the column-oriented equivalent used
for real inputs; both produce the same matrix.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    ClassTooSmall,
    ConfigError,
    CorruptArtifact,
    InconsistentSampleSet,
    UnknownSample,
    VersionMismatch,
)
from .genio import PanelEntry, VariantRecord

MISSING_POLICIES = ("impute-zero", "drop-variant")
SCALINGS = ("half", "none", "unit-norm")
LEVELS = ("population", "super_population")


class VariantKey(NamedTuple):
    chrom: str
    pos: int
    id: str


@dataclass(frozen=True)
class SampleVariant:
    sample_id: str
    variant_key: VariantKey
    alt_count: int


@dataclass(frozen=True)
class FeatureSettings:
    min_alt: int = 12
    missing: str = "impute-zero"
    scaling: str = "half"

    def __post_init__(self):
        if self.missing not in MISSING_POLICIES:
            raise ConfigError(f"missing policy must be one of {MISSING_POLICIES}, got {self.missing!r}")
        if self.scaling not in SCALINGS:
            raise ConfigError(f"scaling must be one of {SCALINGS}, got {self.scaling!r}")
        if self.min_alt < 0:
            raise ConfigError("min_alt must be >= 0")

    def digest(self) -> str:
        text = f"min_alt={self.min_alt};missing={self.missing};scaling={self.scaling}"
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def scale_features(values: np.ndarray, scaling: str = "half") -> np.ndarray:
    """Widen counts to float64 and apply the model-boundary scaling.

    ``half`` maps diploid counts into [0, 1]; ``unit-norm`` rescales each row so
    that ``||x||^2 / d == 1``.
    """
    x = np.asarray(values, dtype=np.float64)
    if scaling == "none":
        return x.copy()
    if scaling == "half":
        return x / 2.0
    if scaling == "unit-norm":
        d = x.shape[1]
        norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
        norms[norms == 0] = 1.0
        return x * (math.sqrt(d) / norms)
    raise ConfigError(f"unknown scaling {scaling!r}")


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    sample_ids: tuple[str, ...]
    variant_keys: tuple[VariantKey, ...]
    values: np.ndarray  # uint8, rows = samples

    def __post_init__(self):
        if self.values.shape != (len(self.sample_ids), len(self.variant_keys)):
            raise InconsistentSampleSet(
                f"matrix shape {self.values.shape} does not match "
                f"{len(self.sample_ids)} samples x {len(self.variant_keys)} variants")
        self.values.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def to_float(self, scaling: str = "half") -> np.ndarray:
        return scale_features(self.values, scaling)

    def take_rows(self, idx: Sequence[int]) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureMatrix(tuple(self.sample_ids[i] for i in idx), self.variant_keys,
                             np.ascontiguousarray(self.values[idx]))

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (self.sample_ids == other.sample_ids and self.variant_keys == other.variant_keys
                and self.values.dtype == other.values.dtype
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    matrix: FeatureMatrix
    labels: np.ndarray  # int64 class indices
    label_vocabulary: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) != self.matrix.shape[0]:
            raise InconsistentSampleSet("label count does not match matrix rows")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= len(self.label_vocabulary)):
            raise UnknownSample("label index outside vocabulary")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx: Sequence[int]) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.matrix.take_rows(idx), self.labels[idx].copy(), self.label_vocabulary)

    def label_names(self) -> list[str]:
        return [self.label_vocabulary[i] for i in self.labels]


def _sort_key(key: VariantKey):
    return (key.chrom, key.pos, key.id)


def record_alt_counts(record: VariantRecord) -> tuple[np.ndarray, bool]:
    """Per-sample alternate-allele counts for one record, plus a had-missing flag.

    Missing alleles contribute nothing (impute-zero).
    """
    counts = np.empty(len(record.calls), dtype=np.uint8)
    missing = False
    for i, call in enumerate(record.calls):
        n = 0
        for a in call.alleles:
            if a is None:
                missing = True
            elif a >= 1:
                n += 1
        counts[i] = n
    return counts, missing


def extract_sample_variants(records: Iterable[VariantRecord], samples: Sequence[str],
                            missing: str = "impute-zero") -> Iterator[SampleVariant]:
    if missing not in MISSING_POLICIES:
        raise ConfigError(f"missing policy must be one of {MISSING_POLICIES}")
    for record in records:
        counts, had_missing = record_alt_counts(record)
        if had_missing and missing == "drop-variant":
            continue
        key = VariantKey(*record.key)
        for sample, n in zip(samples, counts):
            yield SampleVariant(sample, key, int(n))


def group_by_variant(sample_variants: Iterable[SampleVariant]) -> dict[VariantKey, dict[str, int]]:
    grouped: dict[VariantKey, dict[str, int]] = defaultdict(dict)
    for sv in sample_variants:
        grouped[sv.variant_key][sv.sample_id] = sv.alt_count
    return dict(grouped)


def _column_total(counts) -> tuple[int, bool]:
    values = counts.values() if isinstance(counts, Mapping) else counts
    arr = np.fromiter((int(v) for v in values), dtype=np.int64)
    return int(arr.sum()), bool((arr > 0).any())


def support_filter(grouped: Mapping) -> list:
    """Keys with at least one sample carrying an alternate allele."""
    return [k for k, counts in grouped.items() if _column_total(counts)[1]]


def frequency_filter(grouped: Mapping, min_alt: int = 12) -> list:
    """Keys whose summed alternate-allele count reaches ``min_alt`` (inclusive)."""
    return [k for k, counts in grouped.items() if _column_total(counts)[0] >= min_alt]


def assemble_matrix(sample_variants: Iterable[SampleVariant], retained: Iterable[VariantKey]) -> FeatureMatrix:
    retained_keys = sorted(set(retained), key=_sort_key)
    col = {k: j for j, k in enumerate(retained_keys)}
    per_sample: dict[str, dict[VariantKey, int]] = defaultdict(dict)
    for sv in sample_variants:
        per_sample[sv.sample_id]  # register every sample, even with no retained variants
        if sv.variant_key in col:
            per_sample[sv.sample_id][sv.variant_key] = sv.alt_count
    sample_ids = sorted(per_sample)
    values = np.zeros((len(sample_ids), len(retained_keys)), dtype=np.uint8)
    for i, s in enumerate(sample_ids):
        row = per_sample[s]
        if len(row) != len(retained_keys):
            absent = next(k for k in retained_keys if k not in row)
            raise InconsistentSampleSet(f"sample {s!r} has no count for variant {absent}")
        for k, n in row.items():
            values[i, col[k]] = n
    return FeatureMatrix(tuple(sample_ids), tuple(retained_keys), values)


def build_feature_matrix(records: Iterable[VariantRecord], samples: Sequence[str],
                         min_alt: int = 12, missing: str = "impute-zero") -> FeatureMatrix:
    """Column-oriented extract -> support filter -> frequency filter -> assemble."""
    if missing not in MISSING_POLICIES:
        raise ConfigError(f"missing policy must be one of {MISSING_POLICIES}")
    columns: dict[VariantKey, np.ndarray] = {}
    for record in records:
        counts, had_missing = record_alt_counts(record)
        if had_missing and missing == "drop-variant":
            continue
        total = int(counts.sum(dtype=np.int64))
        if total == 0 or total < min_alt:
            continue
        key = VariantKey(*record.key)
        if key in columns:
            raise InconsistentSampleSet(f"variant {key} appears twice")
        columns[key] = counts
    order = np.argsort(np.asarray(samples, dtype=object), kind="stable")
    keys = sorted(columns, key=_sort_key)
    if keys:
        values = np.stack([columns[k] for k in keys], axis=1)[order]
    else:
        values = np.zeros((len(samples), 0), dtype=np.uint8)
    return FeatureMatrix(tuple(samples[i] for i in order), tuple(keys), np.ascontiguousarray(values))


def attach_labels(matrix: FeatureMatrix, panel: Iterable[PanelEntry], level: str = "super_population") -> LabeledDataset:
    if level not in LEVELS:
        raise ConfigError(f"level must be one of {LEVELS}, got {level!r}")
    by_id = {p.sample_id: p for p in panel}
    names = []
    for s in matrix.sample_ids:
        entry = by_id.get(s)
        if entry is None:
            raise UnknownSample(f"sample {s!r} not found in panel")
        names.append(getattr(entry, level))
    vocab = tuple(sorted(set(names)))
    index = {name: i for i, name in enumerate(vocab)}
    labels = np.array([index[n] for n in names], dtype=np.int64)
    return LabeledDataset(matrix, labels, vocab)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.6
    test_fraction: float = 0.2
    validation_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fr = (self.train_fraction, self.test_fraction, self.validation_fraction)
        if any(f < 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must be >= 0 and sum to 1, got {fr}")


def _controlled_cut(sizes: np.ndarray, fraction: float) -> np.ndarray:
    """Per-class cut points floor/ceil(fraction * size) whose total is round(fraction * N)."""
    exact = fraction * sizes
    cut = np.floor(exact + 1e-9).astype(np.int64)
    target = int(math.floor(fraction * sizes.sum() + 0.5 + 1e-9))
    short = target - int(cut.sum())
    if short > 0:
        frac = exact - cut
        # largest remainder first, ties to the lower class index
        order = sorted(range(len(sizes)), key=lambda c: (-frac[c], c))
        for c in order:
            if short == 0:
                break
            if cut[c] < sizes[c] and frac[c] > 1e-9:
                cut[c] += 1
                short -= 1
    return cut


def split(dataset: LabeledDataset, spec: SplitSpec, stratify: bool = True
          ) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Seeded stratified train/test/validation partition of the rows."""
    idx_sets = split_indices(dataset.labels, spec, stratify)
    return tuple(dataset.subset(ix) for ix in idx_sets)  # type: ignore[return-value]


def split_indices(labels: np.ndarray, spec: SplitSpec, stratify: bool = True) -> tuple[np.ndarray, ...]:
    rng = np.random.default_rng(spec.seed)
    labels = np.asarray(labels)
    n = len(labels)
    fractions = (spec.train_fraction, spec.test_fraction, spec.validation_fraction)
    if stratify:
        classes = np.unique(labels)
        groups = [np.flatnonzero(labels == c) for c in classes]
        needed = sum(1 for f in fractions if f > 0)
        for c, g in zip(classes, groups):
            if len(g) < needed:
                raise ClassTooSmall(f"class {c} has {len(g)} rows, need >= {needed}")
    else:
        groups = [np.arange(n)]
    groups = [rng.permutation(g) for g in groups]
    sizes = np.array([len(g) for g in groups], dtype=np.int64)
    cut1 = _controlled_cut(sizes, fractions[0])
    cut2 = np.maximum(_controlled_cut(sizes, fractions[0] + fractions[1]), cut1)
    parts: list[list[np.ndarray]] = [[], [], []]
    for g, a, b in zip(groups, cut1, cut2):
        parts[0].append(g[:a])
        parts[1].append(g[a:b])
        parts[2].append(g[b:])
    return tuple(np.sort(np.concatenate(p)) if p else np.zeros(0, dtype=np.int64) for p in parts)


# on-disk cache -------------------------------------------------------------

CACHE_VERSION = 1


def write_matrix_cache(matrix: FeatureMatrix, directory: str | os.PathLike,
                       settings: FeatureSettings | None = None) -> Path:
    """Write ``manifest.txt`` plus ``values.u8`` (row-major) into ``directory``."""
    settings = settings or FeatureSettings()
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    rows, cols = matrix.shape
    lines = [
        f"format_version={CACHE_VERSION}",
        f"rows={rows}",
        f"cols={cols}",
        "dtype=uint8",
        f"min_alt={settings.min_alt}",
        f"missing={settings.missing}",
        f"scaling={settings.scaling}",
        f"settings_hash={settings.digest()}",
    ]
    lines += [f"sample={s}" for s in matrix.sample_ids]
    lines += [f"variant={k.chrom}\t{k.pos}\t{k.id}" for k in matrix.variant_keys]
    (d / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (d / "values.u8").write_bytes(np.ascontiguousarray(matrix.values, dtype=np.uint8).tobytes())
    return d


def read_matrix_cache(directory: str | os.PathLike) -> tuple[FeatureMatrix, FeatureSettings]:
    d = Path(directory)
    meta: dict[str, str] = {}
    samples: list[str] = []
    variants: list[VariantKey] = []
    for line in (d / "manifest.txt").read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        key, _, value = line.partition("=")
        if key == "sample":
            samples.append(value)
        elif key == "variant":
            chrom, pos, vid = value.split("\t")
            variants.append(VariantKey(chrom, int(pos), vid))
        else:
            meta[key] = value
    if int(meta.get("format_version", -1)) != CACHE_VERSION:
        raise VersionMismatch(f"matrix cache version {meta.get('format_version')} != {CACHE_VERSION}")
    rows, cols = int(meta["rows"]), int(meta["cols"])
    if rows != len(samples) or cols != len(variants):
        raise CorruptArtifact("manifest dimensions disagree with listed samples/variants")
    raw = (d / "values.u8").read_bytes()
    if len(raw) != rows * cols:
        raise CorruptArtifact(f"values.u8 holds {len(raw)} bytes, expected {rows * cols}")
    values = np.frombuffer(raw, dtype=np.uint8).reshape(rows, cols).copy()
    settings = FeatureSettings(int(meta["min_alt"]), meta["missing"], meta["scaling"])
    return FeatureMatrix(tuple(samples), tuple(variants), values), settings


def export_csv(dataset: LabeledDataset, path: str | os.PathLike) -> None:
    """Debug dump: sample_id, label, then one column per variant."""
    m = dataset.matrix
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", "label"] + [f"{k.chrom}:{k.pos}:{k.id}" for k in m.variant_keys])
        for i, s in enumerate(m.sample_ids):
            w.writerow([s, dataset.label_vocabulary[dataset.labels[i]]] + m.values[i].tolist())

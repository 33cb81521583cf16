"""Model artifacts: a ``manifest.txt`` plus one raw little-endian float64 file.

The manifest is ``key=value`` lines.  Repeated ``label=`` lines give the class
vocabulary in order, ``layer=`` lines give ``<group> <activation>`` per dense
layer and ``array=`` lines give ``<name> <shape>`` in the order the arrays
appear in ``arrays.f64``.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .dbn import Dbn
from .dec import Autoencoder, DecState, soft_assign, target_distribution
from .errors import ConfigError, CorruptArtifact, VersionMismatch
from .kmeans import KMeansModel
from .mlp import MlpClassifier
from .nncore import DenseLayer
from .rbm import Rbm

FORMAT_VERSION = 1
MANIFEST = "manifest.txt"
ARRAYS = "arrays.f64"
_LE = np.dtype("<f8")


class _Writer:
    def __init__(self):
        self.meta: list[tuple[str, str]] = []
        self.arrays: list[tuple[str, np.ndarray]] = []

    def put(self, key: str, value) -> None:
        self.meta.append((key, str(value)))

    def array(self, name: str, a: np.ndarray) -> None:
        self.arrays.append((name, np.asarray(a, dtype=np.float64)))

    def layers(self, group: str, layers: list[DenseLayer]) -> None:
        for i, layer in enumerate(layers):
            self.put("layer", f"{group} {layer.activation.value}")
            self.array(f"{group}.{i}.weights", layer.weights)
            self.array(f"{group}.{i}.bias", layer.bias)


class _Reader:
    def __init__(self, meta: list[tuple[str, str]], arrays: dict[str, np.ndarray]):
        self.meta = meta
        self.arrays = arrays

    def get(self, key: str, default: str | None = None) -> str:
        for k, v in self.meta:
            if k == key:
                return v
        if default is None:
            raise CorruptArtifact(f"manifest lacks '{key}'")
        return default

    def all(self, key: str) -> list[str]:
        return [v for k, v in self.meta if k == key]

    def array(self, name: str) -> np.ndarray:
        try:
            return self.arrays[name]
        except KeyError:
            raise CorruptArtifact(f"array '{name}' missing") from None

    def layers(self, group: str) -> list[DenseLayer]:
        acts = [v.split(" ", 1)[1] for v in self.all("layer") if v.split(" ", 1)[0] == group]
        return [DenseLayer(self.array(f"{group}.{i}.weights"), self.array(f"{group}.{i}.bias"), act)
                for i, act in enumerate(acts)]


def model_kind(model) -> str:
    if isinstance(model, Dbn):
        return "dbn"
    if isinstance(model, MlpClassifier):
        return "mlp"
    if isinstance(model, KMeansModel):
        return "kmeans"
    if isinstance(model, DecState):
        return "dec"
    raise ConfigError(f"cannot persist objects of type {type(model).__name__}")


def save_model(model, directory: str | os.PathLike, settings_hash: str = "") -> Path:
    """Write ``model`` into ``directory`` (created if needed)."""
    kind = model_kind(model)
    w = _Writer()
    w.put("format_version", FORMAT_VERSION)
    w.put("kind", kind)
    w.put("settings_hash", settings_hash)
    if kind in ("mlp", "dbn"):
        w.put("scaling", model.scaling)
        for lab in model.label_vocabulary:
            w.put("label", lab)
        if kind == "dbn":
            w.put("rbm_count", len(model.rbm_stack))
            for i, r in enumerate(model.rbm_stack):
                w.array(f"rbm.{i}.weights", r.weights)
                w.array(f"rbm.{i}.visible_bias", r.visible_bias)
                w.array(f"rbm.{i}.hidden_bias", r.hidden_bias)
        w.layers("net", model.layers)
    elif kind == "kmeans":
        w.put("k", model.k)
        w.put("wcss", repr(model.wcss))
        w.put("iterations_run", model.iterations_run)
        w.array("centroids", model.centroids)
        w.array("assignments", model.assignments)
    else:
        ae = model.autoencoder
        for key in ("alpha", "tol", "gamma"):
            w.put(key, repr(float(getattr(model, key))))
        w.put("iterations_run", model.iterations_run)
        w.put("converged", int(model.converged))
        w.put("pretrained", int(ae.pretrained))
        w.put("finetuned", int(ae.finetuned))
        w.layers("encoder", ae.encoder)
        w.layers("decoder", ae.decoder)
        if ae.offset is not None:
            w.array("offset", ae.offset)
        w.array("centroids", model.centroids)

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    lines = [f"{k}={v}" for k, v in w.meta]
    lines += [f"array={name} {','.join(str(s) for s in a.shape)}" for name, a in w.arrays]
    (d / MANIFEST).write_text("\n".join(lines) + "\n", encoding="utf-8")
    with open(d / ARRAYS, "wb") as fh:
        for _, a in w.arrays:
            fh.write(np.ascontiguousarray(a, dtype=_LE).tobytes())
    return d


def _read(directory: Path) -> _Reader:
    try:
        text = (directory / MANIFEST).read_text(encoding="utf-8")
        raw = (directory / ARRAYS).read_bytes()
    except FileNotFoundError as exc:
        raise CorruptArtifact(f"missing artifact file: {exc.filename}") from None
    meta: list[tuple[str, str]] = []
    specs: list[tuple[str, tuple[int, ...]]] = []
    for line in text.splitlines():
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CorruptArtifact(f"malformed manifest line: {line!r}")
        if key == "array":
            name, _, shape = value.partition(" ")
            specs.append((name, tuple(int(s) for s in shape.split(",")) if shape else ()))
        else:
            meta.append((key, value))
    version = dict(meta).get("format_version")
    if version is None or not version.isdigit():
        raise CorruptArtifact("manifest has no usable format_version")
    if int(version) != FORMAT_VERSION:
        raise VersionMismatch(f"artifact format {version}, this build reads {FORMAT_VERSION}")
    expected = sum(int(np.prod(shape)) for _, shape in specs) * 8
    if len(raw) != expected:
        raise CorruptArtifact(f"{ARRAYS} holds {len(raw)} bytes, manifest declares {expected}")
    flat = np.frombuffer(raw, dtype=_LE)
    arrays, pos = {}, 0
    for name, shape in specs:
        size = int(np.prod(shape))
        arrays[name] = flat[pos:pos + size].astype(np.float64).reshape(shape)
        pos += size
    return _Reader(meta, arrays)


def load_model(directory: str | os.PathLike):
    r = _read(Path(directory))
    kind = r.get("kind")
    if kind in ("mlp", "dbn"):
        labels = tuple(r.all("label"))
        layers = r.layers("net")
        scaling = r.get("scaling")
        if kind == "mlp":
            return MlpClassifier(layers, labels, [], scaling)
        rbms = [Rbm(r.array(f"rbm.{i}.weights"), r.array(f"rbm.{i}.visible_bias"), r.array(f"rbm.{i}.hidden_bias"))
                for i in range(int(r.get("rbm_count")))]
        return Dbn(rbms, layers, labels, [], [], scaling)
    if kind == "kmeans":
        return KMeansModel(int(r.get("k")), r.array("centroids"), r.array("assignments").astype(np.int64),
                           float(r.get("wcss")), int(r.get("iterations_run")))
    if kind == "dec":
        offset = r.arrays.get("offset")
        ae = Autoencoder(r.layers("encoder"), r.layers("decoder"), bool(int(r.get("pretrained"))),
                         bool(int(r.get("finetuned"))), offset)
        centroids = r.array("centroids")
        alpha = float(r.get("alpha"))
        empty = np.zeros((0, len(centroids)))
        return DecState(ae, centroids, alpha, float(r.get("tol")), float(r.get("gamma")), empty, empty,
                        [], int(r.get("iterations_run")), bool(int(r.get("converged"))))
    raise CorruptArtifact(f"unknown model kind {kind!r}")


def settings_hash_of(directory: str | os.PathLike) -> str:
    return _read(Path(directory)).get("settings_hash", "")


def dec_assign(state: DecState, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(Q, P) of a DEC model on new data."""
    from .dec import encode

    q = soft_assign(encode(state.autoencoder, x), state.centroids, state.alpha)
    return q, target_distribution(q)

"""FFN layer stack, its file format, and the exact evaluation oracle."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _binio
from .activations import ActivationKind, evaluate
from .errors import FormatError, ShapeError
from .linalg import as_matrix

MODEL_MAGIC = b"FFNFOLD1"
MODEL_VERSION = 1


def _f32_exact(a):
    return np.asarray(a, dtype=np.float32).astype(np.float64)


@dataclass(frozen=True, eq=False)
class FfnLayer:
    """One feed-forward block ``act(x @ w1 + b1) @ w2 + b2``.

    Neuron ``n`` is column ``n`` of ``w1`` paired with row ``n`` of ``w2``.
    """

    w1: np.ndarray
    b1: np.ndarray
    act: ActivationKind
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        w1 = as_matrix(self.w1, "w1")
        w2 = as_matrix(self.w2, "w2")
        b1 = np.asarray(self.b1, dtype=np.float64).reshape(-1)
        b2 = np.asarray(self.b2, dtype=np.float64).reshape(-1)
        d, h = w1.shape
        if w2.shape != (h, d) or b1.shape != (h,) or b2.shape != (d,):
            raise ShapeError(f"inconsistent layer shapes w1 {w1.shape}, b1 {b1.shape}, "
                             f"w2 {w2.shape}, b2 {b2.shape}")
        for name, value in (("w1", w1), ("b1", b1), ("w2", w2), ("b2", b2)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "act", ActivationKind.parse(self.act))

    @property
    def d(self):
        return self.w1.shape[0]

    @property
    def h(self):
        return self.w1.shape[1]

    def pre_activations(self, x):
        x = as_matrix(x, "x")
        if x.shape[1] != self.d:
            raise ShapeError(f"input has {x.shape[1]} columns, layer expects d={self.d}")
        return x @ self.w1 + self.b1

    def to_float32(self):
        """Copy with every weight rounded to float32, as stored on disk."""
        return FfnLayer(_f32_exact(self.w1), _f32_exact(self.b1), self.act,
                        _f32_exact(self.w2), _f32_exact(self.b2))


def ffn_exact(layer, x):
    """Ground-truth layer output, one row per token."""
    z = layer.pre_activations(x)
    return evaluate(layer.act, z) @ layer.w2 + layer.b2


@dataclass(frozen=True, eq=False)
class ToyModel:
    layers: tuple = field(default_factory=tuple)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError("model needs at least one layer")
        d = layers[0].d
        if any(layer.d != d for layer in layers):
            raise ShapeError(f"layer widths differ: {[layer.d for layer in layers]}")
        object.__setattr__(self, "layers", layers)

    @property
    def d(self):
        return self.layers[0].d

    def hidden_states(self, x):
        """Inputs to each layer followed by the final output (len(layers) + 1 arrays)."""
        states = [as_matrix(x, "x")]
        for layer in self.layers:
            states.append(ffn_exact(layer, states[-1]))
        return states

    def forward(self, x):
        return self.hidden_states(x)[-1]


def gen_synthetic(d=64, h=None, layers=1, seed=42, act="gelu", bias_scale=0.0):
    """Random model with ``w1 ~ N(0, 1/d)`` and ``w2 ~ N(0, 1/h)``; ``h`` defaults to 4d.

    Weights are rounded to float32 so the in-memory model equals its saved form.
    """
    h = 4 * d if h is None else h
    if min(d, h, layers) < 1:
        raise ValueError("d, h and layers must all be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(layers):
        w1 = rng.standard_normal((d, h)) / np.sqrt(d)
        w2 = rng.standard_normal((h, d)) / np.sqrt(h)
        b1 = bias_scale * rng.standard_normal(h)
        b2 = bias_scale * rng.standard_normal(d)
        out.append(FfnLayer(w1, b1, act, w2, b2).to_float32())
    return ToyModel(tuple(out))


def layer_blob(layer):
    return b"".join(_binio.le_bytes(a, np.float32) for a in (layer.w1, layer.b1, layer.w2, layer.b2))


def read_layer_blob(reader, d, h, act):
    w1 = reader.array(np.float32, d * h).reshape(d, h)
    b1 = reader.array(np.float32, h)
    w2 = reader.array(np.float32, h * d).reshape(h, d)
    b2 = reader.array(np.float32, d)
    return FfnLayer(w1.astype(np.float64), b1.astype(np.float64), act,
                    w2.astype(np.float64), b2.astype(np.float64))


def model_to_bytes(model):
    acts = {layer.act for layer in model.layers}
    hs = {layer.h for layer in model.layers}
    if len(acts) != 1 or len(hs) != 1:
        raise ShapeError("file format needs one activation and one hidden width for all layers")
    header = {"version": MODEL_VERSION, "d": model.d, "h": hs.pop(),
              "layers": len(model.layers), "act": acts.pop().value}
    return _binio.pack_header(MODEL_MAGIC, header) + b"".join(layer_blob(l) for l in model.layers)


def model_from_bytes(buf):
    reader = _binio.Reader(buf)
    reader.magic(MODEL_MAGIC)
    header = reader.json_header()
    _binio.check_version(header, MODEL_VERSION)
    _binio.require_dims(header, "d", "h", "layers")
    try:
        act = ActivationKind.parse(header.get("act"))
    except ValueError as exc:
        raise FormatError(str(exc), code="shape-mismatch") from None
    layers = [read_layer_blob(reader, header["d"], header["h"], act) for _ in range(header["layers"])]
    reader.finish()
    return ToyModel(tuple(layers))


def model_save(model, path):
    Path(path).write_bytes(model_to_bytes(model))


def model_load(path):
    return model_from_bytes(Path(path).read_bytes())

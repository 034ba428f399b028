"""Constant folding of linearised neurons into one ``d x d`` matrix per layer."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _binio
from .activations import ActivationKind
from .errors import FormatError, ShapeError
from .model import FfnLayer, layer_blob, read_layer_blob
from .predictor import build_predictor, predictor_to_bytes, read_predictor
from .range_search import NeuronApprox
from .thresholding import ThresholdPlan

ARTIFACT_MAGIC = b"FFNFOLDC"
ARTIFACT_VERSION = 1


def fold_neuron(w1_col, w2_row, approx, b1_n=0.0):
    """Fold ``slope * z + intercept`` sandwiched between one column and one row.

    Returns ``(Cn, Bn)`` with ``Cn = slope * outer(w1_col, w2_row)`` and
    ``Bn = (slope * b1_n + intercept) * w2_row``.
    """
    w1_col = np.asarray(w1_col, dtype=np.float64)
    w2_row = np.asarray(w2_row, dtype=np.float64)
    cn = approx.slope * np.outer(w1_col, w2_row)
    bn = (approx.slope * b1_n + approx.intercept) * w2_row
    return cn, bn


def fold_neurons(layer, approx, neurons=None, init=None):
    """Accumulate ``(C, B)`` over ``neurons`` (default: all) in the given order.

    Passing the result of one call as ``init`` to the next continues the same
    running sum, so splitting the neuron list reproduces a single call exactly.
    """
    d = layer.d
    if init is None:
        c, b = np.zeros((d, d)), np.zeros(d)
    else:
        c, b = init[0].copy(), init[1].copy()
    for n in range(layer.h) if neurons is None else neurons:
        cn, bn = fold_neuron(layer.w1[:, n], layer.w2[n], approx[n], layer.b1[n])
        c += cn
        b += bn
    return c, b


@dataclass(frozen=True, eq=False)
class FoldedLayer:
    c: np.ndarray
    bfold: np.ndarray
    approx: tuple
    original: FfnLayer
    predictor: object = None
    l1: np.ndarray = field(init=False, repr=False)
    l2: np.ndarray = field(init=False, repr=False)
    slope: np.ndarray = field(init=False, repr=False)
    intercept: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        approx = tuple(self.approx)
        if len(approx) != self.original.h:
            raise ShapeError(f"{len(approx)} approximations for h={self.original.h} neurons")
        object.__setattr__(self, "approx", approx)
        for name in ("l1", "l2", "slope", "intercept"):
            object.__setattr__(self, name, np.array([getattr(a, name) for a in approx], dtype=np.float64))

    @property
    def d(self):
        return self.original.d

    @property
    def h(self):
        return self.original.h

    @property
    def act(self):
        return self.original.act

    @property
    def coverage(self):
        return np.array([a.coverage for a in self.approx])


def fold_layer(layer, approx, predictor_bits=None, predictor=None):
    """Fold every neuron of ``layer``; builds a predictor when ``predictor_bits`` is given."""
    if len(approx) != layer.h:
        raise ShapeError(f"{len(approx)} approximations for h={layer.h} neurons")
    c, b = fold_neurons(layer, approx)
    if predictor is None and predictor_bits:
        predictor = build_predictor(layer.w1, predictor_bits)
    return FoldedLayer(c, b, tuple(approx), layer, predictor)


def folded_params(d, h, predictor_bits=0):
    """Parameter accounting for one layer, in float32-equivalent parameters."""
    folded = d * d + d
    original = 2 * d * h + h + d
    predictor = h * d * predictor_bits / 32
    return {
        "folded_params": folded,
        "original_params": original,
        "predictor_params": predictor,
        "matrix_reduction": 1 - d * d / (2 * d * h),
        "compression_ratio": 1 - (folded + predictor) / original,
    }


@dataclass(eq=False)
class FoldedModel:
    layers: list
    plan: ThresholdPlan = None
    predictor_bits: int = 0

    @property
    def d(self):
        return self.layers[0].d

    @property
    def h(self):
        return self.layers[0].h

    @property
    def act(self):
        return self.layers[0].act

    def compression(self):
        return folded_params(self.d, self.h, self.predictor_bits)["compression_ratio"]


def artifact_to_bytes(folded):
    first = folded.layers[0]
    plan = folded.plan
    header = {
        "version": ARTIFACT_VERSION,
        "d": first.d,
        "h": first.h,
        "layers": len(folded.layers),
        "act": first.act.value,
        "global_t": None if plan is None else plan.global_t,
        "bounds": None if plan is None else list(plan.bounds),
        "predictor_bits": folded.predictor_bits,
        "plan": None if plan is None else plan.to_dict(),
        "coverage": [layer.coverage.tolist() for layer in folded.layers],
        "residual": [[a.residual for a in layer.approx] for layer in folded.layers],
    }
    parts = [_binio.pack_header(ARTIFACT_MAGIC, header)]
    for layer in folded.layers:
        if layer.d != first.d or layer.h != first.h or layer.act != first.act:
            raise ShapeError("all folded layers must share d, h and activation")
        table = np.stack([layer.l1, layer.l2, layer.slope, layer.intercept], axis=1)
        parts += [
            _binio.le_bytes(layer.c, np.float64),
            _binio.le_bytes(layer.bfold, np.float64),
            _binio.le_bytes(layer.original.b2, np.float32),
            _binio.le_bytes(table, np.float64),
            layer_blob(layer.original),
        ]
        if folded.predictor_bits:
            parts.append(predictor_to_bytes(layer.predictor))
    return b"".join(parts)


def artifact_from_bytes(buf):
    reader = _binio.Reader(buf)
    reader.magic(ARTIFACT_MAGIC)
    header = reader.json_header()
    _binio.check_version(header, ARTIFACT_VERSION)
    _binio.require_dims(header, "d", "h", "layers")
    d, h = header["d"], header["h"]
    try:
        act = ActivationKind.parse(header.get("act"))
    except ValueError as exc:
        raise FormatError(str(exc), code="shape-mismatch") from None
    bits = header.get("predictor_bits") or 0
    coverage = header.get("coverage") or [[0.0] * h] * header["layers"]
    residual = header.get("residual") or [[0.0] * h] * header["layers"]
    layers = []
    for i in range(header["layers"]):
        c = reader.array(np.float64, d * d).reshape(d, d)
        bfold = reader.array(np.float64, d)
        reader.array(np.float32, d)  # b2 copy, also inside the original blob
        table = reader.array(np.float64, h * 4).reshape(h, 4)
        original = read_layer_blob(reader, d, h, act)
        predictor = read_predictor(reader, bits, d, h) if bits else None
        approx = tuple(NeuronApprox(*map(float, row), coverage=float(coverage[i][n]),
                                    residual=float(residual[i][n]))
                       for n, row in enumerate(table))
        layers.append(FoldedLayer(c, bfold, approx, original, predictor))
    reader.finish()
    plan = ThresholdPlan.from_dict(header["plan"]) if header.get("plan") else None
    return FoldedModel(layers, plan, bits)


def save_artifact(folded, path):
    Path(path).write_bytes(artifact_to_bytes(folded))


def load_artifact(path):
    return artifact_from_bytes(Path(path).read_bytes())

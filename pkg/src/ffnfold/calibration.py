"""Calibration data, per-neuron activation-input profiles and their statistics."""

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _binio
from .errors import FormatError, ShapeError
from .linalg import as_matrix

CALIB_MAGIC = b"CALIB001"


@dataclass(frozen=True, eq=False)
class CalibrationSet:
    x: np.ndarray

    def __post_init__(self):
        x = as_matrix(self.x, "calibration x")
        if x.shape[0] < 2:
            raise ShapeError(f"calibration needs k >= 2 tokens, got {x.shape[0]}")
        if not np.all(np.isfinite(x)):
            raise ValueError("calibration data contains non-finite values")
        object.__setattr__(self, "x", x)

    @property
    def k(self):
        return self.x.shape[0]


def tokens_to_bytes(x):
    x = as_matrix(x)
    k, d = x.shape
    return CALIB_MAGIC + struct.pack("<II", k, d) + _binio.le_bytes(x, np.float32)


def tokens_from_bytes(buf):
    reader = _binio.Reader(buf)
    reader.magic(CALIB_MAGIC)
    k, d = reader.u32(), reader.u32()
    if k < 1 or d < 1:
        raise FormatError(f"bad token matrix shape {k}x{d}", code="shape-mismatch")
    x = reader.array(np.float32, k * d).reshape(k, d).astype(np.float64)
    reader.finish()
    return x


def save_tokens(x, path):
    """Write a token matrix in the CALIB001 format (float32 payload)."""
    Path(path).write_bytes(tokens_to_bytes(x))


def load_tokens(path):
    """Read a token matrix; ``.csv`` files are parsed as comma-separated rows."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        x = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
        return x.astype(np.float32).astype(np.float64)
    return tokens_from_bytes(path.read_bytes())


def load_calibration(path):
    return CalibrationSet(load_tokens(path))


@dataclass(frozen=True, eq=False)
class ActivationProfile:
    """Sorted activation inputs, ``samples[layer]`` has shape ``(h, k)``."""

    samples: tuple

    @property
    def layers(self):
        return len(self.samples)

    @property
    def k(self):
        return self.samples[0].shape[1]

    def neuron(self, layer, n):
        return self.samples[layer][n]

    def summary(self, quantiles=(0.05, 0.25, 0.5, 0.75, 0.95)):
        out = []
        for s in self.samples:
            q = np.quantile(s, quantiles, axis=1)
            out.append({
                "min": s[:, 0].tolist(),
                "max": s[:, -1].tolist(),
                "mean": s.mean(axis=1).tolist(),
                "quantiles": {f"{p:g}": q[i].tolist() for i, p in enumerate(quantiles)},
            })
        return {"k": self.k, "layers": out}


def profile(model, calib):
    """Record ``x @ w1[:, n] + b1[n]`` for every token, neuron and layer.

    Each layer sees the exact outputs of the layers before it.
    """
    x = calib.x if isinstance(calib, CalibrationSet) else CalibrationSet(calib).x
    if x.shape[1] != model.d:
        raise ShapeError(f"calibration has d={x.shape[1]}, model has d={model.d}")
    states = model.hidden_states(x)
    samples = []
    for layer, inputs in zip(model.layers, states):
        z = np.sort(layer.pre_activations(inputs).T, axis=1)
        z.setflags(write=False)
        samples.append(z)
    return ActivationProfile(tuple(samples))


def save_profile(prof, json_path):
    """Write the JSON summary plus a ``.npz`` sidecar holding every sample."""
    json_path = Path(json_path)
    json_path.write_text(json.dumps(prof.summary(), indent=1))
    sidecar = json_path.with_suffix(".samples.npz")
    np.savez(sidecar, *prof.samples)
    return sidecar


def load_profile_samples(sidecar):
    with np.load(sidecar) as data:
        return ActivationProfile(tuple(data[f"arr_{i}"] for i in range(len(data.files))))


def coverage(samples, l1, l2):
    """Fraction of sorted ``samples`` in the half-open interval ``[l1, l2)``."""
    samples = np.asarray(samples)
    if samples.size == 0:
        return 0.0
    lo, hi = np.searchsorted(samples, [l1, l2], side="left")
    return max(int(hi) - int(lo), 0) / samples.size


def shortest_window(samples, mass):
    """Length of the shortest interval holding at least ``mass`` of each row's samples.

    ``samples`` is sorted along its last axis.
    """
    if not 0 < mass <= 1:
        raise ValueError(f"mass must be in (0, 1], got {mass}")
    s = np.atleast_2d(samples)
    k = s.shape[1]
    m = max(1, math.ceil(mass * k - 1e-9))
    return (s[:, m - 1:] - s[:, :k - m + 1]).min(axis=1)


def skew_report(prof, mass=0.65):
    """Per-neuron shortest-window length as a fraction of the sample span.

    Returns ``(per_layer_mean, per_neuron_ratios)``; zero-span neurons report 0.
    """
    means, ratios = [], []
    for s in prof.samples:
        span = s[:, -1] - s[:, 0]
        window = shortest_window(s, mass)
        r = np.divide(window, span, out=np.zeros_like(span), where=span > 0)
        ratios.append(r)
        means.append(float(r.mean()))
    return means, ratios

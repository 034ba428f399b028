"""Online inference: speculative ``x @ C + B`` followed by result fixing."""

from dataclasses import dataclass

import numpy as np

from .activations import FLOP_COST, evaluate
from .errors import ShapeError
from .linalg import as_matrix
from .predictor import predict_flags

MODES = ("predictor", "oracle", "none", "all")


@dataclass
class InferenceReport:
    output: np.ndarray
    flags: np.ndarray
    flagged_count: np.ndarray
    speculative_flops: int
    fixed_flops: int
    exact_flops: int
    per_layer: list = None

    @property
    def flagged_fraction(self):
        return float(self.flags.mean()) if self.flags.size else 0.0

    @property
    def total_flops(self):
        return self.speculative_flops + self.fixed_flops

    def summary(self):
        return {
            "flagged_fraction": self.flagged_fraction,
            "flops": {"speculative": self.speculative_flops, "fixed": self.fixed_flops,
                      "total": self.total_flops, "exact": self.exact_flops},
            "per_layer": self.per_layer or [],
        }


def _check_input(folded, x):
    x = as_matrix(x, "x")
    if x.shape[1] != folded.d:
        raise ShapeError(f"input has {x.shape[1]} columns, folded layer expects d={folded.d}")
    return x


def infer_speculative(folded, x):
    """``x @ C + (B + b2)``: every neuron assumed inside its range."""
    x = _check_input(folded, x)
    return x @ folded.c + (folded.bfold + folded.original.b2)


def linear_part(folded, z, neurons=slice(None)):
    return folded.slope[neurons] * z + folded.intercept[neurons]


def oracle_flags(folded, x):
    z = folded.original.pre_activations(_check_input(folded, x))
    return ~((folded.l1 <= z) & (z < folded.l2))


def fix_results(folded, x, y_spec, flags):
    """Swap the baked-in linear contribution of flagged neurons for the exact one.

    ``flags`` is a boolean ``(k, h)`` mask. For each flagged ``(token, n)`` the
    term ``(slope_n * z + intercept_n) * w2[n]`` is subtracted and
    ``act(z) * w2[n]`` added, with ``z`` recomputed from the original weights.
    Rows without flags are returned untouched.
    """
    x = _check_input(folded, x)
    flags = np.asarray(flags, dtype=bool)
    if flags.shape != (x.shape[0], folded.h):
        raise ShapeError(f"flags shape {flags.shape}, expected {(x.shape[0], folded.h)}")
    y = np.array(y_spec, dtype=np.float64, copy=True)
    layer = folded.original
    for r in np.flatnonzero(flags.any(axis=1)):
        idx = np.flatnonzero(flags[r])
        z = x[r] @ layer.w1[:, idx] + layer.b1[idx]
        w2 = layer.w2[idx]
        y[r] -= linear_part(folded, z, idx) @ w2
        y[r] += evaluate(layer.act, z) @ w2
    return y


def _flags_for(folded, x, mode, guard=0.0):
    k, h = x.shape[0], folded.h
    if mode == "none":
        return np.zeros((k, h), dtype=bool)
    if mode == "all":
        return np.ones((k, h), dtype=bool)
    if mode == "oracle":
        return oracle_flags(folded, x)
    if mode == "predictor":
        if folded.predictor is None:
            raise ValueError("folded layer has no predictor")
        return predict_flags(folded.predictor, folded.original.b1, x, folded.l1, folded.l2, guard)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def layer_flops(d, h, act, flagged):
    """``(speculative, fixed, exact)`` FLOPs for ``flagged`` neuron evaluations.

    Speculative: ``2 d^2`` for the matmul plus ``d`` for the bias per token.
    Each fixed neuron costs ``4 d`` plus the activation.
    """
    return 2 * d * d + d, int(flagged) * (4 * d + FLOP_COST[act]), 4 * d * h + h * FLOP_COST[act] + h + d


def infer(folded, x, mode="predictor", guard=0.0, batch_union=False):
    """Speculate, flag (predictor / oracle / none / all), fix, and count FLOPs."""
    x = _check_input(folded, x)
    y = infer_speculative(folded, x)
    flags = _flags_for(folded, x, mode, guard)
    if batch_union:
        flags = np.broadcast_to(flags.any(axis=0), flags.shape).copy()
    y = fix_results(folded, x, y, flags)
    counts = flags.sum(axis=1)
    spec, fixed, exact = layer_flops(folded.d, folded.h, folded.act, counts.sum())
    k = x.shape[0]
    return InferenceReport(y, flags, counts, spec * k, fixed, exact * k)


def model_infer(folded_layers, x, mode="predictor", guard=0.0, batch_union=False):
    """Run folded layers in sequence, each fed the previous layer's fixed output."""
    layers = getattr(folded_layers, "layers", folded_layers)
    reports = []
    for layer in layers:
        rep = infer(layer, x, mode, guard, batch_union)
        reports.append(rep)
        x = rep.output
    per_layer = [{"flagged_fraction": r.flagged_fraction, "speculative_flops": r.speculative_flops,
                  "fixed_flops": r.fixed_flops, "exact_flops": r.exact_flops} for r in reports]
    return InferenceReport(
        output=x,
        flags=np.concatenate([r.flags for r in reports], axis=1),
        flagged_count=np.sum([r.flagged_count for r in reports], axis=0),
        speculative_flops=sum(r.speculative_flops for r in reports),
        fixed_flops=sum(r.fixed_flops for r in reports),
        exact_flops=sum(r.exact_flops for r in reports),
        per_layer=per_layer,
    )


def approximation_error(folded, x, flags):
    """Per-token ``sum_n |act(z_n) - phi_n(z_n)| * ||w2[n]||`` over unflagged neurons.

    This is the layer error as a sum of per-neuron L2 distances; flagged neurons
    are computed exactly and contribute nothing.
    """
    x = _check_input(folded, x)
    layer = folded.original
    z = layer.pre_activations(x)
    gap = np.abs(evaluate(layer.act, z) - linear_part(folded, z))
    gap[np.asarray(flags, dtype=bool)] = 0.0
    return gap @ np.linalg.norm(layer.w2, axis=1)

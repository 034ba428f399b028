"""End-to-end fold pipeline, accuracy reports and threshold sweeps."""

import csv
import io

import numpy as np

from .calibration import CalibrationSet, profile
from .folding import FoldedModel, fold_layer, folded_params
from .predictor import flag_stats, predict_flags
from .range_search import search_range
from .runtime import infer, model_infer, oracle_flags
from .thresholding import build_plan, default_bounds, layer_centroids, parallel_map

REPORT_SCHEMA_ID = "report_v1"
EVAL_MODES = ("none", "oracle", "predictor", "all")
SWEEP_HEADER = ("t", "mse_oracle", "mse_predictor", "flagged_fraction", "compression")

_fraction = {"type": "number", "minimum": 0, "maximum": 1}
_mse = {"type": "number", "minimum": 0}
_mode_mse = {
    "type": "object",
    "properties": {m: _mse for m in EVAL_MODES},
    "required": list(EVAL_MODES),
}
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": REPORT_SCHEMA_ID,
    "type": "object",
    "required": ["schema", "config", "per_layer", "global"],
    "properties": {
        "schema": {"const": REPORT_SCHEMA_ID},
        "config": {"type": "object"},
        "per_layer": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["fold_mse", "coverage_actual_mean", "coverage_target",
                             "flagged_fraction", "predictor_precision", "predictor_recall",
                             "compression_ratio"],
                "properties": {
                    "fold_mse": _mode_mse,
                    "coverage_actual_mean": _fraction,
                    "coverage_calibration_mean": _fraction,
                    "coverage_target": _fraction,
                    "flagged_fraction": _fraction,
                    "predictor_flagged_fraction": _fraction,
                    "predictor_precision": _fraction,
                    "predictor_recall": _fraction,
                    "compression_ratio": {"type": "number", "maximum": 1},
                },
            },
        },
        "global": {
            "type": "object",
            "required": ["fold_mse", "flagged_fraction", "compression_ratio"],
            "properties": {
                "fold_mse": _mode_mse,
                "flagged_fraction": _fraction,
                "compression_ratio": {"type": "number", "maximum": 1},
            },
        },
    },
}


def fold_model(model, calib, global_t=0.85, bounds=None, bits=4, step=None, refine_iters=1):
    """Profile, plan thresholds, search ranges, fold, and build predictors."""
    calib = calib if isinstance(calib, CalibrationSet) else CalibrationSet(calib)
    if not 0 < global_t <= 1:
        raise ValueError(f"threshold must be in (0, 1], got {global_t}")
    bounds = default_bounds(global_t) if bounds is None else tuple(bounds)
    prof = profile(model, calib)
    centroids = [layer_centroids(s) for s in prof.samples]
    plan = build_plan(model, prof, global_t, bounds, step, refine_iters, centroids)
    layers = []
    for i, layer in enumerate(model.layers):
        norms = np.linalg.norm(layer.w2, axis=1)
        samples, targets = prof.samples[i], plan.neuron_t[i]
        approx = parallel_map(
            lambda n: search_range(samples[n], norms[n], layer.act, targets[n], step,
                                   centroid=centroids[i][n]),
            range(layer.h))
        layers.append(fold_layer(layer, approx, predictor_bits=bits))
    return FoldedModel(layers, plan, bits or 0)


def _mse(a, b):
    return float(np.mean((a - b) ** 2))


def eval_report(model, folded, x, config=None):
    """Folded-vs-exact MSE under every flag mode, plus coverage and predictor stats."""
    states = model.hidden_states(x)
    params = folded_params(folded.d, folded.h, folded.predictor_bits)
    per_layer = []
    for i, layer in enumerate(folded.layers):
        inputs, target = states[i], states[i + 1]
        truth = oracle_flags(layer, inputs)
        entry = {
            "fold_mse": {m: _mse(infer(layer, inputs, m).output, target)
                         for m in EVAL_MODES if m != "predictor" or layer.predictor is not None},
            "coverage_actual_mean": 1.0 - float(truth.mean()),
            "coverage_calibration_mean": float(layer.coverage.mean()),
            "coverage_target": (float(folded.plan.layer_t[i]) if folded.plan is not None
                                else float(layer.coverage.mean())),
            "flagged_fraction": float(truth.mean()),
            "compression_ratio": params["compression_ratio"],
        }
        if layer.predictor is not None:
            pred = predict_flags(layer.predictor, layer.original.b1, inputs, layer.l1, layer.l2)
            stats = flag_stats(pred, truth)
            entry["predictor_flagged_fraction"] = float(pred.mean())
            entry["predictor_precision"] = stats["precision"]
            entry["predictor_recall"] = stats["recall"]
        else:
            entry["fold_mse"]["predictor"] = entry["fold_mse"]["oracle"]
            entry["predictor_precision"] = entry["predictor_recall"] = 1.0
        per_layer.append(entry)

    exact = states[-1]
    global_mse = {}
    for mode in EVAL_MODES:
        if mode == "predictor" and folded.predictor_bits == 0:
            global_mse[mode] = global_mse["oracle"]
            continue
        global_mse[mode] = _mse(model_infer(folded, x, mode).output, exact)
    oracle_run = model_infer(folded, x, "oracle")
    return {
        "schema": REPORT_SCHEMA_ID,
        "config": dict(config or {}),
        "per_layer": per_layer,
        "global": {
            "fold_mse": global_mse,
            "flagged_fraction": oracle_run.flagged_fraction,
            "coverage_actual_mean": float(np.mean([e["coverage_actual_mean"] for e in per_layer])),
            "predictor_recall": float(np.mean([e["predictor_recall"] for e in per_layer])),
            "compression_ratio": params["compression_ratio"],
            "flops": oracle_run.summary()["flops"],
            "tokens": int(np.asarray(x).shape[0]),
        },
    }


def validate_report(report):
    import jsonschema

    jsonschema.validate(report, REPORT_SCHEMA)


def sweep(model, calib, thresholds, data=None, bits=4, step=None, bound_margin=None):
    """One row per threshold: oracle/predictor MSE, oracle flagged fraction, compression."""
    calib = calib if isinstance(calib, CalibrationSet) else CalibrationSet(calib)
    data = calib.x if data is None else data
    exact = model.forward(data)
    rows = []
    for t in thresholds:
        bounds = None
        if bound_margin is not None:
            bounds = (max(0.0, t - bound_margin), min(1.0, t + bound_margin))
        folded = fold_model(model, calib, t, bounds, bits, step)
        oracle = model_infer(folded, data, "oracle")
        mse_pred = (_mse(model_infer(folded, data, "predictor").output, exact)
                    if bits else _mse(oracle.output, exact))
        rows.append({
            "t": float(t),
            "mse_oracle": _mse(oracle.output, exact),
            "mse_predictor": mse_pred,
            "flagged_fraction": oracle.flagged_fraction,
            "compression": folded.compression(),
            "coverage_calibration": float(np.mean([l.coverage.mean() for l in folded.layers])),
        })
    return rows


def sweep_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for row in rows:
        writer.writerow([repr(row[key]) for key in SWEEP_HEADER])
    return buf.getvalue()

"""Acceptance criteria 1-9, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line with the measured
quantity next to its tolerance; the lines are repeated in the pytest summary.
"""

import itertools
import time

import numpy as np
import pytest

from ffnfold.activations import evaluate
from ffnfold.calibration import CalibrationSet, profile, tokens_from_bytes, tokens_to_bytes
from ffnfold.errors import FormatError
from ffnfold.evaluation import fold_model, sweep
from ffnfold.folding import artifact_from_bytes, artifact_to_bytes, fold_layer, folded_params
from ffnfold.model import FfnLayer, ToyModel, ffn_exact, gen_synthetic, model_from_bytes, model_to_bytes
from ffnfold.predictor import build_predictor, flag_stats, predict_flags
from ffnfold.range_search import full_span_approx
from ffnfold.runtime import approximation_error, fix_results, infer, infer_speculative, oracle_flags
from ffnfold.thresholding import allocate, build_plan

from conftest import random_layer

RESULTS = []


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    RESULTS.append(line)
    assert ok, line


def mixture_tokens(rng, k, d, centers):
    comp = rng.choice(len(centers), size=k, p=[0.5, 0.3, 0.2])
    return centers[comp] + 0.6 * rng.standard_normal((k, d))


def test_criterion_1_worked_example(example_layer, example_approx):
    start = time.perf_counter()
    folded = fold_layer(example_layer, example_approx)
    x = np.array([[-1.0, -1.0]])
    y = infer_speculative(folded, x)[0]
    # neuron one: z = x . (3, -1) = -2, linear value 0.25 * -2 + 0.1 = -0.4, times W2 row (-1, 0)
    flags = np.array([[True, False]])
    y_fixed = fix_results(folded, x, y[None], flags)[0]
    z0 = -2.0
    subtraction = y - (y_fixed - evaluate("gelu", np.array([z0]))[0] * example_layer.w2[0])
    elapsed = time.perf_counter() - start
    err = max(np.abs(y - [0.3, -0.1]).max(), np.abs(subtraction - [0.4, 0.0]).max())
    report(1, err <= 1e-9 and elapsed < 0.5,
           f"xC+B={y.round(12).tolist()} subtraction={subtraction.round(12).tolist()} "
           f"max err {err:.1e} <= 1e-9, {elapsed * 1e3:.1f} ms")


def test_criterion_2_reorder_error():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    layer = random_layer(rng, 64, 256, "gelu")
    x = rng.standard_normal((1000, 64))
    z = layer.pre_activations(x)
    norms = np.linalg.norm(layer.w2, axis=1)
    approx = [full_span_approx(np.sort(z[:, n]), norms[n], "gelu") for n in range(256)]
    folded = fold_layer(layer, approx)
    slope = np.array([a.slope for a in approx])
    intercept = np.array([a.intercept for a in approx])
    three_step = (slope * (x @ layer.w1 + layer.b1) + intercept) @ layer.w2 + layer.b2
    mse = float(np.mean((infer_speculative(folded, x) - three_step) ** 2))
    elapsed = time.perf_counter() - start
    report(2, mse <= 1e-6 and elapsed < 1.0, f"reorder MSE {mse:.2e} <= 1e-6, {elapsed:.2f} s")


def test_criterion_3_relu_exact():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    d, h = 64, 256
    base = random_layer(rng, d, h, "relu")
    layer = FfnLayer(base.w1, np.full(h, -3.0), "relu", base.w2, base.b2)
    calib = rng.standard_normal((2000, d))
    negative = float((layer.pre_activations(calib) < 0).mean())
    folded = fold_model(ToyModel((layer,)), calib, 0.95, bits=0).layers[0]
    covered = folded.l2 <= 0
    residual = max(a.residual for a, c in zip(folded.approx, covered) if c)
    x_neg = -np.abs(rng.standard_normal((200, d))) * 0.1
    x_neg = x_neg[(layer.pre_activations(x_neg) < 0).all(axis=1)]
    y = infer(folded, x_neg, "none").output
    b2_exact = bool(len(x_neg) > 0 and np.array_equal(y, np.broadcast_to(layer.b2, y.shape)))
    reduction = folded_params(d, h)["matrix_reduction"]
    elapsed = time.perf_counter() - start
    ok = (negative >= 0.95 and covered.all() and residual == 0.0 and b2_exact
          and abs(reduction - 0.875) <= 0.002 and elapsed < 1.0)
    report(3, ok, f"negative share {negative:.4f}, covered {covered.sum()}/{h}, max residual {residual}, "
                  f"output==b2 on {len(x_neg)} tokens: {b2_exact}, reduction {reduction:.4f}, {elapsed:.2f} s")


def test_criterion_4_coverage_precision():
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    d, h = 32, 128
    model = gen_synthetic(d, h, 1, seed=4, bias_scale=0.1)
    centers = 1.5 * rng.standard_normal((3, d))
    calib = mixture_tokens(rng, 10_000, d, centers)
    held_out = mixture_tokens(rng, 10_000, d, centers)
    folded = fold_model(model, calib, 0.85, bits=0)
    layer = folded.layers[0]
    actual = 1.0 - oracle_flags(layer, held_out).mean(axis=0)
    gap = float(np.mean(np.abs(actual - folded.plan.neuron_t[0])))
    mean_gap = abs(float(actual.mean()) - 0.85)
    elapsed = time.perf_counter() - start
    report(4, gap <= 0.02 and mean_gap <= 0.02 and elapsed < 30,
           f"mean |actual - t| {gap:.4f} <= 0.02, |mean actual - 0.85| {mean_gap:.4f}, {elapsed:.1f} s")


def test_criterion_5_oracle_exactness():
    start = time.perf_counter()
    worst_rel, worst_decomp = 0.0, 0.0
    for act in ("gelu", "silu"):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            layer = random_layer(rng, 16, 64, act)
            x = rng.standard_normal((200, 16))
            folded = fold_model(ToyModel((layer,)), x, 0.8, bits=0).layers[0]
            exact = ffn_exact(layer, x)
            y_all = infer(folded, x, "all").output
            worst_rel = max(worst_rel, float(np.max(np.abs(y_all - exact) / np.abs(exact))))
            oracle = infer(folded, x, "oracle")
            z = layer.pre_activations(x)
            gap = np.where(oracle.flags, 0.0, folded.slope * z + folded.intercept - evaluate(act, z))
            worst_decomp = max(worst_decomp, float(np.abs(oracle.output - exact - gap @ layer.w2).max()))
    elapsed = time.perf_counter() - start
    report(5, worst_rel <= 1e-9 and worst_decomp <= 1e-8 and elapsed < 10,
           f"all-flagged max rel err {worst_rel:.1e} <= 1e-9, decomposition {worst_decomp:.1e} <= 1e-8, "
           f"{elapsed:.1f} s")


def grid_optimum(errors, budget, bounds, step=0.005):
    """Exhaustive grid search of ``min errors . t`` with ``mean(t) = budget`` inside ``bounds``."""
    lo, hi = bounds
    levels = lo + step * np.arange(int(round((hi - lo) / step)) + 1)
    n = len(errors)
    if n == 1:
        return np.array([budget])
    head = np.array(list(itertools.product(levels, repeat=n - 1)))
    last = budget * n - head.sum(axis=1)
    ok = (last >= lo - 1e-9) & (last <= hi + 1e-9)
    cand = np.column_stack([head[ok], last[ok]])
    return cand[np.argmin(cand @ errors)]


def test_criterion_6_allocation():
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    worst_step, worst_mean, monotone = 0.0, 0.0, True
    for trial in range(12):
        n = 1 + trial % 4
        errors = rng.uniform(0.0, 5.0, n)
        budget = 0.005 * rng.integers(120, 190)
        bounds = (round(budget - 0.15, 3), round(min(1.0, budget + 0.15), 3))
        t = allocate(errors, budget, bounds)
        worst_step = max(worst_step, float(np.abs(t - grid_optimum(errors, budget, bounds)).max()))
        worst_mean = max(worst_mean, abs(float(t.mean()) - budget))
        order = np.argsort(errors)
        monotone &= bool(np.all(np.diff(t[order]) <= 1e-12))

    model = gen_synthetic(8, 32, 3, seed=6, bias_scale=0.2)
    prof = profile(model, CalibrationSet(np.random.default_rng(7).standard_normal((800, 8))))
    plan = build_plan(model, prof, 0.8)
    worst_mean = max(worst_mean, abs(float(plan.layer_t.mean()) - 0.8))
    for t_i, neurons, errs in zip(plan.layer_t, plan.neuron_t, plan.neuron_errors):
        worst_mean = max(worst_mean, abs(float(neurons.mean()) - t_i))
        order = np.argsort(errs)
        monotone &= bool(np.all(np.diff(neurons[order]) <= 1e-12))
    elapsed = time.perf_counter() - start
    report(6, worst_step <= 0.005 + 1e-9 and worst_mean <= 1e-9 and monotone and elapsed < 5,
           f"max |t - grid| {worst_step:.4f} <= 0.005, max mean error {worst_mean:.1e} <= 1e-9, "
           f"monotone {monotone}, {elapsed:.2f} s")


def test_criterion_7_monotone_sweep():
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    model = gen_synthetic(16, 64, 2, seed=21, bias_scale=0.1)
    calib = rng.standard_normal((4000, 16))
    held_out = rng.standard_normal((4000, 16))
    rows = sweep(model, calib, [0.65, 0.75, 0.85, 0.95], data=held_out, bits=4)
    mse = [r["mse_oracle"] for r in rows]
    inversions = sum(b < a for a, b in zip(mse, mse[1:]))
    gap = max(abs(r["flagged_fraction"] - (1 - r["coverage_calibration"])) for r in rows)
    elapsed = time.perf_counter() - start
    report(7, inversions <= 1 and gap <= 0.01 and elapsed < 120,
           f"oracle MSE by t {['%.2e' % m for m in mse]}, inversions {inversions} <= 1, "
           f"max |flagged - (1 - coverage)| {gap:.4f} <= 0.01, {elapsed:.1f} s")


def test_criterion_8_predictor():
    start = time.perf_counter()
    bypass_exact, recalls = True, []
    for seed in range(4):
        rng = np.random.default_rng(80 + seed)
        model = gen_synthetic(16, 64, 1, seed=seed, bias_scale=0.1)
        calib, x = rng.standard_normal((1500, 16)), rng.standard_normal((1500, 16))
        layer = fold_model(model, calib, 0.85, bits=8).layers[0]
        truth = oracle_flags(layer, x)
        bypass = build_predictor(layer.original.w1, 32)
        bypass_exact &= bool(np.array_equal(
            predict_flags(bypass, layer.original.b1, x, layer.l1, layer.l2), truth))
        pred = predict_flags(layer.predictor, layer.original.b1, x, layer.l1, layer.l2)
        recalls.append(flag_stats(pred, truth)["recall"])

    never_worse = True
    for case in range(100):
        rng = np.random.default_rng(800 + case)
        layer = random_layer(rng, 8, 32, ("gelu", "silu")[case % 2])
        x = rng.standard_normal((40, 8))
        folded = fold_model(ToyModel((layer,)), x, 0.8, bits=0).layers[0]
        truth = oracle_flags(folded, x)
        extra = truth | (rng.random(truth.shape) < 0.2)
        never_worse &= bool(np.all(approximation_error(folded, x, extra)
                                   <= approximation_error(folded, x, truth) + 1e-15))
    elapsed = time.perf_counter() - start
    recall = min(recalls)
    report(8, bypass_exact and recall >= 0.95 and never_worse and elapsed < 60,
           f"bypass exact {bypass_exact}, min 8-bit recall {recall:.4f} >= 0.95, "
           f"false-positive fixing never worse over 100 cases {never_worse}, {elapsed:.1f} s")


def test_criterion_9_determinism_and_format():
    start = time.perf_counter()
    model = gen_synthetic(8, 32, 2, seed=42, bias_scale=0.1)
    calib = np.random.default_rng(42).standard_normal((600, 8))
    first = artifact_to_bytes(fold_model(model, calib, 0.85, bits=4))
    second = artifact_to_bytes(fold_model(model, calib, 0.85, bits=4))
    deterministic = first == second

    model_blob = model_to_bytes(model)
    token_blob = tokens_to_bytes(calib)
    round_trips = (model_to_bytes(model_from_bytes(model_blob)) == model_blob
                   and artifact_to_bytes(artifact_from_bytes(first)) == first
                   and tokens_to_bytes(tokens_from_bytes(token_blob)) == token_blob
                   and np.array_equal(tokens_from_bytes(token_blob), calib.astype(np.float32)))

    def code(loader, blob):
        try:
            loader(blob)
        except FormatError as exc:
            return exc.code
        return None

    def bump_version(blob):
        # same byte length, so only the version check can fire
        assert b'"version":1' in blob
        return blob.replace(b'"version":1', b'"version":9', 1)

    codes = {}
    for name, loader, blob in (("model", model_from_bytes, model_blob),
                               ("artifact", artifact_from_bytes, first)):
        codes[name] = (code(loader, b"NOTMAGIC" + blob[8:]),
                       code(loader, bump_version(blob)),
                       code(loader, blob[: len(blob) // 2]),
                       code(loader, blob + b"\0\0\0\0"))
    expected = ("bad-magic", "version-mismatch", "truncated", "shape-mismatch")
    codes_ok = all(c == expected for c in codes.values())
    elapsed = time.perf_counter() - start
    report(9, deterministic and round_trips and codes_ok and elapsed < 10,
           f"byte-identical folds {deterministic}, bit-exact round-trips {round_trips}, "
           f"error codes {codes['model']} / {codes['artifact']}, {elapsed:.1f} s")

"""Command-line entry point: ``ffnfold <command> ...``.

Exit codes: 0 success, 1 validation/config error, 2 I/O or file-format error,
3 internal invariant violation.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import CalibrationSet, load_tokens, profile, save_profile, save_tokens, skew_report
from .errors import FoldError, FormatError, InvariantError
from .evaluation import eval_report, fold_model, sweep, sweep_csv, validate_report
from .folding import folded_params, load_artifact, save_artifact
from .model import gen_synthetic, model_load, model_save
from .runtime import MODES, model_infer
from .thresholding import default_bounds

log = logging.getLogger("ffnfold")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3


def _bounds(args):
    lo, hi = default_bounds(args.threshold)
    return (lo if args.bound_lo is None else args.bound_lo,
            hi if args.bound_hi is None else args.bound_hi)


def _write_json(path, payload):
    text = json.dumps(payload, indent=1, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def cmd_gen(args):
    model = gen_synthetic(args.d, args.h, args.layers, args.seed, args.act, args.bias_scale)
    model_save(model, args.out)
    if args.calib_out:
        rng = np.random.default_rng(args.seed + 1)
        save_tokens(rng.standard_normal((args.tokens, args.d)), args.calib_out)
    print(f"wrote {args.out} (d={model.d}, h={model.layers[0].h}, layers={len(model.layers)})")


def cmd_profile(args):
    model = model_load(args.model)
    prof = profile(model, CalibrationSet(load_tokens(args.calib)))
    sidecar = save_profile(prof, args.out)
    means, _ = skew_report(prof, 0.65)
    print(f"wrote {args.out} and {sidecar}; 65%-window/span per layer: "
          + ", ".join(f"{m:.3f}" for m in means))


def cmd_fold(args):
    model = model_load(args.model)
    calib = CalibrationSet(load_tokens(args.calib))
    folded = fold_model(model, calib, args.threshold, _bounds(args), args.bits, args.step,
                        args.refine_iters)
    save_artifact(folded, args.out)
    cov = [float(layer.coverage.mean()) for layer in folded.layers]
    print(f"wrote {args.out}: layers={len(folded.layers)} layer_t="
          f"{[round(float(t), 4) for t in folded.plan.layer_t]} calibration coverage="
          f"{[round(c, 4) for c in cov]} compression={folded.compression():.4f}")


def cmd_eval(args):
    model = model_load(args.model)
    folded = load_artifact(args.folded)
    if folded.d != model.d or folded.h != model.layers[0].h or len(folded.layers) != len(model.layers):
        raise FoldError("artifact does not match model dimensions", code="shape-mismatch")
    x = load_tokens(args.data)
    config = {"model": str(args.model), "folded": str(args.folded), "data": str(args.data),
              "seed": args.seed, "predictor_bits": folded.predictor_bits,
              "plan": folded.plan.to_dict() if folded.plan else None}
    report = eval_report(model, folded, x, config)
    validate_report(report)
    _write_json(args.out, report)


def cmd_stats(args):
    folded = load_artifact(args.folded)
    params = folded_params(folded.d, folded.h, folded.predictor_bits)
    plan = folded.plan
    out = {"d": folded.d, "h": folded.h, "layers": len(folded.layers),
           "activation": folded.act.value, "predictor_bits": folded.predictor_bits, **params}
    if plan is not None:
        out["global_t"] = plan.global_t
        out["bounds"] = list(plan.bounds)
        out["layer_t"] = plan.layer_t.tolist()
        out["layer_neuron_t_mean"] = [float(t.mean()) for t in plan.neuron_t]
    out["ranges"] = [
        {"l1": layer.l1.tolist(), "l2": layer.l2.tolist(), "slope": layer.slope.tolist(),
         "intercept": layer.intercept.tolist(), "coverage": layer.coverage.tolist()}
        for layer in folded.layers
    ] if args.ranges else None
    _write_json(args.out, out)


def cmd_sweep(args):
    model = model_load(args.model)
    calib = CalibrationSet(load_tokens(args.calib))
    data = load_tokens(args.data) if args.data else None
    ts = [float(t) for t in args.thresholds.split(",") if t.strip()]
    rows = sweep(model, calib, ts, data, args.bits, args.step)
    text = sweep_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_infer(args):
    folded = load_artifact(args.folded)
    x = load_tokens(args.data)
    rep = model_infer(folded, x, args.mode)
    save_tokens(rep.output, args.out)
    summary = rep.summary()
    summary.update(mode=args.mode, tokens=int(x.shape[0]))
    _write_json(args.report, summary)


def build_parser():
    parser = argparse.ArgumentParser(prog="ffnfold", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def fold_options(p):
        p.add_argument("--threshold", type=float, default=0.85)
        p.add_argument("--bound-lo", type=float)
        p.add_argument("--bound-hi", type=float)
        p.add_argument("--bits", type=int, default=4, help="predictor bits: 2,3,4,8; 32 = exact; 0 = none")
        p.add_argument("--step", type=float, help="range increment (default: sample span / 200)")
        p.add_argument("--refine-iters", type=int, default=1)

    p = sub.add_parser("gen", help="write a random synthetic model (and optional calibration)")
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--h", type=int)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--act", default="gelu")
    p.add_argument("--bias-scale", type=float, default=0.0)
    p.add_argument("--tokens", type=int, default=2048)
    p.add_argument("--calib-out")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("profile", help="record activation-input statistics")
    p.add_argument("--model", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("fold", help="produce a folded artifact")
    p.add_argument("--model", required=True)
    p.add_argument("--calib", required=True)
    fold_options(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fold)

    p = sub.add_parser("eval", help="compare a folded artifact against the exact model")
    p.add_argument("--model", required=True)
    p.add_argument("--folded", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="print compression and thresholds of an artifact")
    p.add_argument("--folded", required=True)
    p.add_argument("--ranges", action="store_true", help="include the per-neuron range table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep", help="fold and evaluate at several thresholds, write CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--data")
    p.add_argument("--thresholds", default="0.65,0.75,0.85,0.95")
    p.add_argument("--bits", type=int, default=4)
    p.add_argument("--step", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("infer", help="run folded inference on a token matrix")
    p.add_argument("--folded", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=MODES, default="predictor")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_infer)

    for p in sub.choices.values():
        p.add_argument("--seed", type=int, default=42)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (FoldError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.debug("unexpected failure", exc_info=True)
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Constant folding of FFN blocks through partial linear approximation of activations."""

from .activations import ActivationKind, evaluate
from .calibration import (ActivationProfile, CalibrationSet, coverage, load_calibration,
                          load_tokens, profile, save_tokens, skew_report)
from .density import KdeModel, find_centroid, kde_fit
from .errors import (DegenerateRangeError, FoldError, FormatError, InfeasibleBudgetError,
                     InsufficientSamplesError, InvariantError, ShapeError)
from .evaluation import eval_report, fold_model, sweep
from .folding import (FoldedLayer, FoldedModel, fold_layer, fold_neuron, folded_params,
                      load_artifact, save_artifact)
from .linalg import fit_line, l2_norm, matmul, outer
from .model import FfnLayer, ToyModel, ffn_exact, gen_synthetic, model_load, model_save
from .predictor import Predictor, build_predictor, flag_stats, predict_flags
from .range_search import NeuronApprox, approx_error, default_step, search_range
from .runtime import (InferenceReport, fix_results, infer, infer_speculative, model_infer,
                      oracle_flags)
from .thresholding import ThresholdPlan, allocate, build_plan, estimate_error_layer

__version__ = "0.1.0"

"""Greedy single-range search for each neuron's linear approximation."""

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .activations import derivative, evaluate
from .calibration import coverage as _coverage
from .density import find_centroid, kde_fit
from .errors import DegenerateRangeError, InsufficientSamplesError, InvariantError
from .linalg import DEGENERATE_VARIANCE, fit_line

STEP_FRACTION = 200
MIN_STEP = 1e-6


@dataclass(frozen=True)
class NeuronApprox:
    """``act(z) ~ slope * z + intercept`` for ``l1 <= z < l2``.

    ``residual`` is the L2 error on calibration tokens, already scaled by
    the norm of the neuron's output row.
    """

    l1: float
    l2: float
    slope: float
    intercept: float
    coverage: float = 0.0
    residual: float = 0.0

    def in_range(self, z):
        return (self.l1 <= z) & (z < self.l2)


def default_step(samples):
    span = float(samples[-1] - samples[0])
    return span / STEP_FRACTION if span > 0 else MIN_STEP


def approx_error(samples, w2_row_norm, act, l1, l2):
    """Fit a line to ``act`` on the in-range samples and return ``(slope, intercept, err)``.

    ``err = sqrt(sum((act(z) - slope*z - intercept)**2)) * w2_row_norm``, which is
    the summed per-token L2 error of the neuron's output contribution.
    """
    lo, hi = np.searchsorted(samples, [l1, l2], side="left")
    z = np.asarray(samples[lo:hi], dtype=np.float64)
    if z.size < 2:
        raise InsufficientSamplesError(f"{z.size} samples in [{l1}, {l2})")
    y = evaluate(act, z)
    slope, intercept = fit_line(z, y)
    r = y - (slope * z + intercept)
    return slope, intercept, float(np.sqrt(np.dot(r, r))) * w2_row_norm


class _WindowStats:
    """O(1) least-squares residuals over contiguous windows of sorted samples.

    Samples and targets are centred before the prefix sums to limit cancellation.
    """

    def __init__(self, samples, act, center):
        self.samples = samples
        self._sorted = samples.tolist()
        x = samples - center
        y = evaluate(act, samples) - evaluate(act, center)
        zero = np.zeros(1)
        self.sx = np.concatenate([zero, np.cumsum(x)])
        self.sy = np.concatenate([zero, np.cumsum(y)])
        self.sxx = np.concatenate([zero, np.cumsum(x * x)])
        self.sxy = np.concatenate([zero, np.cumsum(x * y)])
        self.syy = np.concatenate([zero, np.cumsum(y * y)])

    def bounds(self, l1, l2):
        return bisect_left(self._sorted, l1), bisect_left(self._sorted, l2)

    def sse(self, lo, hi):
        n = hi - lo
        if n < 2:
            return math.inf
        sx = self.sx[hi] - self.sx[lo]
        sy = self.sy[hi] - self.sy[lo]
        var_x = (self.sxx[hi] - self.sxx[lo]) - sx * sx / n
        if var_x / n < DEGENERATE_VARIANCE:
            return math.inf
        cov = (self.sxy[hi] - self.sxy[lo]) - sx * sy / n
        var_y = (self.syy[hi] - self.syy[lo]) - sy * sy / n
        return max(var_y - (cov / var_x) * cov, 0.0)


def _tangent(act, c, samples, w2_row_norm, l1, l2):
    slope = float(derivative(act, c))
    intercept = float(evaluate(act, c)) - slope * c
    lo, hi = np.searchsorted(samples, [l1, l2], side="left")
    z = samples[lo:hi]
    r = evaluate(act, z) - (slope * z + intercept)
    return slope, intercept, float(np.sqrt(np.dot(r, r))) * w2_row_norm


def search_range(samples, w2_row_norm, act, t_in, step=None, centroid=None, trace=None):
    """Grow a range from the density mode until it covers ``t_in`` of the samples.

    Each iteration widens the range by ``step`` on the side whose refit gives the
    smaller error (ties go left). A side with no samples left beyond it is not
    taken; a candidate with fewer than two distinct samples scores infinity.
    If ``trace`` is a list, one ``(err_left, err_right, side)`` tuple is appended
    per iteration.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < 2:
        raise InsufficientSamplesError("need at least 2 samples")
    if not 0 <= t_in <= 1:
        raise ValueError(f"threshold must be in [0, 1], got {t_in}")
    if step is None:
        step = default_step(samples)
    if centroid is None:
        centroid = find_centroid(kde_fit(samples))
    c = float(centroid)
    k = samples.size
    need = math.ceil(t_in * k - 1e-9)
    stats = _WindowStats(samples, act, c)

    n_left = n_right = 0
    lo, hi = stats.bounds(c, c)
    span = max(samples[-1], c) - min(samples[0], c)
    max_iter = int(span / step) + 4
    for _ in range(max_iter):
        if hi - lo >= need:
            break
        l_left, r_right = c - (n_left + 1) * step, c + (n_right + 1) * step
        left_open = lo > 0
        right_open = hi < k
        if not (left_open or right_open):
            raise InvariantError("range covers every sample but coverage is short")
        cand_l = stats.bounds(l_left, c + n_right * step)
        cand_r = stats.bounds(c - n_left * step, r_right)
        err_l = math.sqrt(stats.sse(*cand_l)) * w2_row_norm if left_open else math.inf
        err_r = math.sqrt(stats.sse(*cand_r)) * w2_row_norm if right_open else math.inf
        take_left = err_l <= err_r if (left_open and right_open) else left_open
        if take_left:
            n_left += 1
            lo, hi = cand_l
        else:
            n_right += 1
            lo, hi = cand_r
        if trace is not None:
            trace.append((err_l, err_r, "left" if take_left else "right"))
    else:
        raise InvariantError("range search did not terminate")

    l1, l2 = c - n_left * step, c + n_right * step
    cov = _coverage(samples, l1, l2)
    if hi - lo == 0:
        return NeuronApprox(l1, l2, 0.0, 0.0, cov, 0.0)
    try:
        slope, intercept, err = approx_error(samples, w2_row_norm, act, l1, l2)
    except (InsufficientSamplesError, DegenerateRangeError):
        mid = float(np.median(samples[lo:hi]))
        slope, intercept, err = _tangent(act, mid, samples, w2_row_norm, l1, l2)
    return NeuronApprox(l1, l2, slope, intercept, cov, err)


def full_span_approx(samples, w2_row_norm, act):
    """Fit over every sample; the range is ``[min, max + 1e-6 * scale)``."""
    samples = np.asarray(samples, dtype=np.float64)
    l1 = float(samples[0])
    l2 = float(samples[-1]) + MIN_STEP * max(1.0, abs(float(samples[-1])))
    slope, intercept, err = approx_error(samples, w2_row_norm, act, l1, l2)
    return NeuronApprox(l1, l2, slope, intercept, 1.0, err)

"""Error-aware distribution of the coverage budget over layers and neurons."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .density import find_centroid, kde_fit
from .errors import InfeasibleBudgetError
from .range_search import search_range

BOUND_MARGIN = 0.15


def default_bounds(global_t):
    return max(0.0, global_t - BOUND_MARGIN), min(1.0, global_t + BOUND_MARGIN)


def worker_count():
    try:
        return max(1, int(os.environ.get("FFNFOLD_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    items = list(items)
    workers = worker_count()
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def allocate(errors, budget_t, bounds):
    """Minimise ``sum(errors * t)`` subject to ``mean(t) == budget_t`` and box bounds.

    Fractional-knapsack greedy: scopes are visited in ascending error order and
    raised from ``t_lo`` to ``t_hi`` until the budget is spent. Scopes with equal
    error share whatever is left equally, so ties get equal thresholds.
    """
    errors = np.asarray(errors, dtype=np.float64)
    t_lo, t_hi = bounds
    if errors.ndim != 1 or errors.size == 0:
        raise ValueError("errors must be a non-empty 1-D array")
    if np.any(errors < 0) or not np.all(np.isfinite(errors)):
        raise ValueError("errors must be finite and non-negative")
    if not (0.0 <= t_lo <= budget_t <= t_hi <= 1.0):
        raise InfeasibleBudgetError(f"need 0 <= {t_lo} <= {budget_t} <= {t_hi} <= 1")

    n = errors.size
    t = np.full(n, float(t_lo))
    remaining = (budget_t - t_lo) * n
    order = np.argsort(errors, kind="stable")
    values, starts = np.unique(errors[order], return_index=True)
    ends = np.append(starts[1:], n)
    width = t_hi - t_lo
    for start, end in zip(starts, ends):
        if remaining <= 0:
            break
        group = order[start:end]
        cap = width * group.size
        if remaining >= cap:
            t[group] = t_hi
            remaining -= cap
        else:
            t[group] = t_lo + remaining / group.size
            remaining = 0.0
    return t


def neuron_errors(layer, samples, probe_t, step=None, centroids=None):
    """Squared residual of each neuron when its range is searched at ``probe_t``."""
    norms = np.linalg.norm(layer.w2, axis=1)

    def one(n):
        c = None if centroids is None else centroids[n]
        approx = search_range(samples[n], norms[n], layer.act, probe_t, step, centroid=c)
        return approx.residual ** 2

    return np.array(parallel_map(one, range(layer.h)))


def estimate_error_layer(layer, samples, probe_t, step=None, centroids=None):
    """Summed squared per-neuron residual for one layer at a uniform threshold."""
    return float(neuron_errors(layer, samples, probe_t, step, centroids).sum())


def layer_centroids(samples):
    return np.array(parallel_map(lambda s: find_centroid(kde_fit(s)), samples))


@dataclass
class ThresholdPlan:
    global_t: float
    layer_t: np.ndarray
    neuron_t: list
    bounds: tuple
    layer_errors: np.ndarray = None
    neuron_errors: list = None

    def to_dict(self):
        return {
            "global_t": self.global_t,
            "bounds": list(self.bounds),
            "layer_t": self.layer_t.tolist(),
            "neuron_t": [t.tolist() for t in self.neuron_t],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(float(data["global_t"]), np.asarray(data["layer_t"], dtype=np.float64),
                   [np.asarray(t, dtype=np.float64) for t in data["neuron_t"]],
                   tuple(data["bounds"]))


def build_plan(model, prof, global_t, bounds=None, step=None, refine_iters=1, centroids=None):
    """Two-level allocation: layers first, then neurons inside each layer.

    Layer errors are probed at ``global_t``; neuron errors at the layer's own
    threshold. With ``refine_iters > 1`` layer errors are re-probed at the
    previous round's layer thresholds and reallocated.
    """
    bounds = default_bounds(global_t) if bounds is None else tuple(bounds)
    if centroids is None:
        centroids = [layer_centroids(s) for s in prof.samples]
    probes = {}

    def probe(i, t):
        key = (i, float(t))
        if key not in probes:
            probes[key] = neuron_errors(model.layers[i], prof.samples[i], t, step, centroids[i])
        return probes[key]

    n_layers = len(model.layers)
    layer_t = np.full(n_layers, float(global_t))
    for _ in range(max(1, refine_iters)):
        layer_err = np.array([float(probe(i, layer_t[i]).sum()) for i in range(n_layers)])
        layer_t = allocate(layer_err, global_t, bounds)

    neuron_t, neuron_err = [], []
    for i in range(n_layers):
        errs = probe(i, layer_t[i])
        neuron_err.append(errs)
        neuron_t.append(allocate(errs, layer_t[i], bounds))
    return ThresholdPlan(float(global_t), layer_t, neuron_t, bounds, layer_err, neuron_err)

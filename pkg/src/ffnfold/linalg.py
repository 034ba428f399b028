"""Dense linear algebra helpers.

Matrices and vectors are plain float64 numpy arrays; these wrappers add the
shape checks and the closed-form 1-D least squares used by range search.
"""

import numpy as np

from .errors import DegenerateRangeError, ShapeError

DEGENERATE_VARIANCE = 1e-12


def as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def matmul(a, b):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def outer(u, v):
    return np.outer(np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64))


def l2_norm(v):
    return float(np.sqrt(np.sum(np.square(np.asarray(v, dtype=np.float64)))))


def fit_line(xs, ys):
    """Ordinary least squares fit of ``ys ~ slope * xs + intercept``.

    Raises DegenerateRangeError when the population variance of ``xs`` is
    below 1e-12, since the slope is then undetermined.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ShapeError(f"xs {xs.shape} and ys {ys.shape} must be equal-length 1-D arrays")
    if xs.size < 2:
        raise DegenerateRangeError(f"need at least 2 points, got {xs.size}")
    mx = xs.mean()
    my = ys.mean()
    dx = xs - mx
    var = np.dot(dx, dx) / xs.size
    if var < DEGENERATE_VARIANCE:
        raise DegenerateRangeError(f"x variance {var:.3g} too small")
    slope = np.dot(dx, ys - my) / xs.size / var
    return float(slope), float(my - slope * mx)

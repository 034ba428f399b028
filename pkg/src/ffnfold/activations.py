"""Reference activation functions."""

import enum

import numpy as np
from scipy.special import erf, expit

_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


class ActivationKind(str, enum.Enum):
    RELU = "relu"
    GELU = "gelu"
    GELU_TANH = "gelu_tanh"
    SILU = "silu"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown activation {value!r}; expected one of "
                             f"{[k.value for k in cls]}") from None


def evaluate(kind, z):
    """Apply activation ``kind`` elementwise. Scalars in, float out."""
    kind = ActivationKind.parse(kind)
    arr = np.asarray(z, dtype=np.float64)
    if kind is ActivationKind.RELU:
        out = np.maximum(arr, 0.0)
    elif kind is ActivationKind.GELU:
        out = 0.5 * arr * (1.0 + erf(arr / np.sqrt(2.0)))
    elif kind is ActivationKind.GELU_TANH:
        out = 0.5 * arr * (1.0 + np.tanh(_SQRT_2_OVER_PI * (arr + 0.044715 * arr ** 3)))
    else:
        out = arr * expit(arr)
    return float(out) if out.ndim == 0 else out


def derivative(kind, z, eps=1e-6):
    """Central-difference slope, used for the tangent fallback on degenerate ranges."""
    z = np.asarray(z, dtype=np.float64)
    return (evaluate(kind, z + eps) - evaluate(kind, z - eps)) / (2 * eps)


# rough per-element FLOP cost, for runtime accounting only
FLOP_COST = {
    ActivationKind.RELU: 1,
    ActivationKind.GELU: 8,
    ActivationKind.GELU_TANH: 10,
    ActivationKind.SILU: 5,
}

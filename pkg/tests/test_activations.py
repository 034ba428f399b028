import mpmath
import numpy as np
import pytest

from ffnfold.activations import ActivationKind, evaluate

ALL_KINDS = list(ActivationKind)


def test_relu_negative():
    assert evaluate("relu", -2.5) == 0.0


def test_gelu_origin():
    assert evaluate("gelu", 0.0) == 0.0


@pytest.mark.parametrize("z", [-5, -1, 0, 1, 5])
def test_silu_against_high_precision(z):
    mpmath.mp.dps = 50
    expected = float(mpmath.mpf(z) / (1 + mpmath.exp(-mpmath.mpf(z))))
    assert evaluate("silu", z) == pytest.approx(expected, rel=1e-14, abs=1e-300)


@pytest.mark.parametrize("z", [-4, -1, 0.5, 3])
def test_gelu_against_high_precision(z):
    mpmath.mp.dps = 50
    zz = mpmath.mpf(z)
    expected = float(zz / 2 * (1 + mpmath.erf(zz / mpmath.sqrt(2))))
    assert evaluate("gelu", z) == pytest.approx(expected, rel=1e-13, abs=1e-300)


def test_silu_large_input_tail():
    z = 30.0
    assert evaluate("silu", z) == pytest.approx(z - z * np.exp(-z), rel=1e-15)


def test_gelu_variants_close():
    z = np.arange(-5, 5 + 1e-9, 1e-3)
    assert np.max(np.abs(evaluate("gelu", z) - evaluate("gelu_tanh", z))) <= 5e-3


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_asymptotes(kind):
    assert abs(evaluate(kind, -20.0)) <= 1e-6
    assert abs(evaluate(kind, 20.0) / 20.0 - 1) <= 1e-6


def test_relu_is_two_lines(rng):
    z = rng.standard_normal(1000) * 10
    z = z[z != 0]
    out = evaluate("relu", z)
    slope = np.where(z > 0, 1.0, 0.0)
    np.testing.assert_array_equal(out, slope * z)


def test_parse_names():
    assert ActivationKind.parse("GELU_TANH") is ActivationKind.GELU_TANH
    with pytest.raises(ValueError):
        ActivationKind.parse("elu")


def test_array_shape_preserved(rng):
    z = rng.standard_normal((3, 4))
    for kind in ALL_KINDS:
        assert evaluate(kind, z).shape == (3, 4)

import numpy as np
import pytest

from ffnfold.model import FfnLayer
from ffnfold.range_search import NeuronApprox

# the two-neuron example network: W1 columns (3,-1) and (1,2), W2 rows (-1,0) and (1,1)
EXAMPLE_W1 = np.array([[3.0, 1.0], [-1.0, 2.0]])
EXAMPLE_W2 = np.array([[-1.0, 0.0], [1.0, 1.0]])


@pytest.fixture
def example_layer():
    return FfnLayer(EXAMPLE_W1, np.zeros(2), "gelu", EXAMPLE_W2, np.zeros(2))


@pytest.fixture
def example_approx():
    return (NeuronApprox(-1.5, 0.12, 0.25, 0.1), NeuronApprox(-3.5, -0.1, 0.1, 0.2))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_layer(rng, d, h, act="gelu", bias=0.1):
    return FfnLayer(rng.standard_normal((d, h)) / np.sqrt(d), bias * rng.standard_normal(h), act,
                    rng.standard_normal((h, d)) / np.sqrt(h), bias * rng.standard_normal(d))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

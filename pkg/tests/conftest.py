import numpy as np
import pytest

from junctionsde import CoefficientField, Constant, LinearDecay, SimConfig, VertexWeights


def bm_field(edges=3, T=1.0):
    return CoefficientField.uniform(Constant(0.0), Constant(1.0), edges, c=1.0, bound_b=1.0,
                                    bound_sigma=1.5, T=T)


@pytest.fixture
def alpha3():
    return VertexWeights((0.2, 0.3, 0.5))


@pytest.fixture
def reflected_bm(alpha3):
    return bm_field(), alpha3


@pytest.fixture
def decay_cfg():
    # sigma = 0, b = -1 from 0.5: hits near 0.5, 0.6, ..., 0.9
    field = CoefficientField.uniform(Constant(-1.0), Constant(0.0), 1, c=1e-9, bound_b=2.0,
                                     bound_sigma=1.0, T=0.95)
    return SimConfig(field, VertexWeights((1.0,)), x0=0.5, delta=0.1, h=1e-4, T=0.95)


@pytest.fixture
def mixed_field():
    return CoefficientField((Constant(0.5), LinearDecay(1.0), Constant(-0.3)),
                            (Constant(1.0), Constant(0.8), Constant(1.2)),
                            c=0.5, bound_b=2.0, bound_sigma=1.5, T=1.0)


def grid(n=101, T=1.0):
    return np.linspace(0.0, T, n)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

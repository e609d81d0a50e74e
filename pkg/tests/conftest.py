import numpy as np
import pytest

from speedkaf.kernels import KernelConfig
from speedkaf.timeseries import MackeyGlassConfig, add_noise, generate_mg, make_dataset, standardize


@pytest.fixture(scope="session")
def mg_series():
    """Clean Mackey-Glass series long enough for a 2000/200/200 split."""
    return generate_mg(MackeyGlassConfig(length=3000))


@pytest.fixture(scope="session")
def mg_dataset(mg_series):
    z, _ = standardize(add_noise(mg_series, 0.02, seed=3))
    return make_dataset(z, d=7, seed=3)


@pytest.fixture(scope="session")
def mg_points(mg_dataset):
    return mg_dataset.train_inputs


@pytest.fixture
def kernel():
    return KernelConfig(1.0)


#: one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])

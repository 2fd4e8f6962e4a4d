import numpy as np
import pytest

from deepicmgp.benchfns import evaluate, spec
from deepicmgp.data import Dataset
from deepicmgp.doe import maximin_lhd, rescale
from deepicmgp.sampler import ModelSpec, SamplerConfig, run_chain


def random_spd(rng, n, floor=0.5):
    A = rng.standard_normal((n, n))
    return A @ A.T + floor * np.eye(n)


def bench_data(name, n, seed=0):
    s = spec(name)
    x = rescale(maximin_lhd(n, s.d, seed=seed), s.lower, s.upper)
    return Dataset.from_arrays(x, evaluate(name, x), bounds=s.bounds)


@pytest.fixture(scope="session")
def forrester_data():
    return bench_data("forrester", 9)


@pytest.fixture(scope="session")
def short_config():
    return SamplerConfig(iterations=300, burn_in=100, thinning=2, seed=11)


@pytest.fixture(scope="session")
def forrester_chain(forrester_data, short_config):
    return run_chain(forrester_data, short_config)


@pytest.fixture(scope="session")
def forrester_shallow_chain(forrester_data, short_config):
    return run_chain(forrester_data, short_config, ModelSpec(layers=1))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

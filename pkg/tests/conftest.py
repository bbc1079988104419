import numpy as np
import pytest

from pagegnn import synthetic
from pagegnn.config import ModelConfig
from pagegnn.data import Dataset

ACCEPTANCE_RESULTS = {}


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_config():
    return ModelConfig(seq_len=16, text_dim=6, unit_dim=3, max_units=6, num_subscripts=8,
                       graph_dim=5, gnn_layers=2, dropout=0.0, batch_size=4, epochs=3)


@pytest.fixture(scope="session")
def small_corpus():
    return Dataset(synthetic.separable_corpus(6, seed=1))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}  {detail}")

import numpy as np
import pytest
from hypothesis import settings

from critgraph.exploration import ClockRealization, ExplorationResult
from critgraph.weights import WeightSequence

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_clocks(J, Ekeys=None, Ehatkeys=None, lam=0.0):
    """Hand-built clock realization; unspecified keys follow label order."""
    J = np.asarray(J, dtype=np.float64)
    n = J.size
    ramp = np.arange(1, n + 1, dtype=np.float64)
    E = ramp if Ekeys is None else np.asarray(Ekeys, dtype=np.float64)
    Eh = ramp if Ehatkeys is None else np.asarray(Ehatkeys, dtype=np.float64)
    return ClockRealization(J, E, Eh, lam)


def make_result(blocks, w):
    """ExplorationResult from a list of vertex blocks in discovery order (root first)."""
    w = w if isinstance(w, WeightSequence) else WeightSequence(w)
    order = np.concatenate([np.asarray(b, dtype=np.int64) for b in blocks])
    sizes = np.array([len(b) for b in blocks])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    weights = np.array([w.w[list(b)].sum() for b in blocks])
    labels = np.empty(w.n, dtype=np.int64)
    for k, b in enumerate(blocks):
        labels[list(b)] = k
    return ExplorationResult(
        "size_biased", w.n, np.array([b[0] for b in blocks]), np.concatenate([[0.0], np.cumsum(weights)]),
        sizes, weights, labels, order, offsets, np.array([min(b) for b in blocks]), offsets.copy(),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

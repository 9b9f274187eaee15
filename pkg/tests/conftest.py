import numpy as np
import pytest

from orars.dataset import Dataset, Utterance


def random_utterance(rng, T, C, uid="u", score=None, zero_prob=False):
    P = rng.dirichlet(np.ones(C), size=T)
    if zero_prob:
        P[0, 0] = 0.0
        P[0] /= P[0].sum()
    with np.errstate(divide="ignore"):
        logp = np.log(P)
    ali = rng.integers(C, size=T)
    return Utterance(uid, logp, ali, score)


def random_dataset(rng, n, C, T_max=20, scored=True):
    utts = []
    for i in range(n):
        T = int(rng.integers(1, T_max + 1))
        score = float(np.round(rng.uniform(0, 5) * 4) / 4) if scored else None
        utts.append(random_utterance(rng, T, C, f"u{i}", score))
    return Dataset(tuple(utts), C)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_utterance():
    """T=2, C=3, both frames aligned to phoneme 0."""
    logp = np.log([[0.7, 0.2, 0.1], [0.6, 0.3, 0.1]])
    return Utterance("toy", logp, [0, 0], 3.0)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """``acceptance(criterion, ok, detail)`` records a PASS/FAIL line and asserts ``ok``."""
    def check(criterion, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

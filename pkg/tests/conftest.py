import numpy as np
import pytest
from hypothesis import settings

from drwgeom.checks import bundled_graphs, random_corpus
from drwgeom.graph import LabeledGraph

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")


def path_graph(n, labels, phi=None, w0=None):
    edges = np.array([(i, i + 1) for i in range(n - 1)])
    phi = np.zeros((n - 1, 1)) if phi is None else np.asarray(phi, dtype=float).reshape(n - 1, -1)
    w0 = np.ones(n - 1) if w0 is None else w0
    return LabeledGraph(n, edges, w0, phi, labels)


@pytest.fixture(scope="session")
def bundled():
    return bundled_graphs()


@pytest.fixture
def path3():
    return path_graph(3, {0: 1, 2: 1})


@pytest.fixture
def path4():
    return path_graph(4, {0: 1, 3: 1}, phi=[0.0, 1.0, 0.0])


@pytest.fixture(scope="session")
def corpus():
    return random_corpus(count=20, seed=2024)


@pytest.fixture(scope="session")
def small_corpus():
    return random_corpus(count=5, seed=11)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from graphbiharmonic.graph import boundary_of, make_graph  # noqa: E402
from graphbiharmonic.operators import assemble_form  # noqa: E402

DATA = Path(__file__).parent / "data"

_acceptance_results = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and rep.when == "call":
        _acceptance_results.append((marker.args[0], rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok in _acceptance_results:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}")


def path_graph(k, mu=None, w=None):
    names = "abcdefghijklmnopqrstuvwxyz"[:k]
    mu = mu or {}
    return make_graph(
        {x: mu.get(x, 1.0) for x in names},
        [(names[i], names[i + 1], (w or {}).get(i, 1.0)) for i in range(k - 1)],
    )


def star_graph(d=3):
    leaves = [f"y{i}" for i in range(1, d + 1)]
    return make_graph({"x": 1.0, **{y: 1.0 for y in leaves}}, [("x", y, 1.0) for y in leaves])


def random_instance(rng, n_total=None, n_interior=None):
    """Connected random graph with random measures, weights and a proper interior."""
    n_total = n_total or int(rng.integers(3, 31))
    names = [f"v{i:02d}" for i in range(n_total)]
    edges = {}
    for i in range(1, n_total):
        j = int(rng.integers(0, i))
        edges[(names[j], names[i])] = rng.uniform(0.1, 3.0)
    for _ in range(int(rng.integers(0, n_total))):
        i, j = sorted(rng.choice(n_total, 2, replace=False))
        edges.setdefault((names[i], names[j]), rng.uniform(0.1, 3.0))
    mu = {x: rng.uniform(0.5, 2.0) for x in names}
    g = make_graph(mu, [(a, b, w) for (a, b), w in edges.items()])
    k = n_interior or int(rng.integers(1, n_total))
    interior = list(rng.choice(names, k, replace=False))
    d = boundary_of(g, interior)
    return g, d, assemble_form(g, d)


@pytest.fixture
def p3():
    g = path_graph(3)
    d = boundary_of(g, ["b"])
    return g, d, assemble_form(g, d)


@pytest.fixture
def p5():
    g = path_graph(5)
    d = boundary_of(g, ["b", "c", "d"])
    return g, d, assemble_form(g, d)


@pytest.fixture
def star3():
    g = star_graph(3)
    d = boundary_of(g, ["x"])
    return g, d, assemble_form(g, d)


@pytest.fixture
def random_forms():
    rng = np.random.default_rng(20240611)
    return [random_instance(rng) for _ in range(8)]

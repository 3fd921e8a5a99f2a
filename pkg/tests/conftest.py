import itertools

import pytest

from coopnet.generators import GeneratorSpec, generate
from coopnet.graph import NetworkGraph


def complete_graph(n):
    return NetworkGraph.from_edges(n, itertools.combinations(range(n), 2))


@pytest.fixture
def k2():
    return complete_graph(2)


@pytest.fixture
def k3():
    return complete_graph(3)


@pytest.fixture
def planted_5x2():
    return generate(GeneratorSpec("planted_cliques", cliques=2, clique_size=5, bridges=1))


@pytest.fixture
def planted_4x2():
    return generate(GeneratorSpec("planted_cliques", cliques=2, clique_size=4, bridges=1))


# One PASS/FAIL line per acceptance criterion at the end of the run.
_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    ok = call.excinfo is None
    prev = _criteria.get(number, (title, True))
    _criteria[number] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {title}")

import sys

import pytest

from propmeasure import INF, NEG_INF, build_instance
from propmeasure.core import LinearConstraint


def _c(terms, lhs=NEG_INF, rhs=INF):
    return LinearConstraint.from_terms(terms, lhs, rhs)


def make_fixtures():
    return {
        "FIX1": build_instance([(0, 3, False), (0, 10, False)],
                               [_c([(0, 1), (1, 1)], 1, 4)], name="FIX1"),
        "FIX2": build_instance([(0, INF, False), (1, INF, False)],
                               [_c([(0, 1), (1, 1)], rhs=5)], name="FIX2"),
        "FIX3": build_instance([(0, INF, False), (0, INF, False)],
                               [_c([(0, 1), (1, -1)], rhs=3), _c([(1, 1)], rhs=6), _c([(1, 1)], rhs=4)],
                               name="FIX3"),
        "FIX4": build_instance([(0, 10, True)], [_c([(0, 2)], rhs=7)], name="FIX4"),
        "FIX5": build_instance([(0, 3, False)], [_c([(0, 1)], lhs=5)], name="FIX5"),
    }


FIXTURES = make_fixtures()


@pytest.fixture
def fix():
    return make_fixtures()


@pytest.fixture
def fixture_files(tmp_path):
    from propmeasure import write_instance
    d = tmp_path / "inst"
    d.mkdir()
    for name, inst in make_fixtures().items():
        write_instance(inst, d / f"{name}.txt")
    return d


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])

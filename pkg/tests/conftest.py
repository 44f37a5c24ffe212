import os
import sys

import pytest
from hypothesis import settings

settings.register_profile("repeatable", derandomize=True, deadline=None)
settings.load_profile("repeatable")

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session", autouse=True)
def _cache_dir(tmp_path_factory):
    # isolate the Hubbard-table cache per session unless the caller chose one
    if "OPTOLATTICE_CACHE_DIR" not in os.environ:
        os.environ["OPTOLATTICE_CACHE_DIR"] = str(tmp_path_factory.mktemp("hubbard_cache"))
    yield


@pytest.fixture(scope="session")
def nominal():
    from optolattice.params_units import nominal_params
    return nominal_params()


@pytest.fixture(scope="session")
def curve(_cache_dir):
    from optolattice import lattice_bands as lb
    return lb.hubbard_curve()


@pytest.fixture(scope="session")
def slow_record(curve):
    from optolattice import pipeline as pl
    return pl.run(pl.Scenario.nominal(), curve)


@pytest.fixture(scope="session")
def fast_record(curve):
    from optolattice import pipeline as pl
    return pl.run(pl.Scenario.nominal(fast=True), curve)


@pytest.fixture
def report():
    def add(number, ok, detail):
        ACCEPTANCE_LINES.append((number, f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"))
    return add


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(line)

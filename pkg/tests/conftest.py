import os

import numpy as np
import pytest

from radixplan.costs import fixture_path, load_cost_table

_ACCEPTANCE = []


def random_signal(rng, n, batch=None):
    shape = (n,) if batch is None else (batch, n)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)).astype(np.complex64)


@pytest.fixture
def rng():
    return np.random.default_rng(int(os.environ.get("RADIXPLAN_SEED", "2015")))


@pytest.fixture(scope="session")
def ivybridge():
    return load_cost_table(fixture_path("ivybridge_1024.csv"))


@pytest.fixture(scope="session")
def haswell():
    return load_cost_table(fixture_path("haswell_1024.csv"))


@pytest.fixture
def criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def record(name, ok, detail=""):
        _ACCEPTANCE.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else ""))

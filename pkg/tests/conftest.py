import warnings

import pytest

from specdraft import cli_io as cio
from specdraft.draft_optimizer import sweep_grid


@pytest.fixture(scope="session")
def alpha_table():
    return cio.load_alpha_table(cio.data_path("tables_1_2.csv"))


@pytest.fixture(scope="session")
def plane():
    return cio.load_plane()


@pytest.fixture(scope="session")
def chinchilla():
    return cio.load_chinchilla()


@pytest.fixture(scope="session")
def mesh():
    return cio.load_grid()


@pytest.fixture(scope="session")
def sweep_records(mesh, plane, chinchilla):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        return sweep_grid(mesh, plane, chinchilla, chinchilla)


ACCEPTANCE_LINES = {}


@pytest.fixture
def verdict():
    """Record one pass/fail line per acceptance criterion."""
    def record(k, ok, detail):
        ACCEPTANCE_LINES[k] = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

import numpy as np
import pytest

from fastsecagg import make_params


@pytest.fixture(scope="session")
def fig4():
    """5x6 grid over GF(31): one zero row, one zero column, four secrets."""
    return make_params(5, 6, alpha="1/2", beta="3/10", delta0="1/5", delta1="1/6")


@pytest.fixture(scope="session")
def p130():
    return make_params(N=130, alpha="1/2", beta="1/4", delta0="1/10")


@pytest.fixture(scope="session")
def row130():
    return make_params(N=130, alpha="1/2", beta="1/2", delta0="1/10", variant="row")


@pytest.fixture(scope="session")
def tiny():
    """GF(13), 3x4 grid, one secret and five masks: small enough to enumerate."""
    return make_params(3, 4, q=13, alpha="1/2", beta="1/3", delta0="1/3", delta1="1/4")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def criterion(request):
    """``report(n, ok, detail)`` prints and records one acceptance line."""
    results = request.config.stash[_RESULTS]

    def report(n: int, ok: bool, detail: str) -> None:
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        results[n] = line
        print(line)

    return report


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])

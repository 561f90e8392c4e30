import numpy as np
import pytest

from opsplit.spectral import Grid


@pytest.fixture
def grid32():
    return Grid(32)


@pytest.fixture
def grid256():
    return Grid(256)


@pytest.fixture
def two_mode(grid256):
    return grid256.field(lambda x: 0.5 * np.sin(x) + 0.25 * np.cos(2 * x))


@pytest.fixture
def sine(grid256):
    return grid256.field(lambda x: 0.5 * np.sin(x))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one ``criterion N: PASS|FAIL`` line per acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def log(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        lines.append(line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

import numpy as np
import pytest

from sfplr.fda import FunctionalSample, Grid
from sfplr.simulation import gen_scenario


@pytest.fixture
def grid():
    return Grid.uniform()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_sample(rng):
    g = Grid.uniform(40)
    return FunctionalSample(g, rng.normal(size=(15, 40)).cumsum(axis=1) / np.sqrt(40))


@pytest.fixture(scope="session")
def s1_null():
    return gen_scenario(1, 0, 100, rng_seed=5)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Append a one-line verdict for the acceptance summary."""

    def _record(number: int, passed: bool | None, detail: str):
        verdict = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"criterion {number:>2}: {verdict}  {detail}")
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)

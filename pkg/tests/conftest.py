import math
import time

import numpy as np
import pytest

from sparse_dfrc.arrays import ArrayGeometry, ReceiveArray
from sparse_dfrc.dictionary import (build_radar_dictionary_by_enumeration,
                                    build_regularized_dictionary, greedy_maxmin_dictionary,
                                    permute_augment)
from sparse_dfrc.pattern import PatternGrid
from sparse_dfrc.simulator import worker_count

SIDELOBE_DB = -20.0


@pytest.fixture(scope="session")
def geo16():
    return ArrayGeometry(16, 0.25)


@pytest.fixture(scope="session")
def rx10():
    return ReceiveArray.ula(10, 0.5)


@pytest.fixture(scope="session")
def grid16():
    return PatternGrid.build(-10, 10, 0.5, 8.0)


@pytest.fixture(scope="session")
def d_comm():
    return greedy_maxmin_dictionary(16, 8, 256)


@pytest.fixture(scope="session")
def d_hybrid(d_comm):
    return permute_augment(d_comm)


@pytest.fixture(scope="session")
def d_reg():
    return build_regularized_dictionary(8)


@pytest.fixture(scope="session")
def d_radar_timed(geo16, rx10, grid16):
    """Full-scale ripple-ranked dictionary and its build time (about 90 s on one core)."""
    t0 = time.perf_counter()
    d = build_radar_dictionary_by_enumeration(
        geo16, 8, 256, rx10, grid16, 10 ** (SIDELOBE_DB / 20), workers=worker_count())
    return d, time.perf_counter() - t0


@pytest.fixture(scope="session")
def d_radar(d_radar_timed):
    return d_radar_timed[0]


# toy radar scale shared by the oracle tests
TOY_GEO = ArrayGeometry(6, 0.25)
TOY_RX = ReceiveArray.ula(4, 0.5)
TOY_GRID = PatternGrid.build(-10, 10, 2.0, 20.0)
TOY_EPS = 10 ** (-15 / 20)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def theta_spread(geometry):
    return math.asin(1 / (geometry.M * geometry.spacing))


# acceptance reporting: one line per criterion, repeated in the terminal summary
ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}


@pytest.fixture
def record(request, capsys):
    def _record(number: int, title: str, ok: bool, detail: str) -> None:
        ACCEPTANCE[number] = (ok, title, detail)
        with capsys.disabled():
            print(f"\n[acceptance {number}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
    return _record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and rep.when == "call" and rep.failed:
        number, title = marker.args
        if number not in ACCEPTANCE:
            ACCEPTANCE[number] = (False, title, f"raised {call.excinfo.typename}")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"[acceptance {number}] {'PASS' if ok else 'FAIL'} {title}: {detail}")

import math

import pytest

from agingavs.aging import AgingParams, HciParams, TrapSpecies, arrhenius
from agingavs.avs import simulate
from agingavs.cli import delay_model, engine_for
from agingavs.config import load

T0 = 298.15


def trap(mag=0.03, n=0.15, r=0.3, lam=1e3, B_c=4.0, B_e=3.0, beta=0.3, Ea=0.1, ref=1.0e8):
    """Trap species sized by its shift ``mag`` after ``ref`` seconds at 0.9 V."""
    a = mag / (math.exp(B_c * 0.9) * arrhenius(Ea, T0) * ref**n)
    return TrapSpecies(a, B_c, Ea, n, lam / arrhenius(Ea, T0), B_e, Ea, beta, r)


def hci(mag=0.02, B=3.0, n=0.3, ref=1.0e4):
    return HciParams(mag / (math.exp(B * 0.9) * arrhenius(0.1, T0) * ref**n), B, 0.1, n)


def small_params(**kw) -> AgingParams:
    return AgingParams((trap(**kw), trap(mag=0.04, n=0.2, r=0.6, lam=10.0)), hci(), hci(0.03, 5.0))


@pytest.fixture(scope="session")
def rc():
    return load()


@pytest.fixture(scope="session")
def model(rc):
    return delay_model(rc)


@pytest.fixture(scope="session")
def engine(rc):
    return engine_for(rc)


@pytest.fixture(scope="session")
def baseline(rc, model, engine):
    return simulate(rc.avs, rc.aging, rc.stats, model, engine)


# ---- acceptance summary ------------------------------------------------------

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def verdict(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_RESULTS[number] = (ok, detail)
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agingavs.aging import (
    RECOVERY,
    STRESS,
    AgingDomainError,
    DeviceAgingState,
    HciParams,
    PowerLaw,
    TrapSpecies,
    apply_stress_segment,
    arrhenius,
    bti_detrapping,
    bti_trapping,
    continue_law,
    equivalent_time,
    hci_law,
)
from conftest import T0, small_params, trap

SP = trap()


def test_laws_vanish_at_zero_time():
    assert bti_trapping(SP, 0.9, T0, 0.0) == 0.0
    assert hci_law(HciParams(1e-3, 3.0, 0.1, 0.3), 0.9, T0, 0.0) == 0.0
    assert bti_detrapping(SP, 0.05, 0.0, T0, 0.0) == 0.05


@given(st.floats(1e-6, 1e9))
def test_doubling_time_scales_by_two_to_the_n(t):
    ratio = bti_trapping(SP, 0.9, T0, 2 * t) / bti_trapping(SP, 0.9, T0, t)
    assert ratio == pytest.approx(2**SP.n_c, rel=1e-12)


def test_closed_form_and_arrhenius():
    t = 1e5
    expect = SP.A_c * math.exp(SP.B_c * 0.9) * math.exp(-SP.E_ac / (8.617333262e-5 * T0)) * t**SP.n_c
    assert bti_trapping(SP, 0.9, T0, t) == pytest.approx(expect, rel=1e-14)
    assert arrhenius(0.0, T0) == 1.0


@given(st.floats(1e-3, 1e8), st.floats(0.1, 1.2), st.floats(1.01, 3.0))
def test_trapping_increases_in_time_and_voltage(t, v, k):
    assert bti_trapping(SP, v, T0, t * k) > bti_trapping(SP, v, T0, t)
    assert bti_trapping(SP, v * k, T0, t) > bti_trapping(SP, v, T0, t)


@given(st.floats(0.0, 1e6), st.floats(0.0, 1e6), st.floats(0.0, 1.0))
def test_detrapping_monotone_and_bounded(t1, dt, v):
    a = bti_detrapping(SP, 0.05, v, T0, t1)
    b = bti_detrapping(SP, 0.05, v, T0, t1 + dt)
    assert b <= a + 1e-18
    assert b >= SP.r_perm * 0.05 - 1e-18


def test_domain_errors():
    with pytest.raises(AgingDomainError):
        bti_trapping(SP, 0.9, T0, -1.0)
    with pytest.raises(AgingDomainError):
        bti_trapping(SP, 0.9, T0, float("nan"))
    with pytest.raises(AgingDomainError):
        bti_detrapping(SP, -0.1, 0.0, T0, 1.0)
    with pytest.raises(AgingDomainError):
        TrapSpecies(1, 1, 0.1, 0.2, 1, 1, 0.1, 0.3, 1.5)
    with pytest.raises(AgingDomainError):
        HciParams(1e-3, 3, 0.1, 1.0)


@given(st.floats(1e-3, 1e9), st.floats(0.3, 1.2))
def test_equivalent_time_round_trip(t, v):
    law = PowerLaw(SP)
    assert equivalent_time(law, law(v, T0, t), v, T0) == pytest.approx(t, rel=1e-8)


def test_equivalent_time_bisection_fallback():
    # a law without a closed-form inverse goes through the bracketed bisection
    def law(V, T, t):
        return 1e-3 * math.exp(3 * V) * t**0.2

    assert equivalent_time(law, law(0.9, T0, 3e7), 0.9, T0) == pytest.approx(3e7, rel=1e-8)


def test_continuation_at_higher_voltage_starts_from_equivalent_time():
    law = PowerLaw(SP)
    d1 = law(0.9, T0, 1e6)
    d2 = continue_law(law, d1, 1.0, T0, 1e6)
    t_eq = law.invert(d1, 1.0, T0)
    assert t_eq < 1e6
    assert d2 == pytest.approx(law(1.0, T0, t_eq + 1e6), rel=1e-14)
    assert law(0.9, T0, 2e6) < d2 < law(1.0, T0, 2e6)


P = small_params()


def test_zero_duration_is_identity():
    s = apply_stress_segment(DeviceAgingState.fresh(2), P, 0.9, 10.0)
    assert apply_stress_segment(s, P, 0.9, 0.0) is s
    assert apply_stress_segment(s, P, 0.0, 0.0, RECOVERY) is s


@given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6), st.integers(1, 6))
@settings(max_examples=50)
def test_stress_segments_are_a_semigroup(a, b, k):
    s0 = DeviceAgingState.fresh(2)
    one = apply_stress_segment(s0, P, 0.9, a + b)
    two = apply_stress_segment(apply_stress_segment(s0, P, 0.9, a), P, 0.9, b)
    assert abs(one.bti - two.bti) < 1e-9
    many = s0
    for _ in range(k):
        many = apply_stress_segment(many, P, 0.9, (a + b) / k)
    assert abs(one.bti - many.bti) < 1e-9


def test_recovery_reduces_shift_but_not_below_permanent():
    s = apply_stress_segment(DeviceAgingState.fresh(2), P, 0.9, 1.0)
    r = apply_stress_segment(s, P, 0.0, 1.0, RECOVERY)
    assert r.bti < s.bti
    for sp, before, after in zip(P.bti_traps, s.traps, r.traps):
        assert after.total >= sp.r_perm * before.total


@given(st.lists(st.tuples(st.sampled_from([STRESS, RECOVERY]), st.floats(0.0, 1.1), st.floats(0.0, 1e5)), max_size=12))
@settings(max_examples=60)
def test_state_stays_non_negative_and_permanent_never_drops(segments):
    s = DeviceAgingState.fresh(2)
    for mode, v, dt in segments:
        new = apply_stress_segment(s, P, v, dt, mode)
        for a, b in zip(s.traps, new.traps):
            assert b.perm >= a.perm and b.rec >= 0.0
        s = new


def test_bad_mode():
    with pytest.raises(ValueError):
        apply_stress_segment(DeviceAgingState.fresh(2), P, 0.9, 1.0, "sideways")

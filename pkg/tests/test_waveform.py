import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agingavs.aging import AgingDomainError, DeviceAgingState, HciParams
from agingavs.waveform import (
    AgingEngine,
    LevelChain,
    WorkloadStats,
    accumulate_hci,
    apply_cycle,
    base_waveform,
    brute_force_bti,
    extrapolate_bti,
    gamma_factor,
    hci_time,
    lift_waveform,
    linear_ramp,
    read_transition_csv,
    read_workload_trace,
)
from conftest import T0, small_params

STATS = WorkloadStats(0.5, 0.0075, 1.6e-9, 1e-10)
P = small_params()
HP = HciParams(1e-3, 3.0, 0.1, 0.3)


def test_base_waveform_durations():
    w = base_waveform(STATS, 0.9)
    assert w.period == pytest.approx(213.333e-9, rel=1e-5)
    assert w.t_stress == pytest.approx(106.667e-9, rel=1e-5)
    assert w.t_recovery == pytest.approx(106.667e-9, rel=1e-5)
    assert (w.v_stress, w.v_recovery) == (0.9, 0.0)
    assert base_waveform(WorkloadStats(1.0, 0.0075), 0.9).t_recovery == 0.0
    assert base_waveform(WorkloadStats(0.5, 1.0), 0.9).period == pytest.approx(1.6e-9)


def test_workload_validation():
    for bad in ((1.2, 0.1), (0.5, 0.0), (0.5, 1.5)):
        with pytest.raises(AgingDomainError):
            WorkloadStats(*bad)
    with pytest.raises(AgingDomainError):
        WorkloadStats(0.5, 0.01, 1e-9, 2e-9)


def test_lift_trivial_cases():
    w = base_waveform(STATS, 0.9)
    assert lift_waveform(w, 1, P) is w
    stress_only = base_waveform(WorkloadStats(1.0, 0.0075), 0.9)
    lifted = lift_waveform(stress_only, 10, P)
    assert lifted.v_stress == 0.9
    assert lifted.period == pytest.approx(10 * stress_only.period)
    assert lifted.cycles_represented == 10 and lifted.level == 1


def test_lifted_cycle_matches_32_cycles(rc):
    w = base_waveform(rc.stats, 0.9)
    lifted = lift_waveform(w, 32, rc.aging)
    truth = DeviceAgingState.fresh(2)
    for _ in range(32):
        truth = apply_cycle(truth, w, rc.aging)
    once = apply_cycle(DeviceAgingState.fresh(2), lifted, rc.aging)
    assert once.bti == pytest.approx(truth.bti, rel=1e-2)
    assert lifted.period == pytest.approx(32 * w.period)


def test_one_base_period_is_exact():
    w = base_waveform(STATS, 0.9)
    traj = extrapolate_bti(STATS, 0.9, P, None, w.period)
    assert traj[-1][1] == pytest.approx(brute_force_bti(STATS, 0.9, P, None, 1)[0], rel=1e-12)


def test_extrapolation_matches_brute_force_and_is_monotone():
    n = 3000
    w = base_waveform(STATS, 0.9)
    truth = brute_force_bti(STATS, 0.9, P, None, n)
    traj = extrapolate_bti(STATS, 0.9, P, None, n * w.period)
    assert traj[-1][1] == pytest.approx(truth[-1], rel=1e-2)
    chain = LevelChain(STATS, 0.9, P, 1e8)
    # sampled at the end of each walked period the shift never falls
    s, vals = DeviceAgingState.fresh(2), []
    t = 0.0
    for dt in np.geomspace(w.period, 1e7, 40):
        dt = max(round(dt / w.period), 1) * w.period
        s = chain.advance(s, dt, t)
        t += dt
        vals.append(s.bti)
    assert all(b >= a * (1 - 1e-3) for a, b in zip(vals, vals[1:]))


def test_lifting_order_insensitive():
    w = base_waveform(STATS, 0.9)
    a = lift_waveform(lift_waveform(w, 4, P), 5, P)
    b = lift_waveform(lift_waveform(w, 5, P), 4, P)
    sa = apply_cycle(DeviceAgingState.fresh(2), a, P)
    sb = apply_cycle(DeviceAgingState.fresh(2), b, P)
    assert sa.bti == pytest.approx(sb.bti, rel=1e-2)


def test_level_chain_covers_horizon():
    chain = LevelChain(STATS, 0.9, P, 3.1536e8)
    assert chain.levels[-1].period >= 3.1536e8
    assert chain.levels[-2].period < 3.1536e8
    with pytest.raises(ValueError):
        LevelChain(STATS, 0.9, P, 1.0, N=1)


def test_recovery_reduces_ten_year_bti():
    eng = AgingEngine(P, STATS, 3.1536e8)
    s0 = eng.advance(_fresh(), 0.9, 3.1536e8, 0.0, recovery=True)
    s1 = eng.advance(_fresh(), 0.9, 3.1536e8, 0.0, recovery=False)
    assert s0.pmos.bti < s1.pmos.bti


def _fresh():
    from agingavs.aging import CircuitAgingState

    return CircuitAgingState.fresh(P)


# ---- gamma and HCI ----------------------------------------------------------


def test_gamma_constant_waveform_is_one():
    assert gamma_factor(lambda t: 0.9, 1000, 0.9, HP, T0, 1e-10) == pytest.approx(1.0, rel=1e-12)
    assert gamma_factor((np.array([0.0, 1e-10]), np.array([0.9, 0.9])), 1, 0.9, HP, T0) == pytest.approx(1.0)


def test_gamma_ramp_refines_and_stays_in_unit_interval():
    g3 = gamma_factor(linear_ramp(0.9, 1e-10), 1000, 0.9, HP, T0, 1e-10)
    g5 = gamma_factor(linear_ramp(0.9, 1e-10), 100000, 0.9, HP, T0, 1e-10)
    assert 0.0 < g5 < 1.0
    assert g3 == pytest.approx(g5, rel=1e-3)


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=20))
@settings(max_examples=40)
def test_gamma_bounded_for_any_waveform_below_vdd(vs):
    t = np.linspace(0, 1e-10, len(vs))
    g = gamma_factor((t, 0.9 * np.array(vs)), 200, 0.9, HP, T0)
    assert 0.0 <= g <= 1.0


def test_gamma_rejects_bad_samples():
    with pytest.raises(AgingDomainError):
        gamma_factor((np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.5, 0.9])), 10, 0.9, HP, T0)
    with pytest.raises(AgingDomainError):
        gamma_factor(lambda t: 1.2, 10, 0.9, HP, T0, 1e-10)


def test_hci_time_example():
    assert hci_time(0.5, STATS, 3.156e8) == pytest.approx(7.40e4, rel=2e-3)


@given(st.floats(1.0, 1e8), st.floats(0.05, 0.95))
def test_hci_accumulation_additive(total, frac):
    s0 = DeviceAgingState()
    one = accumulate_hci(0.5, STATS, total, 0.9, HP, T0, s0)
    a = accumulate_hci(0.5, STATS, total * frac, 0.9, HP, T0, s0)
    two = accumulate_hci(0.5, STATS, total * (1 - frac), 0.9, HP, T0, a)
    assert abs(one.hci - two.hci) < 1e-9
    assert accumulate_hci(0.5, STATS, 0.0, 0.9, HP, T0, a) is a


def test_hci_history_below_constant_high_voltage():
    y5 = 5 * 3.1536e7
    hist = accumulate_hci(0.5, STATS, y5, 0.9, HP, T0, DeviceAgingState())
    hist = accumulate_hci(0.5, STATS, y5, 1.02, HP, T0, hist)
    high = accumulate_hci(0.5, STATS, 2 * y5, 1.02, HP, T0, DeviceAgingState())
    assert hist.hci < high.hci


# ---- files ------------------------------------------------------------------


def test_workload_trace_is_averaged(tmp_path):
    p = tmp_path / "trace.csv"
    p.write_text("cell,duty_factor,toggle_rate\na,0.4,0.006\nb,0.6,0.009\n")
    s = read_workload_trace(p)
    assert s.duty_factor == pytest.approx(0.5) and s.toggle_rate == pytest.approx(0.0075)
    p.write_text("cell,duty\n")
    with pytest.raises(AgingDomainError):
        read_workload_trace(p)


def test_transition_csv(tmp_path):
    p = tmp_path / "tr.csv"
    p.write_text("t_seconds,v_volts\n0,0\n5e-11,0.6\n1e-10,0.9\n")
    t, v = read_transition_csv(p)
    assert t.tolist() == [0.0, 5e-11, 1e-10] and v[-1] == 0.9
    eng = AgingEngine(P, STATS, 1e8, transition=(t, v))
    # the sampled shape is rescaled to whatever supply it is used at
    assert 0 < eng.gamma(1.0, "p") < 1

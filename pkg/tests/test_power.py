import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from agingavs.aging import CircuitAgingState
from agingavs.avs import AvsTrajectory, StepEvent
from agingavs.policy import OPERATORS, PolicyError
from agingavs.power import PowerModel, lifetime_power, savings_report

PM = PowerModel()


def traj(v_init=0.90, steps=(), horizon=10.0):
    events = [StepEvent(t, v0, v1, 1.6, 1.5) for t, v0, v1 in steps]
    return AvsTrajectory([], events, CircuitAgingState(), v_init, horizon, 1.6e-9)


@pytest.mark.parametrize("v_eff,p", [(0.99, 1.03), (0.90, 0.85), (0.92, 0.88), (0.97, 1.00), (0.95, 0.95)])
def test_table_power_values_within_rounding(v_eff, p):
    # both columns are printed to two decimals: some V_eff that rounds to the
    # printed value must give a power that rounds to the printed power
    vs = [v_eff - 0.005 + 0.0001 * i for i in range(101)]
    assert any(abs(lifetime_power(PM, v) - p) <= 0.005 for v in vs)


def test_quadratic_law_points():
    assert lifetime_power(PM, 0.90) == pytest.approx(0.85)
    assert lifetime_power(PM, 0.99) == pytest.approx(0.85 * 1.21)
    assert lifetime_power(PowerModel(exponent=1.0), 0.99) == pytest.approx(0.85 * 1.1)


def test_rms_of_two_equal_epochs():
    t = traj(steps=[(5.0, 0.90, 1.02)])
    assert t.v_eff == pytest.approx(math.sqrt((0.90**2 + 1.02**2) / 2))
    assert t.v_eff == pytest.approx(0.9619, abs=1e-4)


@given(st.lists(st.floats(0.0, 0.2), min_size=1, max_size=6))
def test_v_eff_within_trajectory_range(increments):
    v, steps = 0.90, []
    for i, dv in enumerate(increments):
        steps.append((float(i + 1), v, v + dv))
        v += dv
    t = traj(steps=steps, horizon=float(len(increments) + 1))
    assert 0.90 - 1e-12 <= t.v_eff <= v + 1e-12


@given(st.floats(0.5, 1.5), st.floats(0.5, 1.5))
def test_power_strictly_increasing(a, b):
    if a == b:
        return
    lo, hi = sorted((a, b))
    assert lifetime_power(PM, lo) < lifetime_power(PM, hi)
    leaky = PowerModel(leakage=0.3)
    assert lifetime_power(leaky, lo) < lifetime_power(leaky, hi)


def test_leakage_share_at_reference():
    assert lifetime_power(PowerModel(leakage=0.2), 0.90) == pytest.approx(0.85)
    # the leakage part scales linearly, the dynamic part quadratically
    assert lifetime_power(PowerModel(leakage=1e-12), 1.8) == pytest.approx(0.85 * 4, rel=1e-9)


@pytest.mark.parametrize("kw", [dict(p0=0.0), dict(exponent=-1.0), dict(v_ref=0.0), dict(leakage=1.0)])
def test_invalid_power_model(kw):
    with pytest.raises(ValueError):
        PowerModel(**kw)


def test_saving_definition_and_average():
    base = traj(steps=[(2.0, 0.90, 0.95), (5.0, 0.95, 1.02)])
    ops = {op: traj(steps=[(float(i + 1), 0.90, 0.90 + 0.01 * i)]) for i, op in enumerate(OPERATORS)}
    rep = savings_report(ops, base, PM)
    p_base = lifetime_power(PM, base.v_eff)
    for row in rep.rows:
        assert row.saving == pytest.approx(1.0 - row.p_avg / p_base, abs=1e-15)
    assert rep.average_saving == pytest.approx(sum(r.saving for r in rep.rows) / 9, abs=1e-12)


def test_identical_trajectories_save_nothing():
    base = traj(steps=[(3.0, 0.90, 0.95)])
    rep = savings_report({op: base for op in OPERATORS}, base, PM)
    assert all(r.saving == 0.0 for r in rep.rows)
    assert rep.average_saving == 0.0


def test_q_row_arithmetic():
    # Q at 0.90 V against a baseline drawing 1.03 W: 17.5%, reported as 17.0%
    saving = 1.0 - lifetime_power(PM, 0.90) / 1.03
    assert saving == pytest.approx(0.175, abs=1e-3)
    assert abs(saving - 0.170) <= 0.007


def test_missing_operator_rejected():
    base = traj()
    ops = {op: base for op in OPERATORS if op != "SV"}
    with pytest.raises(PolicyError, match="SV"):
        savings_report(ops, base, PM)


def test_report_formats():
    base = traj(steps=[(5.0, 0.90, 1.02)])
    rep = savings_report({op: traj() for op in OPERATORS}, base, PM)
    lines = rep.csv().splitlines()
    assert lines[0] == "component,v_final_v,dvth_p_mv,dvth_n_mv,v_eff_v,p_avg_w,saving_pct"
    assert len(lines) == 12 and lines[1].startswith("None,") and lines[-1].startswith("average,")
    text = rep.text()
    assert "QKT" in text and text.rstrip().endswith("%")

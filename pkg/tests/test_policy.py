import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agingavs.policy import (
    OPERATORS,
    PathPopulation,
    PolicyError,
    ResilienceProfile,
    ber_of_scale,
    build_policy,
    default_profiles,
    delay_max_for,
    format_population,
    format_profiles,
    generate_population,
    read_population,
    read_profiles,
    tolerable_ber,
)

T_CLK = 1.6e-9
GRID = (1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2)


# ---- ber_of_scale ---------------------------------------------------------------


def test_single_path_violation_ber():
    pop = PathPopulation((1.542e-9,), (0.007,), 32)
    assert ber_of_scale(pop, 1.05, T_CLK) == pytest.approx(0.007 / 32)
    assert ber_of_scale(pop, 1.0, T_CLK) == 0.0


def test_all_paths_violating_gives_population_maximum():
    pop = generate_population()
    assert ber_of_scale(pop, 10.0, T_CLK) == pytest.approx(pop.max_ber)


def test_ber_is_right_continuous_step():
    pop = PathPopulation((1.5e-9, 1.4e-9), (0.01, 0.02), 32)
    s1 = T_CLK / 1.5e-9
    assert ber_of_scale(pop, s1, T_CLK) == 0.0  # s*d == t_clk is not a violation
    assert ber_of_scale(pop, math.nextafter(s1, 2.0), T_CLK) == pytest.approx(0.01 / 32)


@given(st.floats(1.0, 3.0), st.floats(1.0, 3.0))
def test_ber_non_decreasing_in_scale(a, b):
    pop = generate_population()
    lo, hi = sorted((a, b))
    assert ber_of_scale(pop, lo, T_CLK) <= ber_of_scale(pop, hi, T_CLK)


def test_scale_below_one_rejected():
    with pytest.raises(PolicyError):
        ber_of_scale(generate_population(), 0.9, T_CLK)


@pytest.mark.parametrize(
    "delays,rates,bits",
    [((), (), 32), ((1e-9,), (0.1, 0.2), 32), ((-1e-9,), (0.1,), 32), ((1e-9,), (0.1,), 0)],
)
def test_invalid_population(delays, rates, bits):
    with pytest.raises(PolicyError):
        PathPopulation(delays, rates, bits)


# ---- tolerable_ber ---------------------------------------------------------------


def test_flat_profile_up_to_1e4():
    prof = ResilienceProfile("Q", GRID, (0.0, 0.0, 0.0, 0.0, 0.02, 0.2))
    ber, flag = tolerable_ber(prof, 0.005)
    # loss rises linearly in log10(BER) from 0 at 1e-4 to 2% at 1e-3
    assert ber == pytest.approx(10 ** (-4 + 0.25))
    assert flag == ""
    assert tolerable_ber(prof, 0.0) == (1e-4, "")


def test_budget_above_every_loss_flags_max():
    prof = ResilienceProfile("Q", GRID, (0.0, 0.0, 0.0, 0.0, 0.001, 0.002))
    assert tolerable_ber(prof, 0.01) == (1e-2, "max")


def test_zero_budget_with_zero_loss_at_lowest_point():
    prof = ResilienceProfile("O", GRID, (0.0, 0.001, 0.002, 0.004, 0.01, 0.1))
    assert tolerable_ber(prof, 0.0) == (1e-7, "")


def test_lowest_point_over_budget_flags_min():
    prof = ResilienceProfile("O", GRID, (0.01, 0.02, 0.03, 0.04, 0.05, 0.1))
    assert tolerable_ber(prof, 0.005) == (1e-7, "min")


def test_profile_loss_interpolates_in_log_ber():
    prof = ResilienceProfile("K", (1e-4, 1e-2), (0.0, 0.02))
    assert prof.loss(1e-3) == pytest.approx(0.01)
    assert prof.loss(1e-6) == 0.0 and prof.loss(1.0) == 0.02


@pytest.mark.parametrize(
    "bers,losses", [((), ()), ((1e-3, 1e-4), (0, 0)), ((1e-4, 1e-3), (0.1, 0.0)), ((0.0, 1e-3), (0, 0))]
)
def test_invalid_profile(bers, losses):
    with pytest.raises(PolicyError):
        ResilienceProfile("Q", bers, losses)


# ---- delay_max -------------------------------------------------------------------


def test_two_path_breakpoint():
    # paths at 1.5 and 1.4 ns, each adding 0.01/32; BER* between the two levels
    pop = PathPopulation((1.5e-9, 1.4e-9), (0.01, 0.01), 32)
    prof = ResilienceProfile("Q", (1e-5, 1e-3), (0.0, 0.01))
    budget = prof.loss(0.015 / 32)
    entry = delay_max_for(pop, prof, budget, T_CLK, nominal_delay=1.5e-9)
    assert entry.tolerable_ber == pytest.approx(0.015 / 32)
    assert entry.scale == pytest.approx(T_CLK / 1.4e-9)
    assert entry.delay_max == pytest.approx(1.5e-9 * T_CLK / 1.4e-9)


def test_critical_path_may_not_fail_gives_t_clk():
    pop = generate_population()
    prof = ResilienceProfile("O", GRID, (0.0, 0.01, 0.02, 0.03, 0.04, 0.05))
    entry = delay_max_for(pop, prof, 0.0, T_CLK)
    assert entry.delay_max == T_CLK


def test_every_path_may_fail_is_capped():
    pop = generate_population()
    prof = ResilienceProfile("Q", GRID + (1e-1,), (0.0,) * 7)
    assert prof.bers[-1] > pop.max_ber
    entry = delay_max_for(pop, prof, 0.005, T_CLK, s_cap=2.0)
    assert entry.flag in ("max", "cap") and entry.scale == 2.0
    assert entry.delay_max == pytest.approx(2.0 * pop.critical)


# ---- build_policy ----------------------------------------------------------------


def test_fixture_policy_ordering():
    table = build_policy(read_population(), read_profiles(), 0.005, T_CLK)
    dm = {op: table[op].delay_max for op in OPERATORS}
    assert sorted(dm, key=dm.get)[:2] in (["O", "Down"], ["Down", "O"])
    for op in ("Q", "V", "QKT", "SV", "Gate", "Up"):
        assert table[op].scale == 2.0
    assert all(v >= T_CLK for v in dm.values())


def test_zero_budget_collapses_to_t_clk():
    table = build_policy(read_population(), read_profiles(), 0.0, T_CLK)
    assert all(table[op].delay_max == T_CLK for op in OPERATORS)


def test_identical_profiles_give_identical_thresholds():
    prof = default_profiles()["K"]
    profiles = {op: ResilienceProfile(op, prof.bers, prof.losses) for op in OPERATORS}
    table = build_policy(generate_population(), profiles, 0.005, T_CLK)
    assert len({table[op].delay_max for op in OPERATORS}) == 1


def test_missing_operator_rejected():
    profiles = default_profiles()
    del profiles["Up"]
    with pytest.raises(PolicyError, match="Up"):
        build_policy(generate_population(), profiles, 0.005, T_CLK)


@given(st.floats(0.0, 0.05), st.floats(0.0, 0.05))
@settings(max_examples=50)
def test_policy_monotone_in_budget(a, b):
    pop, profiles = generate_population(), default_profiles()
    lo, hi = sorted((a, b))
    t_lo = build_policy(pop, profiles, lo, T_CLK)
    t_hi = build_policy(pop, profiles, hi, T_CLK)
    for op in OPERATORS:
        assert t_lo[op].delay_max <= t_hi[op].delay_max


# ---- files -----------------------------------------------------------------------


def test_packaged_population_matches_generator():
    gen, packaged = generate_population(), read_population()
    assert len(packaged.delays) == 100
    assert packaged.critical == pytest.approx(1.542e-9)
    assert max(abs(a - b) for a, b in zip(gen.delays, packaged.delays)) < 1e-20
    assert all(d <= 1.542e-9 for d in packaged.delays)


def test_population_round_trip(tmp_path):
    pop = generate_population(n=7, seed=3)
    path = tmp_path / "paths.csv"
    path.write_text(format_population(pop))
    back = read_population(path)
    assert back.rates == pop.rates
    assert back.delays == pytest.approx(pop.delays, rel=1e-12)


def test_profiles_round_trip_and_alias(tmp_path):
    path = tmp_path / "res.csv"
    text = format_profiles(default_profiles()).replace("QKT,", "QKᵀ,")
    path.write_text(text)
    back = read_profiles(path)
    assert set(back) == set(OPERATORS)
    assert back["QKT"].losses == default_profiles()["QKT"].losses


def test_bad_header_and_unknown_operator(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("op,ber,loss\nQ,1e-4,0\n")
    with pytest.raises(PolicyError, match="header"):
        read_profiles(bad)
    bad.write_text("operator,ber,accuracy_loss\nFFN,1e-4,0\n")
    with pytest.raises(PolicyError, match="FFN"):
        read_profiles(bad)
    with pytest.raises(PolicyError, match="cannot read"):
        read_population(tmp_path / "missing.csv")

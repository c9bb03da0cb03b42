"""Workload statistics to aging stimulus.

BTI is driven by a square gate waveform (stress at V_DD for ``duty`` of every
toggle period, recovery at 0 V for the rest).  Simulating 10 years of
sub-microsecond cycles directly is impossible, so the base waveform is
lifted: N cycles are replaced by one cycle N times longer whose stress and
recovery voltages, chosen per trap species, reproduce the permanent shift and
the end-of-cycle shift of the N short cycles.  Lifting repeats until one period covers the horizon.  A
duration is then walked with the longest level that is still short compared
with the device age, which keeps the walk close to the state the level was
matched on.

HCI happens only during transitions; a ramped transition is reduced to an
equivalent fraction ``gamma`` of a full-V_DD transition and accumulated over
the toggle count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .aging import (
    RECOVERY,
    STRESS,
    AgingDomainError,
    AgingParams,
    CircuitAgingState,
    DeviceAgingState,
    HciParams,
    PowerLaw,
    TrapState,
    apply_stress_segment,
    continue_law,
    recover_kernel,
    stress_kernel,
)

DEFAULT_BRANCH = 10
DEFAULT_STEP_RATIO = 300.0
DEFAULT_ANCHOR_FACTOR = 3.0
ROOT_TOL = 1e-9
# initial voltage search ranges in units of V_DD; the upper stress end and both
# recovery ends are doubled while the target lies outside, as long as B_c*V
# (stress) or B_e*|V| (recovery) stays below RECOVERY_MAX_EXPONENT.
STRESS_SPAN = 2.0
# A remaining end-shift mismatch up to RECOVERY_MATCH_RTOL is accepted.
RECOVERY_SPAN = 3.0
RECOVERY_MAX_EXPONENT = 200.0
RECOVERY_MATCH_RTOL = 1e-2


class ExtrapolationError(ArithmeticError):
    """No effective voltage reproduces the lifted boundary shift."""


@dataclass(frozen=True)
class WorkloadStats:
    duty_factor: float = 0.5
    toggle_rate: float = 0.0075
    t_clk: float = 1.6e-9
    transition_time: float = 1.0e-10

    def __post_init__(self):
        if not 0.0 <= self.duty_factor <= 1.0:
            raise AgingDomainError(f"duty_factor must be in [0, 1], got {self.duty_factor}")
        if not 0.0 < self.toggle_rate <= 1.0:
            raise AgingDomainError(f"toggle_rate must be in (0, 1], got {self.toggle_rate}")
        if self.t_clk <= 0:
            raise AgingDomainError("t_clk must be positive")
        if not 0.0 <= self.transition_time < self.t_clk:
            raise AgingDomainError("transition_time must be in [0, t_clk)")

    @property
    def base_period(self) -> float:
        return self.t_clk / self.toggle_rate


@dataclass(frozen=True)
class EquivalentWaveform:
    period: float
    v_stress: float
    v_recovery: float
    stress_fraction: float
    level: int = 0
    cycles_represented: int = 1
    v_dd: float = 0.0
    # (stress, recovery) voltage per trap species; empty means every species
    # sees (v_stress, v_recovery)
    trap_voltages: tuple[tuple[float, float], ...] = ()

    def voltages(self, i: int) -> tuple[float, float]:
        return self.trap_voltages[i] if self.trap_voltages else (self.v_stress, self.v_recovery)

    @property
    def t_stress(self) -> float:
        return self.period * self.stress_fraction

    @property
    def t_recovery(self) -> float:
        return self.period * (1.0 - self.stress_fraction)


def base_waveform(stats: WorkloadStats, V_DD: float) -> EquivalentWaveform:
    return EquivalentWaveform(
        period=stats.base_period,
        v_stress=V_DD,
        v_recovery=0.0,
        stress_fraction=stats.duty_factor,
        level=0,
        cycles_represented=1,
        v_dd=V_DD,
    )


def apply_cycle(
    state: DeviceAgingState, w: EquivalentWaveform, params: AgingParams, T: float | None = None
) -> DeviceAgingState:
    """One stress phase then one recovery phase of ``w``."""
    T = params.T_bti if T is None else T
    return _apply_plan(state, _plan(w, params, T), w.t_stress, w.t_recovery, w.v_recovery)


def _apply_plan(state: DeviceAgingState, plan, t_stress: float, t_recovery: float, v_last: float) -> DeviceAgingState:
    traps = [[t.perm, t.rec, t.rec_peak] for t in state.traps]
    _run_plan(traps, plan, t_stress, t_recovery)
    return replace(state, traps=tuple(TrapState(p, r, pk) for p, r, pk in traps), last_vg=v_last)


def _bisect(f: Callable[[float], float], target: float, lo: float, hi: float, what: str) -> float:
    """Root of increasing ``f(v) = target`` on ``[lo, hi]`` to ``ROOT_TOL`` volts."""
    f_lo, f_hi = f(lo), f(hi)
    if not f_lo <= target <= f_hi:
        raise ExtrapolationError(
            f"{what}: target {target:.6g} V outside [{f_lo:.6g}, {f_hi:.6g}] "
            f"for voltages [{lo:.4g}, {hi:.4g}]"
        )
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _permanent(state: DeviceAgingState) -> float:
    return sum(s.perm for s in state.traps)


def _match_voltages(
    stress: Callable[[float], tuple[float, float]],
    recover: Callable[[float, tuple[float, float]], float],
    perm: float | None,
    peak: float,
    end: float,
    v_dd: float,
    b_c: float,
    b_e: float,
    strict: bool,
) -> tuple[float, float]:
    """Stress and recovery voltages of one lifted cycle.

    ``stress(v)`` gives (permanent, total) after the long stress phase and
    ``recover(v, stressed)`` the total after the long recovery phase.  The
    stress voltage matches the permanent part (or the peak when there is
    none), the recovery voltage the end shift.  With ``strict=False`` an
    unmatched target is clamped to the nearest bracket end instead of raising.
    """

    def solve(f, target, lo, hi, what):
        try:
            return _bisect(f, target, lo, hi, what)
        except ExtrapolationError:
            if strict:
                raise
            return lo if f(lo) > target else hi

    if perm is not None:
        deposit, target = (lambda v: stress(v)[0]), perm
    else:
        deposit, target = (lambda v: stress(v)[1]), peak
    # intermittent stress can deposit more than one continuous phase at V_DD
    hi = STRESS_SPAN * v_dd
    while target > deposit(hi) and 2 * hi * b_c <= RECOVERY_MAX_EXPONENT:
        hi *= 2
    v_s = solve(deposit, target, 0.0, hi, "stress voltage")
    stressed = stress(v_s)

    def recovered(v: float) -> float:
        return recover(v, stressed)

    lo, hi = -RECOVERY_SPAN * v_dd, RECOVERY_SPAN * v_dd
    v_limit = RECOVERY_MAX_EXPONENT / max(b_e, 1e-6)
    f_lo, f_hi = recovered(lo), recovered(hi)
    # the end shift tends to the matched permanent part as V -> -inf and to
    # the lifted peak as V -> +inf, so widening finds most roots
    while end < f_lo and 2 * abs(lo) <= v_limit:
        lo *= 2
        f_lo = recovered(lo)
    while end > f_hi and 2 * hi <= v_limit:
        hi *= 2
        f_hi = recovered(hi)
    tol = RECOVERY_MATCH_RTOL * end
    if f_lo <= end <= f_hi:
        return v_s, _bisect(recovered, end, lo, hi, "recovery voltage")
    if end < f_lo and (f_lo - end <= tol or not strict):
        return v_s, lo
    if end > f_hi and (end - f_hi <= tol or not strict):
        return v_s, hi
    raise ExtrapolationError(
        f"recovery voltage: end shift {end:.6g} V outside [{f_lo:.6g}, {f_hi:.6g}] "
        f"for voltages [{lo:.4g}, {hi:.4g}]"
    )


def lift_waveform(
    w: EquivalentWaveform,
    N: int,
    params: AgingParams,
    T: float | None = None,
    anchor: DeviceAgingState | None = None,
) -> EquivalentWaveform:
    """One cycle of period ``N * w.period`` standing in for N cycles of ``w``.

    Starting from ``anchor`` (a fresh device by default), N cycles of ``w``
    are simulated directly.  The lifted stress voltage is chosen so that one
    long stress phase deposits the same permanent shift, and the lifted
    recovery voltage so that the shift at the end of the long recovery phase
    matches.  Matching the permanent part rather than the peak keeps the
    recoverable charge left in the state consistent, which is what makes the
    lifted cycle reusable on older devices.

    Trap species evolve independently, so each gets its own voltage pair;
    ``v_stress``/``v_recovery`` are the pair matching the summed shifts and
    are informational.
    """
    if N < 1:
        raise ValueError(f"branch factor must be >= 1, got {N}")
    if N == 1:
        return w
    T = params.T_bti if T is None else T
    lifted = replace(
        w,
        period=w.period * N,
        level=w.level + 1,
        cycles_represented=w.cycles_represented * N,
    )
    traps = params.bti_traps
    if w.stress_fraction in (0.0, 1.0) or not traps:
        return lifted
    if anchor is None:
        anchor = DeviceAgingState.fresh(len(traps))

    plan = _plan(w, params, T)
    state = anchor
    for _ in range(N - 1):
        state = _apply_plan(state, plan, w.t_stress, w.t_recovery, w.v_recovery)
    peak_state = _apply_plan(state, plan, w.t_stress, 0.0, w.v_stress)
    end_state = _apply_plan(state, plan, w.t_stress, w.t_recovery, w.v_recovery)

    v_dd = w.v_dd or w.v_stress
    t_s, t_r = lifted.t_stress, lifted.t_recovery

    def species_stress(i: int):
        sp, a = traps[i], anchor.traps[i]

        def stress(v: float) -> tuple[float, float]:
            p, r, _ = stress_kernel(a.perm, a.rec, sp.capture_prefactor(v, T), sp.n_c, sp.r_perm, t_s)
            return p, p + r

        def recover(v: float, stressed: tuple[float, float]) -> float:
            p, tot = stressed
            rec = tot - p
            return p + recover_kernel(rec, rec, sp.emission_rate(v, T), sp.beta_e, t_r)

        return stress, recover

    fns = [species_stress(i) for i in range(len(traps))]
    per_trap = tuple(
        _match_voltages(
            stress, recover, peak_state.traps[i].perm if sp.r_perm > 0 else None,
            peak_state.traps[i].total, end_state.traps[i].total, v_dd, sp.B_c, sp.B_e, True,
        )
        for i, (sp, (stress, recover)) in enumerate(zip(traps, fns))
    )

    # headline pair on the summed shifts; it does not drive the simulation
    def agg_stress(v: float):
        parts = tuple(stress(v) for stress, _ in fns)
        return sum(p for p, _ in parts), sum(t for _, t in parts), parts

    def agg_recover(v: float, stressed) -> float:
        return sum(recover(v, part) for (_, recover), part in zip(fns, stressed[2]))

    v_agg = _match_voltages(
        agg_stress, agg_recover, _permanent(peak_state) if any(sp.r_perm > 0 for sp in traps) else None,
        peak_state.bti, end_state.bti, v_dd, min(sp.B_c for sp in traps), max(sp.B_e for sp in traps), False,
    )
    return replace(lifted, v_stress=v_agg[0], v_recovery=v_agg[1], trap_voltages=per_trap)


# --------------------------------------------------------------------------
# Fast cycle application on precomputed per-level constants
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class _CyclePlan:
    t_stress: float
    t_recovery: float
    K: tuple[float, ...]
    n: tuple[float, ...]
    r: tuple[float, ...]
    rate: tuple[float, ...]
    beta: tuple[float, ...]
    # recoverable fraction left by one recovery phase that starts right after stress
    keep: tuple[float, ...]


def _plan(w: EquivalentWaveform, params: AgingParams, T: float) -> _CyclePlan:
    traps = params.bti_traps
    volts = [w.voltages(i) for i in range(len(traps))]
    rate = tuple(sp.emission_rate(v_r, T) for sp, (_, v_r) in zip(traps, volts))
    return _CyclePlan(
        t_stress=w.t_stress,
        t_recovery=w.t_recovery,
        K=tuple(sp.capture_prefactor(v_s, T) for sp, (v_s, _) in zip(traps, volts)),
        n=tuple(sp.n_c for sp in traps),
        r=tuple(sp.r_perm for sp in traps),
        rate=rate,
        beta=tuple(sp.beta_e for sp in traps),
        keep=tuple(math.exp(-((k * w.t_recovery) ** sp.beta_e)) for k, sp in zip(rate, traps)),
    )


def _run_plan(traps: list[list], plan: _CyclePlan, t_stress: float, t_recovery: float) -> None:
    """Apply one stress phase then one recovery phase in place.

    ``traps`` holds ``[perm, rec, peak]`` per species, ``peak`` being ``None``
    when the last phase was stress.
    """
    if t_stress > 0.0:
        for i, tr in enumerate(traps):
            tr[0], tr[1], _ = stress_kernel(tr[0], tr[1], plan.K[i], plan.n[i], plan.r[i], t_stress)
            tr[2] = None
    if t_recovery > 0.0:
        for i, tr in enumerate(traps):
            peak = tr[1] if tr[2] is None else tr[2]
            tr[1] = recover_kernel(tr[1], peak, plan.rate[i], plan.beta[i], t_recovery)
            tr[2] = peak


def _run_cycles(traps: list[list], plan: _CyclePlan, count: int) -> None:
    """``count`` full cycles of ``plan`` in place.

    With both phases present every recovery starts from a fresh peak, so it
    just scales the recoverable part by ``keep`` and species evolve
    independently; this is the same arithmetic as ``_run_plan``, unrolled.
    """
    ts, tr_ = plan.t_stress, plan.t_recovery
    if count <= 0:
        return
    if ts <= 0.0 or tr_ <= 0.0:
        for _ in range(count):
            _run_plan(traps, plan, ts, tr_)
        return
    for i, tr in enumerate(traps):
        p, rec = tr[0], tr[1]
        K, n, r, keep = plan.K[i], plan.n[i], plan.r[i], plan.keep[i]
        inv_n = 1.0 / n
        for _ in range(count):
            x = p + rec
            teq = (x / K) ** inv_n if x > 0.0 else 0.0
            inc = K * (teq + ts) ** n - x
            if inc > 0.0:
                p += r * inc
                rec += (1.0 - r) * inc
            peak = rec
            if peak > 0.0 and plan.rate[i] > 0.0:
                rec = peak * keep
        tr[0], tr[1], tr[2] = p, rec, peak


class LevelChain:
    """Lifted waveforms for one supply voltage plus the stepping rule using them.

    A level is only applied once the device is at least ``step_ratio`` times
    older than the level's period, so lifted cycles always act on states
    similar to the anchor they were matched at.  Level ``k`` is anchored at
    age ``step_ratio * anchor_factor * period_k`` on a trajectory simulated
    with the lower levels.
    """

    def __init__(
        self,
        stats: WorkloadStats,
        V_DD: float,
        params: AgingParams,
        horizon: float,
        N: int = DEFAULT_BRANCH,
        T: float | None = None,
        step_ratio: float = DEFAULT_STEP_RATIO,
        anchor_factor: float = DEFAULT_ANCHOR_FACTOR,
    ):
        if N < 2:
            raise ValueError(f"branch factor must be >= 2, got {N}")
        if horizon <= 0:
            raise AgingDomainError("horizon must be positive")
        self.params = params
        self.T = params.T_bti if T is None else T
        self.N = N
        self.step_ratio = step_ratio
        self.levels = [base_waveform(stats, V_DD)]
        self._plans = [_plan(self.levels[0], params, self.T)]

        state = DeviceAgingState.fresh(len(params.bti_traps))
        age = 0.0
        while self.levels[-1].period < horizon:
            period = self.levels[-1].period * N
            target = min(step_ratio * anchor_factor * period, horizon)
            if target > age:
                state = self.advance(state, target - age, age)
                age = target
            w = lift_waveform(self.levels[-1], N, params, self.T, anchor=state)
            self.levels.append(w)
            self._plans.append(_plan(w, params, self.T))

    def advance(self, state: DeviceAgingState, dt: float, age: float = 0.0) -> DeviceAgingState:
        """BTI after ``dt`` more seconds for a device currently ``age`` seconds old."""
        if dt < 0:
            raise AgingDomainError(f"duration must be >= 0, got {dt}")
        if dt == 0 or not state.traps:
            return state
        traps = [[t.perm, t.rec, t.rec_peak] for t in state.traps]
        levels, plans = self.levels, self._plans
        sr = self.step_ratio
        rem = dt
        k = 0
        while rem > 0.0:
            limit = min(rem, age / sr)
            while k + 1 < len(levels) and levels[k + 1].period <= limit:
                k += 1
            while k > 0 and levels[k].period > limit:
                k -= 1
            w, plan = levels[k], plans[k]
            P = w.period
            if P > rem:
                ts = min(rem, w.t_stress)
                _run_plan(traps, plan, ts, rem - ts)
                break
            # run every cycle before the walk would move up a level at once
            count = int(rem // P)
            if k + 1 < len(levels) and rem >= levels[k + 1].period:
                count = min(count, max(1, math.ceil((sr * levels[k + 1].period - age) / P)))
            count = max(count, 1)
            _run_cycles(traps, plan, count)
            age += count * P
            rem -= count * P
        return replace(
            state,
            traps=tuple(TrapState(p, r, pk) for p, r, pk in traps),
            last_vg=levels[0].v_stress if traps else state.last_vg,
        )


def build_levels(
    stats: WorkloadStats,
    V_DD: float,
    params: AgingParams,
    horizon: float,
    N: int = DEFAULT_BRANCH,
    T: float | None = None,
) -> list[EquivalentWaveform]:
    """Base waveform followed by lifts until one period reaches ``horizon``."""
    return LevelChain(stats, V_DD, params, horizon, N, T).levels


def log_checkpoints(t_start: float, t_end: float, per_decade: int) -> list[float]:
    """Log-spaced times in ``[t_start, t_end]``, both ends included."""
    if t_end <= t_start:
        return [t_end]
    n = max(int(math.ceil(per_decade * math.log10(t_end / t_start))), 1)
    ts = np.geomspace(t_start, t_end, n + 1)
    ts[0], ts[-1] = t_start, t_end
    return [float(t) for t in ts]


def extrapolate_bti(
    stats: WorkloadStats,
    V_DD: float,
    params: AgingParams,
    T: float | None,
    horizon: float,
    N: int = DEFAULT_BRANCH,
    per_decade: int = 50,
    chain: LevelChain | None = None,
) -> list[tuple[float, float]]:
    """PMOS BTI shift of a fresh device, sampled at level boundaries and log checkpoints."""
    if horizon <= 0:
        raise AgingDomainError("horizon must be positive")
    if chain is None:
        chain = LevelChain(stats, V_DD, params, horizon, N, T)
    times = {w.period for w in chain.levels if w.period <= horizon}
    if horizon > 1.0:
        times.update(log_checkpoints(1.0, horizon, per_decade))
    times.add(horizon)
    state = DeviceAgingState.fresh(len(params.bti_traps))
    t_prev = 0.0
    out = []
    for t in sorted(times):
        state = chain.advance(state, t - t_prev, t_prev)
        out.append((t, state.bti))
        t_prev = t
    return out


def brute_force_bti(
    stats: WorkloadStats, V_DD: float, params: AgingParams, T: float | None, n_cycles: int
) -> list[float]:
    """Cycle-by-cycle BTI shift at the end of each base period (reference path)."""
    w = base_waveform(stats, V_DD)
    state = DeviceAgingState.fresh(len(params.bti_traps))
    out = []
    for _ in range(n_cycles):
        state = apply_cycle(state, w, params, T)
        out.append(state.bti)
    return out


# --------------------------------------------------------------------------
# HCI
# --------------------------------------------------------------------------


def linear_ramp(V_DD: float, transition_time: float) -> Callable[[float], float]:
    return lambda t: V_DD * min(max(t / transition_time, 0.0), 1.0)


def _sample_transition(vg_of_t, n: int, transition_time: float | None, rule: str):
    """Interval edges and the gate voltage used on each of the ``n`` intervals."""
    if rule not in ("midpoint", "right"):
        raise ValueError(f"rule must be 'midpoint' or 'right', got {rule!r}")
    if callable(vg_of_t):
        if transition_time is None or transition_time <= 0:
            raise AgingDomainError("a callable waveform needs a positive transition_time")
        t = np.linspace(0.0, transition_time, n + 1)
        at = 0.5 * (t[:-1] + t[1:]) if rule == "midpoint" else t[1:]
        return t, np.array([vg_of_t(ti) for ti in at], dtype=float)
    t_src, v_src = (np.asarray(a, dtype=float) for a in vg_of_t)
    if t_src.ndim != 1 or t_src.shape != v_src.shape or t_src.size < 2:
        raise AgingDomainError("sampled waveform needs matching 1-D time and voltage arrays")
    if np.any(np.diff(t_src) <= 0):
        raise AgingDomainError("waveform time samples must be strictly increasing")
    t = np.linspace(t_src[0], t_src[-1], n + 1)
    at = 0.5 * (t[:-1] + t[1:]) if rule == "midpoint" else t[1:]
    return t, np.interp(at, t_src, v_src)


def hci_sum(t: np.ndarray, v: np.ndarray, hci: HciParams, T: float) -> float:
    """HCI after consecutive intervals ``diff(t)`` at voltages ``v``, chained by continuation."""
    law = PowerLaw(hci)
    dv = 0.0
    for dt_i, v_i in zip(np.diff(t).tolist(), np.asarray(v).tolist()):
        dv = continue_law(law, dv, v_i, T, dt_i)
    return dv


def gamma_factor(
    vg_of_t,
    n: int,
    V_DD: float,
    hci: HciParams,
    T: float,
    transition_time: float | None = None,
    rule: str = "midpoint",
) -> float:
    """Fraction of a full-V_DD transition giving the same HCI as the ramped one.

    ``vg_of_t`` is either a callable on ``[0, transition_time]`` or a
    ``(t, v)`` pair of sample arrays.  The transition is cut into ``n``
    intervals, HCI is accumulated across them with equivalent-time
    continuation and the total is mapped back to a stress time at V_DD.
    Each interval uses the gate voltage at its midpoint; ``rule="right"``
    takes the right end instead, which converges only to first order.
    """
    if n < 1:
        raise AgingDomainError("need at least one interval")
    t, v = _sample_transition(vg_of_t, n, transition_time, rule)
    if np.any(v < -1e-12) or np.any(v > V_DD * (1 + 1e-12)):
        raise AgingDomainError("transition waveform must stay within [0, V_DD]")
    dv = hci_sum(t, v, hci, T)
    return min(PowerLaw(hci).invert(dv, V_DD, T) / (t[-1] - t[0]), 1.0)


def hci_time(gamma: float, stats: WorkloadStats, total_time: float) -> float:
    return gamma * stats.transition_time / stats.t_clk * stats.toggle_rate * total_time


def accumulate_hci(
    gamma: float,
    stats: WorkloadStats,
    total_time: float,
    V_DD: float,
    hci: HciParams,
    T: float,
    state: DeviceAgingState,
) -> DeviceAgingState:
    if total_time < 0:
        raise AgingDomainError("total_time must be >= 0")
    if total_time == 0:
        return state
    law = PowerLaw(hci)
    t_eq = law.invert(state.hci, V_DD, T) if state.hci > 0 else 0.0
    dt = hci_time(gamma, stats, total_time)
    new = law(V_DD, T, t_eq + dt)
    return replace(state, hci=max(new, state.hci), teq_hci=t_eq + dt)


# --------------------------------------------------------------------------
# Combined stepping used by the AVS loop
# --------------------------------------------------------------------------


class AgingEngine:
    """Advances a :class:`CircuitAgingState` at piecewise-constant V_DD.

    Lifted waveform chains and gamma factors are cached per supply voltage.
    ``recovery=False`` replaces the BTI waveform by continuous stress over the
    duty-weighted time (detrapping skipped).  ``transition`` is either a
    callable on ``[0, transition_time]`` or sampled ``(t, v)`` arrays whose
    shape is reused at every supply voltage.
    """

    def __init__(
        self,
        params: AgingParams,
        stats: WorkloadStats,
        horizon: float,
        N: int = DEFAULT_BRANCH,
        gamma_intervals: int = 1000,
        transition=None,
        step_ratio: float = DEFAULT_STEP_RATIO,
    ):
        self.params = params
        self.stats = stats
        self.horizon = horizon
        self.N = N
        self.gamma_intervals = gamma_intervals
        self.transition = transition
        self.step_ratio = step_ratio
        self._chains: dict[float, LevelChain] = {}
        self._gamma: dict[tuple[float, str], float] = {}

    def chain(self, V_DD: float) -> LevelChain:
        if V_DD not in self._chains:
            self._chains[V_DD] = LevelChain(
                self.stats, V_DD, self.params, self.horizon, self.N, self.params.T_bti,
                step_ratio=self.step_ratio,
            )
        return self._chains[V_DD]

    def gamma(self, V_DD: float, device: str) -> float:
        key = (V_DD, device)
        if key not in self._gamma:
            hci = self.params.hci_p if device == "p" else self.params.hci_n
            wave = self.transition
            if wave is None:
                wave = linear_ramp(V_DD, self.stats.transition_time)
            elif not callable(wave):
                # a sampled shape is rescaled so that it settles at V_DD
                t, v = (np.asarray(a, dtype=float) for a in wave)
                wave = (t, v * (V_DD / v.max()))
            self._gamma[key] = gamma_factor(
                wave, self.gamma_intervals, V_DD, hci, self.params.T_hci,
                self.stats.transition_time,
            )
        return self._gamma[key]

    def advance(
        self,
        state: CircuitAgingState,
        V_DD: float,
        dt: float,
        age: float,
        recovery: bool = True,
    ) -> CircuitAgingState:
        """State after ``dt`` seconds at ``V_DD`` for a circuit ``age`` seconds into its life."""
        if dt == 0:
            return state
        p = self.params
        pm = state.pmos
        if recovery:
            pm = self.chain(V_DD).advance(pm, dt, age)
        else:
            pm = apply_stress_segment(pm, p, V_DD, dt * self.stats.duty_factor, STRESS, p.T_bti)
        pm = accumulate_hci(self.gamma(V_DD, "p"), self.stats, dt, V_DD, p.hci_p, p.T_hci, pm)
        nm = accumulate_hci(
            self.gamma(V_DD, "n"), self.stats, dt, V_DD, p.hci_n, p.T_hci, state.nmos
        )
        return CircuitAgingState(pmos=pm, nmos=nm)


# --------------------------------------------------------------------------
# Files
# --------------------------------------------------------------------------


def read_workload_trace(path, t_clk: float = 1.6e-9, transition_time: float = 1.0e-10) -> WorkloadStats:
    """Average per-cell ``cell,duty_factor,toggle_rate`` rows into one WorkloadStats."""
    import csv

    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(ln for ln in fh if ln.strip() and not ln.startswith("#"))]
    if not rows or [h.strip() for h in rows[0]] != ["cell", "duty_factor", "toggle_rate"]:
        raise AgingDomainError(f"{path}: expected header cell,duty_factor,toggle_rate")
    try:
        vals = np.array([[float(r[1]), float(r[2])] for r in rows[1:] if r], dtype=float)
    except (ValueError, IndexError) as exc:
        raise AgingDomainError(f"{path}: {exc}") from None
    if vals.size == 0:
        raise AgingDomainError(f"{path}: no cells")
    duty, toggle = vals.mean(axis=0)
    return WorkloadStats(float(duty), float(toggle), t_clk, transition_time)


def read_transition_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Sampled transition waveform ``t_seconds,v_volts``."""
    data = np.genfromtxt(path, delimiter=",", names=True, comments="#")
    if data.dtype.names != ("t_seconds", "v_volts"):
        raise AgingDomainError(f"{path}: expected header t_seconds,v_volts")
    return np.atleast_1d(data["t_seconds"]).astype(float), np.atleast_1d(data["v_volts"]).astype(float)

"""Closed-loop lifetime simulation with adaptive voltage scaling.

Aging advances at the current supply voltage between log-spaced checkpoints.
When the critical-path delay crosses the threshold, the crossing is located
to within an hour and V_DD goes up by one step; the aged state carries over
unchanged, so later aging continues from it at the new voltage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

from .aging import AgingParams, CircuitAgingState
from .delay import DelaySurrogate
from .io import format_csv
from .waveform import AgingEngine, WorkloadStats, log_checkpoints

YEAR = 3.1536e7
NS = 1e-9
# voltages closer than this are treated as equal when checking the cap
V_EPS = 1e-9


class AvsError(RuntimeError):
    """The loop could not proceed (bad bracket, infeasible start)."""


@dataclass(frozen=True)
class AvsConfig:
    v_init: float = 0.90
    v_step: float = 0.010
    v_max_cap: float = 1.10
    t_clk: float = 1.6e-9
    delay_threshold: float | None = None
    horizon: float = 10 * YEAR
    per_decade: int = 50
    t_first: float = 1.0
    locate_tol: float = 3600.0
    recovery: bool = True

    def __post_init__(self):
        if self.v_step <= 0:
            raise ValueError("v_step must be positive")
        if self.v_init > self.v_max_cap:
            raise ValueError("v_init exceeds v_max_cap")
        if self.t_clk <= 0 or self.horizon <= 0:
            raise ValueError("t_clk and horizon must be positive")
        if self.per_decade < 1:
            raise ValueError("per_decade must be >= 1")
        if self.delay_threshold is not None and self.delay_threshold <= 0:
            raise ValueError("delay_threshold must be positive")

    @property
    def threshold(self) -> float:
        return self.t_clk if self.delay_threshold is None else self.delay_threshold


@dataclass(frozen=True)
class Checkpoint:
    t: float
    v_dd: float
    delay: float  # ns
    dvth_p: float  # V
    dvth_n: float  # V


@dataclass(frozen=True)
class StepEvent:
    t: float
    v_old: float
    v_new: float
    delay_before: float  # ns
    delay_after: float  # ns


@dataclass
class AvsTrajectory:
    checkpoints: list[Checkpoint]
    steps: list[StepEvent]
    final: CircuitAgingState
    v_init: float
    horizon: float
    threshold: float
    capped: bool = False
    violations: list[tuple[float, str]] = field(default_factory=list)
    domain_warnings: int = 0

    @property
    def v_final(self) -> float:
        return self.steps[-1].v_new if self.steps else self.v_init

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def dvth_p(self) -> float:
        return self.final.pmos.total

    @property
    def dvth_n(self) -> float:
        return self.final.nmos.total

    def epochs(self) -> list[tuple[float, float, float]]:
        """Constant-voltage intervals ``(t0, t1, v)`` covering ``[0, horizon]``."""
        out, t0, v = [], 0.0, self.v_init
        for ev in self.steps:
            if ev.t > t0:
                out.append((t0, ev.t, v))
            t0, v = ev.t, ev.v_new
        if self.horizon > t0:
            out.append((t0, self.horizon, v))
        return out

    @property
    def v_eff(self) -> float:
        """Time-weighted RMS supply voltage."""
        ep = self.epochs()
        span = sum(t1 - t0 for t0, t1, _ in ep)
        if span <= 0:
            raise ValueError("trajectory has zero duration")
        return math.sqrt(sum((t1 - t0) * v * v for t0, t1, v in ep) / span)

    def summary(self) -> dict[str, float]:
        return {
            "v_final": self.v_final,
            "steps": self.n_steps,
            "dvth_p_mv": self.dvth_p * 1e3,
            "dvth_n_mv": self.dvth_n * 1e3,
            "v_eff": self.v_eff,
            "capped": self.capped,
            "domain_warnings": self.domain_warnings,
        }


def locate_violation(
    delay_at: Callable[[float], float],
    threshold: float,
    t_lo: float,
    t_hi: float,
    tol: float = 3600.0,
) -> float:
    """Last time ``t*`` with ``delay_at(t*) <= threshold``, bisected to ``tol`` seconds.

    Requires ``delay_at(t_lo) <= threshold < delay_at(t_hi)``.
    """
    d_lo, d_hi = delay_at(t_lo), delay_at(t_hi)
    if not d_lo <= threshold < d_hi:
        raise AvsError(
            f"no threshold crossing in [{t_lo:.6g}, {t_hi:.6g}] s: "
            f"delay {d_lo:.6g} -> {d_hi:.6g}, threshold {threshold:.6g} (non-monotone delay?)"
        )
    while t_hi - t_lo > tol:
        mid = 0.5 * (t_lo + t_hi)
        if delay_at(mid) <= threshold:
            t_lo = mid
        else:
            t_hi = mid
    return t_lo


class _Probe:
    """Delay evaluation with domain-violation bookkeeping."""

    def __init__(self, model: DelaySurrogate):
        self.model = model
        self.outside = 0

    def __call__(self, state: CircuitAgingState, v: float) -> float:
        p, n = state.pmos.total, state.nmos.total
        if not self.model.in_domain(p, n, v):
            self.outside += 1
        return float(self.model(p, n, v))


def simulate(
    cfg: AvsConfig,
    aging: AgingParams,
    stats: WorkloadStats,
    model: DelaySurrogate,
    engine: AgingEngine | None = None,
    stepping: bool = True,
    v_hold: float | None = None,
) -> AvsTrajectory:
    """Run the AVS loop over ``cfg.horizon``.

    With ``stepping=False`` the supply stays at ``v_hold`` (default
    ``cfg.v_init``) and only the aging trajectory is produced; this is how
    the constant-voltage comparison rows are computed with the same
    checkpoints and machinery.
    """
    engine = engine or AgingEngine(aging, stats, cfg.horizon)
    probe = _Probe(model)
    thr = cfg.threshold / NS
    v = cfg.v_init if v_hold is None else v_hold
    state = CircuitAgingState.fresh(aging)
    d0 = probe(state, v)
    if stepping and d0 > thr:
        raise AvsError(f"fresh delay {d0:.6g} ns already exceeds the threshold {thr:.6g} ns")

    cps = [Checkpoint(0.0, v, d0, 0.0, 0.0)]
    steps: list[StepEvent] = []
    violations: list[tuple[float, str]] = []
    capped = False
    t = 0.0
    times = log_checkpoints(min(cfg.t_first, cfg.horizon), cfg.horizon, cfg.per_decade)

    def record(t_c: float, st: CircuitAgingState, d: float) -> None:
        cp = Checkpoint(t_c, v, d, st.pmos.total, st.nmos.total)
        if t_c > cps[-1].t:
            cps.append(cp)
        else:
            cps[-1] = cp

    for tc in times:
        if tc <= t:
            continue
        new = engine.advance(state, v, tc - t, t, cfg.recovery)
        d = probe(new, v)
        while stepping and not capped and d > thr:
            start, t_start = state, t

            def delay_at(tt: float) -> float:
                if tt == t_start:
                    return probe(start, v)
                return probe(engine.advance(start, v, tt - t_start, t_start, cfg.recovery), v)

            t_star = locate_violation(delay_at, thr, t_start, tc, cfg.locate_tol)
            if t_star > t_start:
                state = engine.advance(start, v, t_star - t_start, t_start, cfg.recovery)
            t = t_star
            d_here = probe(state, v)
            # step until the delay is back under the threshold or the cap is hit
            while True:
                if v + cfg.v_step > cfg.v_max_cap + V_EPS:
                    capped = True
                    violations.append((t, f"v_max_cap {cfg.v_max_cap:.4g} V reached at {v:.4g} V"))
                    break
                v_new = round(v + cfg.v_step, 10)
                d_new = probe(state, v_new)
                steps.append(StepEvent(t, v, v_new, d_here, d_new))
                v, d_here = v_new, d_new
                if d_here <= thr:
                    break
            record(t, state, d_here)
            if capped:
                break
            new = engine.advance(state, v, tc - t, t, cfg.recovery)
            d = probe(new, v)
        if capped:
            # keep aging at the capped voltage; violations are reported, not fixed
            new = engine.advance(state, v, tc - t, t, cfg.recovery)
            d = probe(new, v)
        state, t = new, tc
        record(tc, state, d)

    return AvsTrajectory(
        checkpoints=cps,
        steps=steps,
        final=state,
        v_init=cps[0].v_dd,
        horizon=cfg.horizon,
        threshold=cfg.threshold,
        capped=capped,
        violations=violations,
        domain_warnings=probe.outside,
    )


# --------------------------------------------------------------------------
# Table-I style comparison
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioRow:
    name: str
    v_dd: str
    recovery: bool
    avs: bool
    pmos_hci: float  # V
    pmos_bti: float
    nmos: float

    @property
    def pmos_total(self) -> float:
        return self.pmos_hci + self.pmos_bti

    @classmethod
    def from_state(cls, name, v_dd, recovery, avs, st: CircuitAgingState) -> "ScenarioRow":
        return cls(name, v_dd, recovery, avs, st.pmos.hci, st.pmos.bti, st.nmos.total)


@dataclass
class ScenarioReport:
    rows: list[ScenarioRow]
    avs_run: AvsTrajectory

    def row(self, name: str) -> ScenarioRow:
        return next(r for r in self.rows if r.name == name)

    @property
    def reduction_pmos(self) -> float:
        return 1.0 - self.row("d").pmos_total / self.row("c").pmos_total

    @property
    def reduction_nmos(self) -> float:
        return 1.0 - self.row("d").nmos / self.row("c").nmos

    @property
    def recovery_reduction_pmos(self) -> float:
        return 1.0 - self.row("b").pmos_total / self.row("a").pmos_total

    def csv(self) -> str:
        return format_csv(
            ("scenario", "pmos_hci_mv", "pmos_bti_mv", "pmos_total_mv", "nmos_mv"),
            (
                (r.name, r.pmos_hci * 1e3, r.pmos_bti * 1e3, r.pmos_total * 1e3, r.nmos * 1e3)
                for r in self.rows
            ),
        )

    def text(self) -> str:
        head = f"{'row':<4}{'V_DD':<16}{'recovery':<10}{'AVS':<5}{'HCI':>8}{'BTI':>8}{'Total':>8}{'NMOS':>8}"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(
                f"{r.name:<4}{r.v_dd:<16}{'yes' if r.recovery else 'no':<10}{'yes' if r.avs else 'no':<5}"
                f"{r.pmos_hci * 1e3:8.1f}{r.pmos_bti * 1e3:8.1f}{r.pmos_total * 1e3:8.1f}{r.nmos * 1e3:8.1f}"
            )
        lines.append("")
        lines.append(
            f"recovery at V_nom: PMOS -{self.recovery_reduction_pmos * 100:.1f}%, "
            f"NMOS -{(1 - self.row('b').nmos / self.row('a').nmos) * 100:.1f}%"
        )
        lines.append(
            f"AVS vs constant V_max: PMOS -{self.reduction_pmos * 100:.1f}%, "
            f"NMOS -{self.reduction_nmos * 100:.1f}%"
        )
        lines.append(f"AVS: {self.avs_run.v_init:.2f} V -> {self.avs_run.v_final:.2f} V in {self.avs_run.n_steps} steps")
        return "\n".join(lines) + "\n"


def compare_scenarios(
    cfg: AvsConfig,
    aging: AgingParams,
    stats: WorkloadStats,
    model: DelaySurrogate,
    engine: AgingEngine | None = None,
) -> ScenarioReport:
    """Rows (a) V_nom without recovery, (b) V_nom with recovery, (c) the AVS final
    voltage held for the whole horizon without recovery, (d) the AVS run."""
    engine = engine or AgingEngine(aging, stats, cfg.horizon)
    d = simulate(cfg, aging, stats, model, engine)
    hold = lambda v, rec: simulate(  # noqa: E731
        AvsConfig(**{**cfg.__dict__, "recovery": rec}), aging, stats, model, engine, stepping=False, v_hold=v
    ).final
    v0, vmax = cfg.v_init, d.v_final
    rows = [
        ScenarioRow.from_state("a", f"V_nom {v0:.2f}", False, False, hold(v0, False)),
        ScenarioRow.from_state("b", f"V_nom {v0:.2f}", True, False, hold(v0, True)),
        ScenarioRow.from_state("c", f"V_max {vmax:.2f}", False, False, hold(vmax, False)),
        ScenarioRow.from_state("d", f"{v0:.2f}->{vmax:.2f}", cfg.recovery, True, d.final),
    ]
    return ScenarioReport(rows, d)


def trajectory_csv(traj: AvsTrajectory) -> str:
    return format_csv(
        ("t_s", "v_dd_v", "delay_ns", "dvth_p_mv", "dvth_n_mv"),
        ((c.t, c.v_dd, c.delay, c.dvth_p * 1e3, c.dvth_n * 1e3) for c in traj.checkpoints),
    )


def events_csv(traj: AvsTrajectory) -> str:
    rows = [
        (ev.t, "step", f"{ev.v_old:.4f}->{ev.v_new:.4f} V delay {ev.delay_before:.6f}->{ev.delay_after:.6f} ns")
        for ev in traj.steps
    ]
    rows += [(t, "cap", msg) for t, msg in traj.violations]
    if traj.domain_warnings:
        rows.append((traj.horizon, "domain", f"{traj.domain_warnings} delay evaluations outside the fit box"))
    rows.sort(key=lambda r: r[0])
    return format_csv(("t_s", "event", "detail"), rows)


def read_trajectory_csv(text: str) -> list[Checkpoint]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines or lines[0].split(",") != ["t_s", "v_dd_v", "delay_ns", "dvth_p_mv", "dvth_n_mv"]:
        raise ValueError("not a trajectory CSV")
    out = []
    for ln in lines[1:]:
        t, v, d, p, n = (float(x) for x in ln.split(","))
        out.append(Checkpoint(t, v, d, p * 1e-3, n * 1e-3))
    return out


def simulate_thresholds(
    cfg: AvsConfig,
    aging: AgingParams,
    stats: WorkloadStats,
    model: DelaySurrogate,
    thresholds: dict[str, float],
    engine: AgingEngine | None = None,
) -> dict[str, AvsTrajectory]:
    """One AVS run per distinct threshold, shared by the names that use it."""
    engine = engine or AgingEngine(aging, stats, cfg.horizon)
    runs: dict[float, AvsTrajectory] = {}
    out = {}
    for name, thr in thresholds.items():
        if thr not in runs:
            runs[thr] = simulate(replace(cfg, delay_threshold=thr), aging, stats, model, engine)
        out[name] = runs[thr]
    return out

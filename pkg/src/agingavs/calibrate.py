"""Least-squares tuning of the technology parameters against reference aging numbers.

The foundry parameters behind the reference table are proprietary, so the
shipped defaults are the output of this fit rather than a prediction.  Two
stages keep it cheap:

1. aging: BTI magnitude, BTI voltage acceleration, permanent fraction and the
   two HCI laws are fitted to the three constant-voltage rows;
2. delay: the threshold weights of the synthetic delay generator are
   centred in the window where the AVS run takes the reference step count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from .aging import T_AMBIENT, AgingParams, HciParams, TrapSpecies, arrhenius
from .avs import AvsConfig, compare_scenarios, simulate
from .delay import SyntheticDelayConfig, fit, synthetic_ground_truth
from .waveform import AgingEngine, WorkloadStats


@dataclass(frozen=True)
class Targets:
    """Reference shifts in volts: rows a (V_nom, no recovery), b (V_nom,
    recovery), c (V_max, no recovery), d (AVS)."""

    pmos_hci: tuple[float, float, float, float] = (0.0198, 0.0182, 0.0273, 0.0237)
    pmos_bti: tuple[float, float, float, float] = (0.0622, 0.0549, 0.1034, 0.0816)
    nmos: tuple[float, float, float, float] = (0.0505, 0.0461, 0.1052, 0.0851)
    v_max: float = 1.02
    steps: int = 12
    v_eff: float = 0.99

    @property
    def pmos_total(self) -> tuple[float, ...]:
        return tuple(h + b for h, b in zip(self.pmos_hci, self.pmos_bti))


COMPONENT_WEIGHT = 0.3
YEAR = 3.1536e7

# Starting point of the aging fit.  Each law is sized by its shift at 0.9 V
# after a reference stress time, so the numbers below read in volts.  The
# time exponents are not fitted: they set how evenly the AVS steps spread
# over the lifetime and were chosen jointly with the delay generator.
SEED_BTI = (
    # (shift at 5 y, n_c, r_perm, emission rate at 25 C in 1/s)
    (0.025, 0.07, 0.25, 1e3),
    (0.038, 0.11, 0.65, 1e1),
)
SEED_BTI_B = (4.23, 3.0, 0.3, 0.1)  # B_c, B_e, beta_e, E_a
SEED_HCI = {"p": (0.019, 2.8, 0.22), "n": (0.0483, 6.5, 0.22)}  # shift at 10 y, B_h, n_h
SEED_HCI_EA = 0.1


def seed_aging(stats: WorkloadStats, T: float = T_AMBIENT) -> AgingParams:
    b_c, b_e, beta, e_a = SEED_BTI_B
    traps = []
    for mag, n, r, lam in SEED_BTI:
        a_c = mag / (math.exp(b_c * 0.9) * arrhenius(e_a, T) * (5 * YEAR) ** n)
        traps.append(TrapSpecies(a_c, b_c, e_a, n, lam / arrhenius(e_a, T), b_e, e_a, beta, r))
    # HCI stress time over 10 years: toggles times ramp time, with ~0.3 of each
    # ramp counted as stress at full voltage
    t_h = 0.3 * (stats.transition_time / stats.t_clk) * stats.toggle_rate * 10 * YEAR
    hci = {
        dev: HciParams(mag / (math.exp(b * 0.9) * arrhenius(SEED_HCI_EA, T) * t_h**n), b, SEED_HCI_EA, n)
        for dev, (mag, b, n) in SEED_HCI.items()
    }
    return AgingParams(tuple(traps), hci["p"], hci["n"], temperature=T)



def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def _apply_aging(base: AgingParams, x: np.ndarray) -> AgingParams:
    log_ac, b_c, dr, log_hp, b_hp, log_hn, b_hn = (float(v) for v in x)
    traps = tuple(
        replace(
            sp,
            A_c=sp.A_c * math.exp(log_ac + (sp.B_c - b_c) * 0.9),
            B_c=b_c,
            r_perm=_sigmoid(_logit(sp.r_perm) + dr),
        )
        for sp in base.bti_traps
    )
    hp = replace(base.hci_p, A_h=base.hci_p.A_h * math.exp(log_hp + (base.hci_p.B_h - b_hp) * 0.9), B_h=b_hp)
    hn = replace(base.hci_n, A_h=base.hci_n.A_h * math.exp(log_hn + (base.hci_n.B_h - b_hn) * 0.9), B_h=b_hn)
    return replace(base, bti_traps=traps, hci_p=hp, hci_n=hn)


def _aging_x0(base: AgingParams) -> np.ndarray:
    return np.array([0.0, base.bti_traps[0].B_c, 0.0, 0.0, base.hci_p.B_h, 0.0, base.hci_n.B_h])


def constant_rows(
    aging: AgingParams, stats: WorkloadStats, cfg: AvsConfig, v_max: float, model
) -> dict[str, tuple[float, float, float]]:
    """(pmos_hci, pmos_bti, nmos) for rows a, b and c."""
    engine = AgingEngine(aging, stats, cfg.horizon)
    out = {}
    for name, v, rec in (("a", cfg.v_init, False), ("b", cfg.v_init, True), ("c", v_max, False)):
        run_cfg = replace(cfg, recovery=rec)
        st = simulate(run_cfg, aging, stats, model, engine, stepping=False, v_hold=v).final
        out[name] = (st.pmos.hci, st.pmos.bti, st.nmos.total)
    return out


def _row_residuals(rows: dict, targets: Targets, names: str) -> list[float]:
    res = []
    for name in names:
        i = "abcd".index(name)
        hci, bti, nm = rows[name]
        res.append((hci + bti) / targets.pmos_total[i] - 1.0)
        res.append(nm / targets.nmos[i] - 1.0)
        res.append(COMPONENT_WEIGHT * (hci / targets.pmos_hci[i] - 1.0))
        res.append(COMPONENT_WEIGHT * (bti / targets.pmos_bti[i] - 1.0))
    return res


def calibrate_aging(
    base: AgingParams,
    stats: WorkloadStats,
    cfg: AvsConfig,
    model,
    targets: Targets = Targets(),
    verbose: bool = False,
) -> AgingParams:
    """Fit the aging knobs to rows a, b and c at the target V_max."""

    def resid(x):
        rows = constant_rows(_apply_aging(base, x), stats, cfg, targets.v_max, model)
        return _row_residuals(rows, targets, "abc")

    sol = least_squares(resid, _aging_x0(base), diff_step=1e-4, x_scale="jac", verbose=2 if verbose else 0)
    return _apply_aging(base, sol.x)


# --------------------------------------------------------------------------
# Delay generator
# --------------------------------------------------------------------------


def _scaled(base: SyntheticDelayConfig, w: float, ratio: float) -> SyntheticDelayConfig:
    return replace(base, w_p=w, w_n=w * ratio)


def run_with_generator(
    aging: AgingParams,
    stats: WorkloadStats,
    cfg: AvsConfig,
    gen: SyntheticDelayConfig,
    engine: AgingEngine | None = None,
    degree: int = 6,
):
    model = fit(synthetic_ground_truth(gen), degree)
    traj = simulate(cfg, aging, stats, model, engine or AgingEngine(aging, stats, cfg.horizon))
    return traj, model


def step_window(
    aging: AgingParams,
    stats: WorkloadStats,
    cfg: AvsConfig,
    gen: SyntheticDelayConfig,
    steps: int,
    engine: AgingEngine | None = None,
    lo: float = 0.05,
    hi: float = 2.0,
    iters: int = 10,
) -> tuple[float, float]:
    """Range of the threshold weight ``w_p`` (``w_n`` tied by the current
    ratio) over which the AVS run takes exactly ``steps`` steps.

    The step count is a non-decreasing integer function of the weight, so a
    least-squares fit cannot see it; two bisections bracket the window.
    """
    engine = engine or AgingEngine(aging, stats, cfg.horizon)
    ratio = gen.w_n / gen.w_p

    def n_steps(w):
        return run_with_generator(aging, stats, cfg, _scaled(gen, w, ratio), engine)[0].n_steps

    def crossing(level):
        a, b = lo, hi
        for _ in range(iters):
            mid = 0.5 * (a + b)
            if n_steps(mid) <= level:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    return crossing(steps - 1), crossing(steps)


def calibrate_delay(
    aging: AgingParams,
    stats: WorkloadStats,
    cfg: AvsConfig,
    gen: SyntheticDelayConfig,
    targets: Targets = Targets(),
    engine: AgingEngine | None = None,
) -> SyntheticDelayConfig:
    """Centre the threshold weights in the window giving the target step count.

    ``alpha``, ``vth0`` and the NMOS/PMOS weight ratio are kept; they set how
    fast the delay grows between steps and are chosen by hand (see the
    shipped defaults).
    """
    a, b = step_window(aging, stats, cfg, gen, targets.steps, engine)
    if not b > a:
        raise RuntimeError(f"no weight gives exactly {targets.steps} steps")
    return _scaled(gen, 0.5 * (a + b), gen.w_n / gen.w_p)


def calibrate(
    base: AgingParams,
    stats: WorkloadStats,
    cfg: AvsConfig,
    gen: SyntheticDelayConfig,
    targets: Targets = Targets(),
    verbose: bool = False,
):
    """Both stages, then the full comparison with the fitted values."""
    model = fit(synthetic_ground_truth(gen), 6)
    aging = calibrate_aging(base, stats, cfg, model, targets, verbose)
    gen = calibrate_delay(aging, stats, cfg, gen, targets)
    model = fit(synthetic_ground_truth(gen), 6)
    report = compare_scenarios(cfg, aging, stats, model)
    return aging, gen, report

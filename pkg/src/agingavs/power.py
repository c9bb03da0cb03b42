"""Lifetime power from supply-voltage trajectories."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .avs import AvsTrajectory
from .io import format_csv
from .policy import OPERATORS, PolicyError


@dataclass(frozen=True)
class PowerModel:
    """``P = P0 * (V/v_ref)**exponent`` plus an optional leakage share.

    ``leakage`` is the fraction of ``P0`` drawn as leakage at ``v_ref``; it
    is scaled linearly with voltage (constant leakage current).
    """

    p0: float = 0.85
    v_ref: float = 0.90
    exponent: float = 2.0
    leakage: float = 0.0

    def __post_init__(self):
        if self.p0 <= 0 or self.exponent <= 0 or self.v_ref <= 0:
            raise ValueError("p0, v_ref and exponent must be positive")
        if not 0.0 <= self.leakage < 1.0:
            raise ValueError("leakage fraction must be in [0, 1)")


def effective_voltage(traj: AvsTrajectory) -> float:
    return traj.v_eff


def lifetime_power(pm: PowerModel, v_eff: float) -> float:
    if v_eff <= 0:
        raise ValueError("v_eff must be positive")
    r = v_eff / pm.v_ref
    return pm.p0 * ((1.0 - pm.leakage) * r**pm.exponent + pm.leakage * r)


@dataclass(frozen=True)
class SavingsRow:
    component: str
    v_final: float
    dvth_p: float
    dvth_n: float
    v_eff: float
    p_avg: float
    saving: float  # fraction of baseline power


@dataclass(frozen=True)
class SavingsReport:
    baseline: SavingsRow
    rows: tuple[SavingsRow, ...]

    @property
    def average_saving(self) -> float:
        return sum(r.saving for r in self.rows) / len(self.rows)

    @property
    def average_power(self) -> float:
        return sum(r.p_avg for r in self.rows) / len(self.rows)

    def max_reduction(self) -> tuple[float, float]:
        """Largest relative drop in (PMOS, NMOS) shift versus the baseline."""
        b = self.baseline
        return (
            max(1.0 - r.dvth_p / b.dvth_p for r in self.rows),
            max(1.0 - r.dvth_n / b.dvth_n for r in self.rows),
        )

    def csv(self) -> str:
        def cells(r: SavingsRow, saving):
            return (r.component, r.v_final, r.dvth_p * 1e3, r.dvth_n * 1e3, r.v_eff, r.p_avg, saving)

        rows = [cells(self.baseline, "")]
        rows += [cells(r, r.saving * 100) for r in self.rows]
        rows.append(("average", "", "", "", "", self.average_power, self.average_saving * 100))
        return format_csv(
            ("component", "v_final_v", "dvth_p_mv", "dvth_n_mv", "v_eff_v", "p_avg_w", "saving_pct"), rows
        )

    def text(self) -> str:
        head = f"{'component':<10}{'V_final':>8}{'dVth_p':>8}{'dVth_n':>8}{'V_eff':>7}{'P_avg':>7}{'saving':>8}"
        lines = [head, "-" * len(head)]

        def line(r: SavingsRow, saving: str) -> str:
            return (
                f"{r.component:<10}{r.v_final:8.2f}{r.dvth_p * 1e3:8.1f}{r.dvth_n * 1e3:8.1f}"
                f"{r.v_eff:7.3f}{r.p_avg:7.3f}{saving:>8}"
            )

        lines.append(line(self.baseline, "/"))
        lines += [line(r, f"{r.saving * 100:.1f}%") for r in self.rows]
        lines.append(f"{'average':<10}{'':>8}{'':>8}{'':>8}{'':>7}{self.average_power:7.3f}{self.average_saving * 100:7.1f}%")
        return "\n".join(lines) + "\n"


def _row(name: str, traj: AvsTrajectory, pm: PowerModel, p_base: float | None) -> SavingsRow:
    v_eff = effective_voltage(traj)
    p = lifetime_power(pm, v_eff)
    saving = 0.0 if p_base is None else 1.0 - p / p_base
    return SavingsRow(name, traj.v_final, traj.dvth_p, traj.dvth_n, v_eff, p, saving)


def savings_report(
    per_operator: Mapping[str, AvsTrajectory], baseline: AvsTrajectory, pm: PowerModel = PowerModel()
) -> SavingsReport:
    missing = [op for op in OPERATORS if op not in per_operator]
    if missing:
        raise PolicyError(f"no trajectory for operators: {', '.join(missing)}")
    base = _row("None", baseline, pm, None)
    rows = tuple(_row(op, per_operator[op], pm, base.p_avg) for op in OPERATORS)
    return SavingsReport(base, rows)

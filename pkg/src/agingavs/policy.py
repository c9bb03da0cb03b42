"""Resilience-aware delay thresholds.

Under uniform aging every path delay scales by the same factor ``s``.  A path
with nominal delay ``d`` starts failing once ``s*d > t_clk`` and contributes
its activation rate to the bit error rate.  Each operator tolerates some BER
for a given accuracy budget; the largest scale keeping the BER within that
bound, times the nominal critical delay, is the operator's ``delay_max``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import truncnorm

OPERATORS = ("Q", "K", "V", "QKT", "SV", "O", "Gate", "Up", "Down")
ALIASES = {"QKᵀ": "QKT", "QK^T": "QKT", "QKt": "QKT"}
DEFAULT_BITS = 32
DEFAULT_S_CAP = 2.0
NOMINAL_DELAY = 1.542e-9


class PolicyError(ValueError):
    pass


def canonical_operator(name: str) -> str:
    name = ALIASES.get(name.strip(), name.strip())
    if name not in OPERATORS:
        raise PolicyError(f"unknown operator {name!r}; expected one of {', '.join(OPERATORS)}")
    return name


@dataclass(frozen=True)
class PathPopulation:
    delays: tuple[float, ...]  # seconds
    rates: tuple[float, ...]
    bits: int = DEFAULT_BITS

    def __post_init__(self):
        if not self.delays:
            raise PolicyError("path population is empty")
        if len(self.delays) != len(self.rates):
            raise PolicyError("delay and activation-rate counts differ")
        if any(d <= 0 for d in self.delays) or any(a < 0 for a in self.rates):
            raise PolicyError("path delays must be positive and activation rates non-negative")
        if self.bits < 1:
            raise PolicyError("bit count must be >= 1")

    @property
    def critical(self) -> float:
        return max(self.delays)

    @property
    def max_ber(self) -> float:
        return sum(self.rates) / self.bits


def ber_of_scale(pop: PathPopulation, s: float, t_clk: float) -> float:
    """BER when all delays are multiplied by ``s``: right-continuous step function."""
    if s < 1.0:
        raise PolicyError(f"scale must be >= 1, got {s}")
    return sum(a for d, a in zip(pop.delays, pop.rates) if s * d > t_clk) / pop.bits


@dataclass(frozen=True)
class ResilienceProfile:
    operator: str
    bers: tuple[float, ...]
    losses: tuple[float, ...]

    def __post_init__(self):
        if not self.bers:
            raise PolicyError(f"{self.operator}: empty resilience profile")
        if len(self.bers) != len(self.losses):
            raise PolicyError(f"{self.operator}: BER and loss counts differ")
        if any(not 0.0 < b <= 1.0 for b in self.bers):
            raise PolicyError(f"{self.operator}: BER samples must lie in (0, 1]")
        if any(b1 <= b0 for b0, b1 in zip(self.bers, self.bers[1:])):
            raise PolicyError(f"{self.operator}: BER samples must be strictly increasing")
        if any(l1 < l0 for l0, l1 in zip(self.losses, self.losses[1:])):
            raise PolicyError(f"{self.operator}: accuracy loss must be non-decreasing in BER")

    def loss(self, ber: float) -> float:
        """Accuracy loss, piecewise linear in log10(BER), clamped at the ends."""
        x = np.log10(self.bers)
        return float(np.interp(math.log10(ber), x, self.losses))


def tolerable_ber(profile: ResilienceProfile, budget: float) -> tuple[float, str]:
    """Largest BER whose predicted loss stays within ``budget``.

    The flag is ``""`` for an interior answer, ``"max"`` when even the largest
    sampled BER is within budget and ``"min"`` when even the smallest is not.
    """
    if budget < 0:
        raise PolicyError("budget must be >= 0")
    bers, losses = profile.bers, profile.losses
    if losses[0] > budget:
        return bers[0], "min"
    i = max(k for k, l in enumerate(losses) if l <= budget)
    if i == len(bers) - 1:
        return bers[-1], "max"
    x0, x1 = math.log10(bers[i]), math.log10(bers[i + 1])
    l0, l1 = losses[i], losses[i + 1]
    return 10.0 ** (x0 + (budget - l0) / (l1 - l0) * (x1 - x0)), ""


@dataclass(frozen=True)
class PolicyEntry:
    operator: str
    tolerable_ber: float
    scale: float
    delay_max: float  # seconds
    flag: str = ""


def delay_max_for(
    pop: PathPopulation,
    profile: ResilienceProfile,
    budget: float,
    t_clk: float,
    nominal_delay: float | None = None,
    s_cap: float = DEFAULT_S_CAP,
) -> PolicyEntry:
    """Threshold for one operator.

    ``s*`` is the breakpoint ``t_clk/d_p`` of the first path (in order of
    decreasing delay) whose failure would push the BER above the tolerable
    level, or ``s_cap`` if every path may fail.
    """
    nominal = pop.critical if nominal_delay is None else nominal_delay
    ber_star, flag = tolerable_ber(profile, budget)
    order = sorted(range(len(pop.delays)), key=lambda i: -pop.delays[i])
    cum = 0.0
    for i in order:
        cum += pop.rates[i] / pop.bits
        if cum > ber_star:
            d = pop.delays[i]
            # t_clk * (nominal / d) rather than (t_clk / d) * nominal, so the
            # critical path itself maps to t_clk exactly
            return PolicyEntry(profile.operator, ber_star, t_clk / d, max(t_clk * (nominal / d), t_clk), flag)
    return PolicyEntry(profile.operator, ber_star, s_cap, max(s_cap * nominal, t_clk), flag or "cap")


@dataclass(frozen=True)
class PolicyTable:
    entries: tuple[PolicyEntry, ...]
    budget: float

    def __getitem__(self, op: str) -> PolicyEntry:
        op = canonical_operator(op)
        return next(e for e in self.entries if e.operator == op)

    def csv(self) -> str:
        from .io import format_csv

        return format_csv(
            ("operator", "tolerable_ber", "scale", "delay_max_ns"),
            ((e.operator, e.tolerable_ber, e.scale, e.delay_max * 1e9) for e in self.entries),
        )


def build_policy(
    populations: PathPopulation | Mapping[str, PathPopulation],
    profiles: Mapping[str, ResilienceProfile],
    budget: float,
    t_clk: float = 1.6e-9,
    nominal_delay: float | None = None,
    s_cap: float = DEFAULT_S_CAP,
) -> PolicyTable:
    missing = [op for op in OPERATORS if op not in profiles]
    if missing:
        raise PolicyError(f"resilience profiles missing for operators: {', '.join(missing)}")
    entries = []
    for op in OPERATORS:
        pop = populations if isinstance(populations, PathPopulation) else populations.get(op)
        if pop is None:
            raise PolicyError(f"no path population for operator {op}")
        entries.append(delay_max_for(pop, profiles[op], budget, t_clk, nominal_delay, s_cap))
    return PolicyTable(tuple(entries), budget)


# --------------------------------------------------------------------------
# Fixtures and files
# --------------------------------------------------------------------------

POPULATION_SEED = 20240611
POPULATION_SIGMA = 15e-12
DEFAULT_ACTIVATION = 0.0075

# Illustrative loss curves (fraction of accuracy lost against BER).  The
# knees follow the spread reported for transformer operators: the output
# projection degrades from ~1e-7, the down projection from ~1e-6, the key
# projection from ~1e-5 and the rest stay error-free up to ~1e-4.  The points
# near 1e-2 are set so a 0.5% budget lets 75 (O), 95 (Down) and 99 (K) of the
# 100 fixture paths fail, while the tolerant operators accept every path.
# Replace with measured injection data.
_BER_GRID = (1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 3e-2, 1e-1)
_LOSS_CURVES = {
    "tolerant": (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0002, 0.0008, 0.0030, 0.010),
    "K": (0.0, 0.0, 0.0, 0.0, 0.0001, 0.0008, 0.0018, 0.0030, 0.005595, 0.050),
    "Down": (0.0, 0.0, 0.0, 0.0001, 0.0006, 0.0015, 0.0025, 0.0035, 0.005545, 0.120),
    "O": (0.0, 0.0, 0.0001, 0.0004, 0.0010, 0.0020, 0.0030, 0.0040, 0.005924, 0.300),
}
_OPERATOR_CURVE = {"K": "K", "O": "O", "Down": "Down"}


def generate_population(
    n: int = 100,
    nominal: float = NOMINAL_DELAY,
    sigma: float = POPULATION_SIGMA,
    rate: float = DEFAULT_ACTIVATION,
    bits: int = DEFAULT_BITS,
    seed: int = POPULATION_SEED,
) -> PathPopulation:
    """Critical path at ``nominal`` plus ``n-1`` paths from a normal truncated above at it."""
    rng = np.random.default_rng(seed)
    draws = truncnorm.rvs(-np.inf, 0.0, loc=nominal, scale=sigma, size=n - 1, random_state=rng)
    delays = (nominal,) + tuple(float(np.round(d, 16)) for d in draws)
    return PathPopulation(delays, (rate,) * n, bits)


def default_profiles() -> dict[str, ResilienceProfile]:
    return {
        op: ResilienceProfile(op, _BER_GRID, _LOSS_CURVES[_OPERATOR_CURVE.get(op, "tolerant")])
        for op in OPERATORS
    }


def read_population(path: str | Path | None = None, bits: int = DEFAULT_BITS) -> PathPopulation:
    text = _read_text(path, "paths.csv")
    rows = _csv_rows(text, ("path_id", "delay_ns", "activation_rate"), path)
    try:
        return PathPopulation(
            tuple(float(r[1]) * 1e-9 for r in rows), tuple(float(r[2]) for r in rows), bits
        )
    except ValueError as exc:
        raise PolicyError(f"{path or 'paths.csv'}: {exc}") from None


def format_population(pop: PathPopulation) -> str:
    lines = ["path_id,delay_ns,activation_rate"]
    lines += [f"{i},{d * 1e9:.12f},{a!r}" for i, (d, a) in enumerate(zip(pop.delays, pop.rates))]
    return "\n".join(lines) + "\n"


def read_profiles(path: str | Path | None = None) -> dict[str, ResilienceProfile]:
    text = _read_text(path, "resilience.csv")
    rows = _csv_rows(text, ("operator", "ber", "accuracy_loss"), path)
    pts: dict[str, list[tuple[float, float]]] = {}
    try:
        for r in rows:
            pts.setdefault(canonical_operator(r[0]), []).append((float(r[1]), float(r[2])))
    except ValueError as exc:
        raise PolicyError(f"{path or 'resilience.csv'}: {exc}") from None
    out = {}
    for op, p in pts.items():
        p.sort()
        out[op] = ResilienceProfile(op, tuple(b for b, _ in p), tuple(l for _, l in p))
    return out


def format_profiles(profiles: Mapping[str, ResilienceProfile]) -> str:
    lines = ["operator,ber,accuracy_loss"]
    for op in OPERATORS:
        if op in profiles:
            prof = profiles[op]
            lines += [f"{op},{b:.6g},{l:.6g}" for b, l in zip(prof.bers, prof.losses)]
    return "\n".join(lines) + "\n"


def _read_text(path, packaged: str) -> str:
    if path is None:
        return resources.files("agingavs.data").joinpath(packaged).read_text()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise PolicyError(f"cannot read {path}: {exc.strerror}") from None


def _csv_rows(text: str, header: Sequence[str], path) -> list[list[str]]:
    rows = [r for r in csv.reader(ln for ln in text.splitlines() if ln and not ln.startswith("#"))]
    if not rows or tuple(h.strip() for h in rows[0]) != tuple(header):
        raise PolicyError(f"{path or 'packaged data'}: expected header {','.join(header)}")
    return [[c.strip() for c in r] for r in rows[1:] if r]

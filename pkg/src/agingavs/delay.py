"""Critical-path delay as a polynomial in (dVth_p, dVth_n, V_DD).

The surrogate is fitted by least squares on sweep samples, either read from a
CSV exported by a circuit simulator or produced by the built-in synthetic
generator.  Delays are in nanoseconds, voltages in volts.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

TOTAL = "total"
TENSOR = "tensor"
VARIABLES = ("dvth_p", "dvth_n", "vdd")
SWEEP_HEADER = ("dvth_p_v", "dvth_n_v", "vdd_v", "delay_ns")
# relative pivot size below which a scaled design column counts as dependent
RANK_RTOL = 1e-10


class DelayModelError(ValueError):
    """Invalid sweep data or a failed fit."""


@dataclass(frozen=True)
class DelaySample:
    dvth_p: float
    dvth_n: float
    v_dd: float
    delay: float
    transition_time: float | None = None

    def __post_init__(self):
        if not self.delay > 0:
            raise DelayModelError(f"delay must be positive, got {self.delay}")
        if not self.v_dd > 0:
            raise DelayModelError(f"v_dd must be positive, got {self.v_dd}")
        if self.dvth_p < 0 or self.dvth_n < 0:
            raise DelayModelError("threshold shifts must be non-negative")


def monomial_exponents(degree: int, basis: str = TOTAL) -> list[tuple[int, int, int]]:
    """Exponent triples of the basis, graded by total degree then lexicographically."""
    if degree < 0:
        raise DelayModelError(f"degree must be >= 0, got {degree}")
    rng = range(degree + 1)
    if basis == TOTAL:
        exps = [e for e in itertools.product(rng, rng, rng) if sum(e) <= degree]
    elif basis == TENSOR:
        exps = list(itertools.product(rng, rng, rng))
    else:
        raise DelayModelError(f"unknown basis {basis!r}")
    return sorted(exps, key=lambda e: (sum(e), tuple(-x for x in e)))


def monomial_name(e: tuple[int, int, int]) -> str:
    parts = [f"{v}^{k}" if k > 1 else v for v, k in zip(VARIABLES, e) if k]
    return "*".join(parts) or "1"


def design_matrix(x: np.ndarray, exps: Sequence[tuple[int, int, int]]) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    deg = max(max(e) for e in exps)
    pw = [np.vander(x[:, j], deg + 1, increasing=True) for j in range(3)]
    return np.column_stack([pw[0][:, a] * pw[1][:, b] * pw[2][:, c] for a, b, c in exps])


@dataclass(frozen=True)
class Box:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def contains(self, p: Sequence[float], rtol: float = 1e-9) -> bool:
        for v, lo, hi in zip(p, self.lo, self.hi):
            pad = rtol * max(abs(lo), abs(hi), 1.0)
            if not lo - pad <= v <= hi + pad:
                return False
        return True


@dataclass(frozen=True)
class DelaySurrogate:
    """Fitted polynomial in normalised inputs ``u = (x - center) / scale``.

    ``coefficients[i]`` multiplies ``exponents[i]`` evaluated on ``u``.
    Normalising keeps the degree-6 coefficients well determined; use
    :meth:`coefficient` for the expansion in raw volts.
    """

    degree: int
    exponents: tuple[tuple[int, int, int], ...]
    coefficients: tuple[float, ...]
    domain: Box
    rmse: float = 0.0
    basis: str = TOTAL
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    scale: tuple[float, float, float] = (1.0, 1.0, 1.0)
    _horner: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.exponents) != len(self.coefficients):
            raise DelayModelError("exponent and coefficient counts differ")
        if any(not h > 0 for h in self.scale):
            raise DelayModelError("normalisation scales must be positive")
        # nested {c: {b: [coef of x^a]}} for Horner evaluation
        nested: dict[int, dict[int, list[float]]] = {}
        for (a, b, c), k in zip(self.exponents, self.coefficients):
            row = nested.setdefault(c, {}).setdefault(b, [0.0] * (self.degree + 1))
            row[a] += k
        object.__setattr__(self, "_horner", nested)

    @property
    def n_coefficients(self) -> int:
        return len(self.coefficients)

    def __call__(self, dvth_p, dvth_n, v_dd):
        """Delay in ns; works on scalars or broadcastable arrays."""
        x, y, z = (
            (np.asarray(v, dtype=float) - c) / h for v, c, h in zip((dvth_p, dvth_n, v_dd), self.center, self.scale)
        )
        out = 0.0
        for c in range(max(self._horner, default=0), -1, -1):
            inner = 0.0
            by_b = self._horner.get(c, {})
            for b in range(max(by_b, default=0), -1, -1):
                row = by_b.get(b)
                px = 0.0
                if row is not None:
                    for k in reversed(row):
                        px = px * x + k
                inner = inner * y + px
            out = out * z + inner
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out

    def in_domain(self, dvth_p: float, dvth_n: float, v_dd: float) -> bool:
        return self.domain.contains((dvth_p, dvth_n, v_dd))

    def eval_checked(self, dvth_p: float, dvth_n: float, v_dd: float) -> tuple[float, bool]:
        return float(self(dvth_p, dvth_n, v_dd)), self.in_domain(dvth_p, dvth_n, v_dd)

    def raw_coefficients(self) -> dict[tuple[int, int, int], float]:
        """The same polynomial expanded in raw (un-normalised) monomials."""
        out: dict[tuple[int, int, int], float] = {}
        shift = [
            [[math.comb(k, j) * (-c) ** (k - j) / h**k for j in range(k + 1)] for k in range(self.degree + 1)]
            for c, h in zip(self.center, self.scale)
        ]
        for (a, b, c), k in zip(self.exponents, self.coefficients):
            for i, j, l in itertools.product(range(a + 1), range(b + 1), range(c + 1)):
                key = (i, j, l)
                out[key] = out.get(key, 0.0) + k * shift[0][a][i] * shift[1][b][j] * shift[2][c][l]
        return out

    def coefficient(self, a: int, b: int, c: int) -> float:
        """Coefficient of the raw monomial ``dvth_p^a * dvth_n^b * vdd^c``."""
        return self.raw_coefficients().get((a, b, c), 0.0)


def evaluate(model: DelaySurrogate, dvth_p, dvth_n, v_dd):
    return model(dvth_p, dvth_n, v_dd)


def average_duplicates(samples: Iterable[DelaySample]) -> list[DelaySample]:
    """Collapse samples at identical coordinates into their mean (multi-path sweeps)."""
    groups: dict[tuple[float, float, float], list[DelaySample]] = {}
    for s in samples:
        groups.setdefault((s.dvth_p, s.dvth_n, s.v_dd), []).append(s)
    out = []
    for (p, n, v), ss in groups.items():
        trs = [s.transition_time for s in ss]
        tr = None if any(t is None for t in trs) else float(np.mean(trs))
        out.append(DelaySample(p, n, v, float(np.mean([s.delay for s in ss])), tr))
    return out


def fit(
    samples: Sequence[DelaySample],
    degree: int = 6,
    basis: str = TOTAL,
    target: str = "delay",
) -> DelaySurrogate:
    """Least-squares polynomial fit on inputs normalised to [-1, 1], with
    unit-RMS column scaling.

    ``target`` selects ``"delay"`` or ``"transition_time"``.  Rank
    deficiency is detected with column-pivoted QR and reported by monomial.
    """
    samples = average_duplicates(samples)
    exps = monomial_exponents(degree, basis)
    if len(samples) < len(exps):
        raise DelayModelError(
            f"{len(samples)} distinct samples cannot determine {len(exps)} coefficients"
        )
    x = np.array([(s.dvth_p, s.dvth_n, s.v_dd) for s in samples])
    vals = [getattr(s, target) for s in samples]
    if any(v is None for v in vals):
        raise DelayModelError(f"some samples lack {target}")
    y = np.asarray(vals, dtype=float)

    lo, hi = x.min(axis=0), x.max(axis=0)
    center = 0.5 * (lo + hi)
    half = np.where(hi > lo, 0.5 * (hi - lo), 1.0)
    A = design_matrix((x - center) / half, exps)
    scale = np.sqrt(np.mean(A * A, axis=0))
    if np.any(scale == 0):
        dead = [monomial_name(exps[i]) for i in np.flatnonzero(scale == 0)]
        raise DelayModelError(f"rank-deficient design: monomials {dead} vanish on all samples")
    As = A / scale

    _, R, piv = scipy.linalg.qr(As, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > RANK_RTOL * diag[0]))
    if rank < len(exps):
        bad = sorted(monomial_name(exps[i]) for i in piv[rank:])
        raise DelayModelError(
            f"rank-deficient design ({rank} of {len(exps)}): cannot separate monomials {bad}; "
            "widen the sweep or lower the degree"
        )
    z, *_ = np.linalg.lstsq(As, y, rcond=None)
    coef = z / scale
    resid = A @ coef - y
    rmse = float(np.sqrt(np.mean(resid * resid)))
    domain = Box(tuple(lo.tolist()), tuple(hi.tolist()))
    for lo, hi, name in zip(domain.lo, domain.hi, VARIABLES):
        if degree > 0 and hi <= lo:
            raise DelayModelError(f"sweep is degenerate along {name}")
    return DelaySurrogate(
        degree, tuple(exps), tuple(coef.tolist()), domain, rmse, basis, tuple(center.tolist()), tuple(half.tolist())
    )


def residual_rmse(model: DelaySurrogate, samples: Sequence[DelaySample]) -> float:
    samples = average_duplicates(samples)
    pred = model(*np.array([(s.dvth_p, s.dvth_n, s.v_dd) for s in samples]).T)
    d = pred - np.array([s.delay for s in samples])
    return float(np.sqrt(np.mean(d * d)))


# --------------------------------------------------------------------------
# Synthetic stand-in for circuit-simulator sweeps
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticDelayConfig:
    """Alpha-power-law delay ``K * V / (V - Vth0 - w_p*dp - w_n*dn)**alpha``.

    ``K`` is set so the fresh device at ``v_nom`` has ``nominal_delay``.
    Transition time is scaled from the same expression.
    """

    nominal_delay: float = 1.542
    nominal_transition: float = 0.1
    v_nom: float = 0.90
    vth0: float = 0.25
    alpha: float = 1.1
    w_p: float = 0.48894
    w_n: float = 0.146682
    dvth_p_range: tuple[float, float, float] = (0.0, 0.15, 0.01)
    dvth_n_range: tuple[float, float, float] = (0.0, 0.15, 0.01)
    vdd_range: tuple[float, float, float] = (0.85, 1.10, 0.01)

    def shape(self, dvth_p, dvth_n, v_dd):
        ov = np.asarray(v_dd) - self.vth0 - self.w_p * np.asarray(dvth_p) - self.w_n * np.asarray(dvth_n)
        if np.any(ov <= 0):
            raise DelayModelError("V_DD at or below the effective threshold voltage")
        return np.asarray(v_dd) / ov**self.alpha

    def delay(self, dvth_p, dvth_n, v_dd):
        scale = self.nominal_delay / self.shape(0.0, 0.0, self.v_nom)
        return scale * self.shape(dvth_p, dvth_n, v_dd)

    def transition(self, dvth_p, dvth_n, v_dd):
        return self.delay(dvth_p, dvth_n, v_dd) * (self.nominal_transition / self.nominal_delay)


def _grid(r: tuple[float, float, float]) -> np.ndarray:
    lo, hi, step = r
    if step <= 0 or hi < lo:
        raise DelayModelError(f"bad sweep range {r}")
    n = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(n + 1), 12)


def synthetic_ground_truth(cfg: SyntheticDelayConfig) -> list[DelaySample]:
    p, n, v = np.meshgrid(_grid(cfg.dvth_p_range), _grid(cfg.dvth_n_range), _grid(cfg.vdd_range), indexing="ij")
    p, n, v = p.ravel(), n.ravel(), v.ravel()
    d = cfg.delay(p, n, v)
    tr = cfg.transition(p, n, v)
    return [DelaySample(*row) for row in zip(p.tolist(), n.tolist(), v.tolist(), d.tolist(), tr.tolist())]


def delay_sensitivity(cfg: SyntheticDelayConfig, step: float = 0.010) -> dict[str, float]:
    """Relative delay change per ``step`` volts of each input at the nominal point."""
    d0 = cfg.delay(0.0, 0.0, cfg.v_nom)
    return {
        "dvth_p": float(cfg.delay(step, 0.0, cfg.v_nom) / d0 - 1),
        "dvth_n": float(cfg.delay(0.0, step, cfg.v_nom) / d0 - 1),
        "vdd": float(cfg.delay(0.0, 0.0, cfg.v_nom + step) / d0 - 1),
    }


# --------------------------------------------------------------------------
# Files
# --------------------------------------------------------------------------


def read_sweep(path: str | Path) -> list[DelaySample]:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = [h.strip() for h in next(rows, [])]
        if tuple(header[:4]) != SWEEP_HEADER:
            raise DelayModelError(f"{path}: expected header {','.join(SWEEP_HEADER)}[,transition_ns]")
        has_tr = len(header) > 4 and header[4] == "transition_ns"
        out = []
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            try:
                vals = [float(v) for v in row[: 5 if has_tr else 4]]
                out.append(DelaySample(*vals))
            except (ValueError, TypeError) as exc:
                raise DelayModelError(f"{path}:{lineno}: {exc}") from None
    if not out:
        raise DelayModelError(f"{path}: no samples")
    return out


def format_sweep(samples: Sequence[DelaySample]) -> str:
    has_tr = all(s.transition_time is not None for s in samples)
    cols = list(SWEEP_HEADER) + (["transition_ns"] if has_tr else [])
    lines = [",".join(cols)]
    for s in samples:
        vals = [s.dvth_p, s.dvth_n, s.v_dd, s.delay] + ([s.transition_time] if has_tr else [])
        lines.append(",".join(f"{v:.17g}" for v in vals))
    return "\n".join(lines) + "\n"


def format_model(model: DelaySurrogate) -> str:
    lines = [
        "[surrogate]",
        f"degree = {model.degree}",
        f"basis = {model.basis}",
        f"rmse_ns = {model.rmse:.17g}",
    ]
    for name, lo, hi in zip(VARIABLES, model.domain.lo, model.domain.hi):
        lines.append(f"domain_{name} = {lo:.17g} {hi:.17g}")
    for name, c, h in zip(VARIABLES, model.center, model.scale):
        lines.append(f"normal_{name} = {c:.17g} {h:.17g}")
    lines.append("[coefficients]")
    for (a, b, c), k in zip(model.exponents, model.coefficients):
        lines.append(f"{a} {b} {c} = {k:.17g}")
    return "\n".join(lines) + "\n"


def parse_model(text: str, source: str = "<model>") -> DelaySurrogate:
    meta: dict[str, str] = {}
    exps, coefs = [], []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise DelayModelError(f"{source}:{lineno}: expected 'key = value'")
        try:
            if section == "surrogate":
                meta[key.strip()] = val.strip()
            elif section == "coefficients":
                a, b, c = (int(t) for t in key.split())
                exps.append((a, b, c))
                coefs.append(float(val))
            else:
                raise DelayModelError(f"{source}:{lineno}: entry outside a section")
        except ValueError as exc:
            raise DelayModelError(f"{source}:{lineno}: {exc}") from None
    try:
        bounds = [tuple(float(t) for t in meta[f"domain_{v}"].split()) for v in VARIABLES]
        normal = [tuple(float(t) for t in meta.get(f"normal_{v}", "0 1").split()) for v in VARIABLES]
        return DelaySurrogate(
            degree=int(meta["degree"]),
            exponents=tuple(exps),
            coefficients=tuple(coefs),
            domain=Box(tuple(b[0] for b in bounds), tuple(b[1] for b in bounds)),
            rmse=float(meta.get("rmse_ns", "0")),
            basis=meta.get("basis", TOTAL),
            center=tuple(c for c, _ in normal),
            scale=tuple(h for _, h in normal),
        )
    except (KeyError, ValueError, IndexError) as exc:
        raise DelayModelError(f"{source}: malformed surrogate header ({exc})") from None


def load_model(path: str | Path) -> DelaySurrogate:
    path = Path(path)
    return parse_model(path.read_text(), str(path))


def check_monotone(model: DelaySurrogate, n: int = 9) -> bool:
    """Grid check: delay falls with V_DD and rises with both threshold shifts."""
    axes = [np.linspace(lo, hi, n) for lo, hi in zip(model.domain.lo, model.domain.hi)]
    p, q, v = np.meshgrid(*axes, indexing="ij")
    d = model(p, q, v)
    return bool(np.all(np.diff(d, axis=0) > 0) and np.all(np.diff(d, axis=1) > 0) and np.all(np.diff(d, axis=2) < 0))


def nominal_delay(model: DelaySurrogate, v_dd: float) -> float:
    return float(model(0.0, 0.0, v_dd))


def _isfinite(*vals: float) -> bool:
    return all(math.isfinite(v) for v in vals)

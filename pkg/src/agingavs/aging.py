"""BTI trapping/detrapping and HCI compact models.

Every law is a monotone function of stress time, so a device that has already
degraded can be continued at a new voltage by finding the stress time that
would have produced its current shift at that voltage (the equivalent time)
and advancing from there.

NMOS devices carry HCI only (PBTI is neglected); PMOS devices carry NBTI in
one or more trap species plus HCI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Protocol

K_B = 8.617333262e-5  # Boltzmann constant, eV/K
T_AMBIENT = 298.15

STRESS = "stress"
RECOVERY = "recovery"


class AgingDomainError(ValueError):
    """Raised for inputs outside a law's domain (negative time, NaN, ...)."""


class ContinuationError(ArithmeticError):
    """Raised when a degradation level cannot be reached at the requested voltage."""


def _check_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise AgingDomainError(f"{name} must be finite, got {v!r}")


def arrhenius(E_a: float, T: float) -> float:
    if T <= 0:
        raise AgingDomainError(f"temperature must be positive, got {T}")
    return math.exp(-E_a / (K_B * T))


@dataclass(frozen=True)
class TrapSpecies:
    """One BTI trap population.

    Capture follows ``A_c * exp(B_c*V) * arrhenius(E_ac) * t**n_c``; emission
    is a stretched exponential with rate ``A_e * exp(-B_e*V) * arrhenius(E_ae)``
    acting on the recoverable fraction ``1 - r_perm``.
    """

    A_c: float
    B_c: float
    E_ac: float
    n_c: float
    A_e: float
    B_e: float
    E_ae: float
    beta_e: float
    r_perm: float

    def __post_init__(self):
        if self.A_c < 0 or self.A_e < 0:
            raise AgingDomainError("prefactors must be non-negative")
        if not 0.0 <= self.r_perm <= 1.0:
            raise AgingDomainError(f"r_perm must be in [0, 1], got {self.r_perm}")
        if not 0.0 < self.beta_e <= 1.0:
            raise AgingDomainError(f"beta_e must be in (0, 1], got {self.beta_e}")
        if not 0.0 < self.n_c < 1.0:
            raise AgingDomainError(f"n_c must be in (0, 1), got {self.n_c}")

    def capture_prefactor(self, V: float, T: float) -> float:
        return self.A_c * math.exp(self.B_c * V) * arrhenius(self.E_ac, T)

    def emission_rate(self, V: float, T: float) -> float:
        return self.A_e * math.exp(-self.B_e * V) * arrhenius(self.E_ae, T)


@dataclass(frozen=True)
class HciParams:
    A_h: float
    B_h: float
    E_ah: float
    n_h: float

    def __post_init__(self):
        if self.A_h < 0:
            raise AgingDomainError("A_h must be non-negative")
        if not 0.0 < self.n_h < 1.0:
            raise AgingDomainError(f"n_h must be in (0, 1), got {self.n_h}")

    def prefactor(self, V: float, T: float) -> float:
        return self.A_h * math.exp(self.B_h * V) * arrhenius(self.E_ah, T)


@dataclass(frozen=True)
class AgingParams:
    """Technology parameters for both devices.

    ``hci_p`` and ``hci_n`` are separate because PMOS and NMOS HCI differ by
    more than a factor of two in the reference data.  ``dT_bti``/``dT_hci``
    are optional self-heating offsets added to ``temperature``.
    """

    bti_traps: tuple[TrapSpecies, ...]
    hci_p: HciParams
    hci_n: HciParams
    temperature: float = T_AMBIENT
    dT_bti: float = 0.0
    dT_hci: float = 0.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise AgingDomainError("temperature must be positive")
        object.__setattr__(self, "bti_traps", tuple(self.bti_traps))

    @property
    def T_bti(self) -> float:
        return self.temperature + self.dT_bti

    @property
    def T_hci(self) -> float:
        return self.temperature + self.dT_hci


# --------------------------------------------------------------------------
# Laws
# --------------------------------------------------------------------------


def bti_trapping(params: TrapSpecies, V_g: float, T: float, t: float) -> float:
    _check_finite(V_g=V_g, T=T, t=t)
    if t < 0:
        raise AgingDomainError(f"stress time must be >= 0, got {t}")
    if V_g < 0:
        raise AgingDomainError(f"gate voltage must be >= 0, got {V_g}")
    if t == 0:
        return 0.0
    return params.capture_prefactor(V_g, T) * t**params.n_c


def recovery_fraction(params: TrapSpecies, V_g_rec: float, T: float, t: float) -> float:
    """Surviving fraction of the recoverable component after ``t`` seconds."""
    if t == 0:
        return 1.0
    x = t * params.emission_rate(V_g_rec, T)
    return math.exp(-(x**params.beta_e))


def bti_detrapping(
    params: TrapSpecies, dvth_0: float, V_g_rec: float, T: float, t: float
) -> float:
    _check_finite(dvth_0=dvth_0, V_g_rec=V_g_rec, T=T, t=t)
    if dvth_0 < 0:
        raise AgingDomainError(f"initial shift must be >= 0, got {dvth_0}")
    if t < 0:
        raise AgingDomainError(f"recovery time must be >= 0, got {t}")
    r = params.r_perm
    return dvth_0 * (r + (1.0 - r) * recovery_fraction(params, V_g_rec, T, t))


def hci_law(params: HciParams, V: float, T: float, t: float) -> float:
    _check_finite(V=V, T=T, t=t)
    if t < 0:
        raise AgingDomainError(f"stress time must be >= 0, got {t}")
    if t == 0:
        return 0.0
    return params.prefactor(V, T) * t**params.n_h


class MonotoneLaw(Protocol):
    """A degradation law ``f(V, T, t)`` increasing in ``t`` with ``f(., ., 0) = 0``."""

    def __call__(self, V: float, T: float, t: float) -> float: ...


@dataclass(frozen=True)
class PowerLaw:
    """``prefactor(V, T) * t**n``; wraps trapping or HCI parameters.

    Supplies a closed-form inverse so continuation does not need root finding
    in the hot loop.  Laws without an ``invert`` method fall back to bisection
    in :func:`equivalent_time`.
    """

    params: TrapSpecies | HciParams

    @property
    def exponent(self) -> float:
        p = self.params
        return p.n_c if isinstance(p, TrapSpecies) else p.n_h

    def prefactor(self, V: float, T: float) -> float:
        p = self.params
        if isinstance(p, TrapSpecies):
            return p.capture_prefactor(V, T)
        return p.prefactor(V, T)

    def __call__(self, V: float, T: float, t: float) -> float:
        if isinstance(self.params, TrapSpecies):
            return bti_trapping(self.params, V, T, t)
        return hci_law(self.params, V, T, t)

    def invert(self, dvth: float, V: float, T: float) -> float:
        if dvth == 0:
            return 0.0
        K = self.prefactor(V, T)
        if K <= 0:
            raise ContinuationError(f"law has zero prefactor at V={V}; cannot reach {dvth}")
        return (dvth / K) ** (1.0 / self.exponent)


def _bisect_time(law, dvth, V, T, horizon, max_iter=200, rtol=1e-10):
    hi = 10.0 * horizon
    if law(V, T, hi) < dvth:
        raise ContinuationError(
            f"shift {dvth:.6g} V not reachable at V={V} within {hi:.3g} s "
            f"(law gives {law(V, T, hi):.6g} V)"
        )
    lo = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if law(V, T, mid) < dvth:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return 0.5 * (lo + hi)


def equivalent_time(
    law: MonotoneLaw, dvth: float, V: float, T: float, horizon: float = 3.1536e9
) -> float:
    """Stress time at which ``law`` reaches ``dvth`` at voltage ``V``."""
    _check_finite(dvth=dvth, V=V, T=T)
    if dvth < 0:
        raise AgingDomainError(f"shift must be >= 0, got {dvth}")
    if dvth == 0:
        return 0.0
    invert = getattr(law, "invert", None)
    if invert is not None:
        return invert(dvth, V, T)
    return _bisect_time(law, dvth, V, T, horizon)


def continue_law(law: PowerLaw, dvth: float, V: float, T: float, dt: float) -> float:
    """Advance a monotone law by ``dt`` from its current value at voltage ``V``."""
    if dt == 0:
        return dvth
    t_eq = law.invert(dvth, V, T) if dvth > 0 else 0.0
    return law(V, T, t_eq + dt)


# --------------------------------------------------------------------------
# State
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TrapState:
    """Per-species BTI shift split into permanent and recoverable parts.

    ``rec_peak`` is the recoverable part at the start of the current recovery
    phase (``None`` while the device is under stress); the recovery clock is
    recovered from ``rec / rec_peak`` on each segment.
    """

    perm: float = 0.0
    rec: float = 0.0
    rec_peak: float | None = None

    @property
    def total(self) -> float:
        return self.perm + self.rec


@dataclass(frozen=True)
class DeviceAgingState:
    traps: tuple[TrapState, ...] = ()
    hci: float = 0.0
    last_vg: float = 0.0
    teq_bti: tuple[float, ...] = ()
    teq_hci: float = 0.0

    @classmethod
    def fresh(cls, n_species: int = 0) -> DeviceAgingState:
        return cls(
            traps=tuple(TrapState() for _ in range(n_species)),
            teq_bti=(0.0,) * n_species,
        )

    @property
    def bti(self) -> float:
        return sum(s.total for s in self.traps)

    @property
    def total(self) -> float:
        return self.bti + self.hci


@dataclass(frozen=True)
class CircuitAgingState:
    """PMOS (NBTI + HCI) and NMOS (HCI) shifts of the monitored path."""

    pmos: DeviceAgingState = field(default_factory=DeviceAgingState)
    nmos: DeviceAgingState = field(default_factory=DeviceAgingState)

    @classmethod
    def fresh(cls, params: AgingParams) -> CircuitAgingState:
        return cls(
            pmos=DeviceAgingState.fresh(len(params.bti_traps)),
            nmos=DeviceAgingState.fresh(0),
        )


def stress_kernel(perm: float, rec: float, K: float, n: float, r: float, dt: float) -> tuple[float, float, float]:
    """Continue capture on ``perm + rec`` for ``dt``; returns (perm, rec, t_eq_after)."""
    x0 = perm + rec
    t_eq = (x0 / K) ** (1.0 / n) if x0 > 0.0 else 0.0
    inc = K * (t_eq + dt) ** n - x0
    if inc < 0.0:
        inc = 0.0
    return perm + r * inc, rec + (1.0 - r) * inc, t_eq + dt


def recover_kernel(rec: float, peak: float, rate: float, beta: float, dt: float) -> float:
    """Recoverable part after ``dt`` more seconds of emission from ``peak``."""
    if rec <= 0.0 or peak <= 0.0 or rate <= 0.0:
        return rec
    frac = rec / peak
    tau = (-math.log(frac)) ** (1.0 / beta) / rate if frac < 1.0 else 0.0
    out = peak * math.exp(-(((tau + dt) * rate) ** beta))
    return out if out < rec else rec


def _stress_trap(sp: TrapSpecies, st: TrapState, V: float, T: float, dt: float) -> tuple[TrapState, float]:
    perm, rec, teq = stress_kernel(st.perm, st.rec, sp.capture_prefactor(V, T), sp.n_c, sp.r_perm, dt)
    return TrapState(perm, rec, None), teq


def _recover_trap(sp: TrapSpecies, st: TrapState, V: float, T: float, dt: float) -> TrapState:
    peak = st.rec if st.rec_peak is None else st.rec_peak
    rec = recover_kernel(st.rec, peak, sp.emission_rate(V, T), sp.beta_e, dt)
    return TrapState(st.perm, rec, peak)


def apply_stress_segment(
    state: DeviceAgingState,
    params: AgingParams,
    V: float,
    dt: float,
    mode: str = STRESS,
    T: float | None = None,
) -> DeviceAgingState:
    """Advance every BTI species of ``state`` by one constant-voltage segment.

    HCI is left untouched; see :func:`agingavs.waveform.accumulate_hci`.
    """
    _check_finite(V=V, dt=dt)
    if dt < 0:
        raise AgingDomainError(f"segment duration must be >= 0, got {dt}")
    if dt == 0:
        return state
    T = params.T_bti if T is None else T
    if mode == STRESS:
        traps, teqs = [], []
        for sp, st in zip(params.bti_traps, state.traps):
            new, teq = _stress_trap(sp, st, V, T, dt)
            traps.append(new)
            teqs.append(teq)
        return replace(state, traps=tuple(traps), teq_bti=tuple(teqs), last_vg=V)
    if mode == RECOVERY:
        traps = tuple(
            _recover_trap(sp, st, V, T, dt) for sp, st in zip(params.bti_traps, state.traps)
        )
        return replace(state, traps=traps, last_vg=V)
    raise ValueError(f"mode must be {STRESS!r} or {RECOVERY!r}, got {mode!r}")

"""Run configuration: an INI file layered over the packaged defaults."""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .aging import AgingDomainError, AgingParams, HciParams, TrapSpecies
from .avs import AvsConfig
from .delay import SyntheticDelayConfig
from .io import config_hash
from .policy import DEFAULT_BITS, DEFAULT_S_CAP
from .power import PowerModel
from .waveform import WorkloadStats, read_transition_csv, read_workload_trace

SECONDS = {"s": 1.0, "d": 86400.0, "y": 3.1536e7}
DELAY_SOURCES = ("synthetic", "sweep", "model")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (exit code 2)."""


def default_text() -> str:
    return resources.files("agingavs.data").joinpath("defaults.ini").read_text()


def parse_duration(text: str) -> float:
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([sdy]?)\s*", str(text))
    if not m:
        raise ConfigError(f"bad duration {text!r}; use a number with an optional s, d or y suffix")
    try:
        value = float(m.group(1)) * SECONDS[m.group(2) or "s"]
    except ValueError:
        raise ConfigError(f"bad duration {text!r}") from None
    if value <= 0:
        raise ConfigError(f"duration must be positive, got {text!r}")
    return value


def _triple(text: str, what: str) -> tuple[float, float, float]:
    try:
        vals = tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{what}: expected 'lo hi step'") from None
    if len(vals) != 3:
        raise ConfigError(f"{what}: expected 'lo hi step'")
    return vals  # type: ignore[return-value]


@dataclass(frozen=True)
class DelaySource:
    kind: str
    path: Path | None
    degree: int
    basis: str
    synthetic: SyntheticDelayConfig


@dataclass(frozen=True)
class PolicyInputs:
    budget: float
    bits: int
    s_cap: float
    paths: Path | None
    resilience: Path | None


@dataclass(frozen=True)
class ExtrapolationSettings:
    branch_factor: int
    step_ratio: float
    gamma_intervals: int
    transition: tuple | None


@dataclass(frozen=True)
class RunConfig:
    aging: AgingParams
    stats: WorkloadStats
    delay: DelaySource
    avs: AvsConfig
    policy: PolicyInputs
    power: PowerModel
    extrapolation: ExtrapolationSettings
    out: Path
    text: str = field(repr=False)

    @property
    def hash(self) -> str:
        return config_hash(self.text)


def load_parser(path: str | Path | None = None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(default_text(), source="<defaults>")
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            cp.read_string(path.read_text(), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return cp


def apply_overrides(cp: configparser.ConfigParser, horizon=None, budget=None, out=None) -> None:
    if horizon is not None:
        cp["avs"]["horizon"] = str(horizon)
    if budget is not None:
        cp["policy"]["budget"] = str(budget)
    if out is not None:
        cp["run"]["out"] = str(out)


def dump(cp: configparser.ConfigParser) -> str:
    lines = []
    for name in cp.sections():
        lines.append(f"[{name}]")
        lines += [f"{k} = {v}" for k, v in cp[name].items()]
        lines.append("")
    return "\n".join(lines)


def _get(cp, section, key, conv=float):
    try:
        raw = cp[section][key]
    except KeyError:
        raise ConfigError(f"missing [{section}] {key}") from None
    try:
        return conv(raw)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None


def _path(cp, section, key, base: Path) -> Path | None:
    raw = cp[section].get(key, "").strip()
    if not raw:
        return None
    p = Path(raw)
    if not p.is_absolute():
        p = base / p
    if not p.is_file():
        raise ConfigError(f"[{section}] {key}: file not found: {p}")
    return p


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "yes", "true", "on"):
        return True
    if t in ("0", "no", "false", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def build(cp: configparser.ConfigParser, base_dir: Path = Path(".")) -> RunConfig:
    """Validate everything and assemble the typed configuration."""
    try:
        traps = []
        for name in sorted(s for s in cp.sections() if s.startswith("trap.")):
            traps.append(
                TrapSpecies(
                    **{k: _get(cp, name, k) for k in ("A_c", "B_c", "E_ac", "n_c", "A_e", "B_e", "E_ae", "beta_e", "r_perm")}
                )
            )
        hci = {
            dev: HciParams(**{k: _get(cp, f"hci.{dev}", k) for k in ("A_h", "B_h", "E_ah", "n_h")})
            for dev in ("p", "n")
        }
        aging = AgingParams(
            tuple(traps),
            hci["p"],
            hci["n"],
            temperature=_get(cp, "aging", "temperature_K"),
            dT_bti=_get(cp, "aging", "dT_bti"),
            dT_hci=_get(cp, "aging", "dT_hci"),
        )

        t_clk = _get(cp, "workload", "t_clk")
        tr_time = _get(cp, "workload", "transition_time")
        trace = _path(cp, "workload", "trace", base_dir)
        if trace is not None:
            stats = read_workload_trace(trace, t_clk, tr_time)
        else:
            stats = WorkloadStats(
                _get(cp, "workload", "duty_factor"), _get(cp, "workload", "toggle_rate"), t_clk, tr_time
            )

        tr_csv = _path(cp, "extrapolation", "transition_csv", base_dir)
        extrap = ExtrapolationSettings(
            branch_factor=_get(cp, "extrapolation", "branch_factor", int),
            step_ratio=_get(cp, "extrapolation", "step_ratio"),
            gamma_intervals=_get(cp, "extrapolation", "gamma_intervals", int),
            transition=read_transition_csv(tr_csv) if tr_csv else None,
        )
        if extrap.branch_factor < 2:
            raise ConfigError("[extrapolation] branch_factor must be >= 2")

        kind = cp["delay"].get("source", "").strip()
        if kind not in DELAY_SOURCES:
            raise ConfigError(f"[delay] source must be one of {', '.join(DELAY_SOURCES)}, got {kind!r}")
        dpath = None
        if kind == "sweep":
            dpath = _path(cp, "delay", "sweep_csv", base_dir)
            if dpath is None:
                raise ConfigError("[delay] source = sweep needs sweep_csv")
        elif kind == "model":
            dpath = _path(cp, "delay", "model_file", base_dir)
            if dpath is None:
                raise ConfigError("[delay] source = model needs model_file")
        syn = SyntheticDelayConfig(
            nominal_delay=_get(cp, "delay", "nominal_delay_ns"),
            nominal_transition=_get(cp, "delay", "nominal_transition_ns"),
            v_nom=_get(cp, "delay", "v_nom"),
            vth0=_get(cp, "delay", "vth0"),
            alpha=_get(cp, "delay", "alpha"),
            w_p=_get(cp, "delay", "w_p"),
            w_n=_get(cp, "delay", "w_n"),
            dvth_p_range=_triple(cp["delay"]["dvth_p_range"], "[delay] dvth_p_range"),
            dvth_n_range=_triple(cp["delay"]["dvth_n_range"], "[delay] dvth_n_range"),
            vdd_range=_triple(cp["delay"]["vdd_range"], "[delay] vdd_range"),
        )
        delay = DelaySource(kind, dpath, _get(cp, "delay", "degree", int), cp["delay"].get("basis", "total"), syn)
        if delay.basis not in ("total", "tensor"):
            raise ConfigError("[delay] basis must be total or tensor")

        thr = cp["avs"].get("delay_threshold", "").strip()
        avs = AvsConfig(
            v_init=_get(cp, "avs", "v_init"),
            v_step=_get(cp, "avs", "v_step"),
            v_max_cap=_get(cp, "avs", "v_max_cap"),
            t_clk=t_clk,
            delay_threshold=float(thr) if thr else None,
            horizon=_get(cp, "avs", "horizon", parse_duration),
            per_decade=_get(cp, "avs", "per_decade", int),
            locate_tol=_get(cp, "avs", "locate_tol", parse_duration),
            recovery=_get(cp, "avs", "recovery", _bool),
        )

        policy = PolicyInputs(
            budget=_get(cp, "policy", "budget"),
            bits=_get(cp, "policy", "bits", int),
            s_cap=_get(cp, "policy", "s_cap"),
            paths=_path(cp, "policy", "paths_csv", base_dir),
            resilience=_path(cp, "policy", "resilience_csv", base_dir),
        )
        if policy.budget < 0:
            raise ConfigError("[policy] budget must be >= 0")
        if policy.bits < 1 or policy.s_cap < 1:
            raise ConfigError("[policy] bits and s_cap must be >= 1")

        power = PowerModel(
            p0=_get(cp, "power", "p0"),
            v_ref=_get(cp, "power", "v_ref"),
            exponent=_get(cp, "power", "exponent"),
            leakage=_get(cp, "power", "leakage"),
        )
        out = Path(cp["run"].get("out", "out"))
    except ConfigError:
        raise
    except (AgingDomainError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(aging, stats, delay, avs, policy, power, extrap, out, _hashed_text(cp))


def _hashed_text(cp: configparser.ConfigParser) -> str:
    """Configuration text for provenance; the output directory does not affect results."""
    copy = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    copy.optionxform = str
    copy.read_dict({s: dict(cp[s]) for s in cp.sections()})
    copy.remove_option("run", "out")
    return dump(copy)


def load(path=None, horizon=None, budget=None, out=None) -> RunConfig:
    cp = load_parser(path)
    apply_overrides(cp, horizon, budget, out)
    base = Path(path).parent if path else Path(".")
    return build(cp, base)


__all__ = [
    "ConfigError",
    "RunConfig",
    "DEFAULT_BITS",
    "DEFAULT_S_CAP",
    "apply_overrides",
    "build",
    "default_text",
    "dump",
    "load",
    "load_parser",
    "parse_duration",
]

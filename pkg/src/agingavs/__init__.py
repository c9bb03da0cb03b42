"""Lifetime BTI/HCI aging simulation under adaptive voltage scaling."""

from .aging import AgingParams, CircuitAgingState, HciParams, TrapSpecies
from .avs import AvsConfig, AvsTrajectory, compare_scenarios, simulate
from .delay import DelaySurrogate, SyntheticDelayConfig, fit, synthetic_ground_truth
from .policy import build_policy, default_profiles, generate_population
from .power import PowerModel, lifetime_power, savings_report
from .waveform import AgingEngine, WorkloadStats

__version__ = "0.1.0"

__all__ = [
    "AgingEngine",
    "AgingParams",
    "AvsConfig",
    "AvsTrajectory",
    "CircuitAgingState",
    "DelaySurrogate",
    "HciParams",
    "PowerModel",
    "SyntheticDelayConfig",
    "TrapSpecies",
    "WorkloadStats",
    "build_policy",
    "compare_scenarios",
    "default_profiles",
    "fit",
    "generate_population",
    "lifetime_power",
    "savings_report",
    "simulate",
    "synthetic_ground_truth",
]

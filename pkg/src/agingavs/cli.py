"""Command-line front end.

Every command loads and validates the whole configuration first, computes
everything in memory and only then writes its outputs (atomically, each with
a ``# config_hash=...`` header).  Exit codes: 0 success, 1 computational
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .avs import AvsError, compare_scenarios, events_csv, read_trajectory_csv, simulate, simulate_thresholds, trajectory_csv
from .aging import AgingDomainError
from .config import ConfigError, RunConfig, apply_overrides, build, dump, load_parser
from .delay import DelayModelError, fit, format_model, load_model, read_sweep, synthetic_ground_truth
from .io import format_csv, write_atomic
from .policy import OPERATORS, PolicyError, build_policy, read_population, read_profiles
from .power import savings_report
from .waveform import AgingEngine, ExtrapolationError

COMMANDS = ("fit-delay", "simulate", "compare", "policy", "plotdata", "calibrate")
PLOT_COLUMNS = {
    "v_dd": lambda c: c.v_dd,
    "delay_ns": lambda c: c.delay,
    "dvth_p_mv": lambda c: c.dvth_p * 1e3,
    "dvth_n_mv": lambda c: c.dvth_n * 1e3,
}


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="agingavs", description="Aging-aware adaptive voltage scaling simulator.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("inputs", nargs="*", help="trajectory CSVs (plotdata only)")
    p.add_argument("--config", help="INI file layered over the packaged defaults")
    p.add_argument("--out", help="output directory (default from [run] out)")
    p.add_argument("--horizon", help="simulated lifetime, e.g. 10y, 30d, 3600s")
    p.add_argument("--budget", type=float, help="accuracy-loss budget as a fraction, e.g. 0.005")
    p.add_argument("--dump-defaults", action="store_true", help="print the effective configuration and exit")
    return p


# --------------------------------------------------------------------------
# Shared pieces
# --------------------------------------------------------------------------


def delay_model(rc: RunConfig):
    src = rc.delay
    try:
        if src.kind == "model":
            return load_model(src.path)
        samples = read_sweep(src.path) if src.kind == "sweep" else synthetic_ground_truth(src.synthetic)
    except DelayModelError as exc:
        # unreadable or inconsistent input is a configuration problem
        raise UsageError(str(exc)) from None
    return fit(samples, src.degree, src.basis)


def engine_for(rc: RunConfig) -> AgingEngine:
    ex = rc.extrapolation
    return AgingEngine(
        rc.aging, rc.stats, rc.avs.horizon, N=ex.branch_factor, gamma_intervals=ex.gamma_intervals,
        transition=ex.transition, step_ratio=ex.step_ratio,
    )


def _summary_line(name: str, traj) -> str:
    s = traj.summary()
    flags = " CAPPED" if traj.capped else ""
    if traj.domain_warnings:
        flags += f" ({traj.domain_warnings} delay evaluations outside the fit box)"
    return (
        f"{name}: V_final {s['v_final']:.2f} V after {s['steps']} steps, "
        f"dVth_p {s['dvth_p_mv']:.1f} mV, dVth_n {s['dvth_n_mv']:.1f} mV, V_eff {s['v_eff']:.3f} V{flags}"
    )


# --------------------------------------------------------------------------
# Commands; each returns {file name: text} plus lines for stdout
# --------------------------------------------------------------------------


def cmd_fit_delay(rc: RunConfig):
    model = delay_model(rc)
    report = [
        f"source {rc.delay.kind}, degree {model.degree}, basis {model.basis}, "
        f"{model.n_coefficients} coefficients",
        f"RMSE {model.rmse:.3e} ns",
    ]
    return {"delay_model.txt": format_model(model), "fit_report.txt": "\n".join(report) + "\n"}, report


def cmd_simulate(rc: RunConfig):
    traj = simulate(rc.avs, rc.aging, rc.stats, delay_model(rc), engine_for(rc))
    line = _summary_line("baseline", traj)
    return {"trajectory.csv": trajectory_csv(traj), "events.csv": events_csv(traj), "summary.txt": line + "\n"}, [line]


def cmd_compare(rc: RunConfig):
    rep = compare_scenarios(rc.avs, rc.aging, rc.stats, delay_model(rc), engine_for(rc))
    return {"scenarios.csv": rep.csv(), "scenarios.txt": rep.text()}, [rep.text().rstrip()]


def cmd_policy(rc: RunConfig):
    pop = read_population(rc.policy.paths, rc.policy.bits)
    profiles = read_profiles(rc.policy.resilience)
    table = build_policy(pop, profiles, rc.policy.budget, rc.avs.t_clk, s_cap=rc.policy.s_cap)
    model = delay_model(rc)
    thresholds = {"None": rc.avs.threshold}
    thresholds.update({op: table[op].delay_max for op in OPERATORS})
    runs = simulate_thresholds(rc.avs, rc.aging, rc.stats, model, thresholds, engine_for(rc))
    report = savings_report({op: runs[op] for op in OPERATORS}, runs["None"], rc.power)
    files = {"policy.csv": table.csv(), "savings.csv": report.csv(), "savings.txt": report.text()}
    for name, traj in runs.items():
        files[f"trajectory_{name}.csv"] = trajectory_csv(traj)
    lines = [report.text().rstrip(), f"average power saving {report.average_saving * 100:.1f}%"]
    return files, lines


def cmd_plotdata(rc: RunConfig, inputs: list[str]):
    if not inputs:
        raise UsageError("plotdata needs at least one trajectory CSV")
    rows = []
    for path in inputs:
        p = Path(path)
        try:
            cps = read_trajectory_csv(p.read_text())
        except OSError as exc:
            raise UsageError(f"cannot read {p}: {exc.strerror}") from None
        except ValueError as exc:
            raise UsageError(f"{p}: {exc}") from None
        if not cps:
            raise UsageError(f"{p}: no checkpoints")
        name = p.stem.removeprefix("trajectory_")
        for col, get in PLOT_COLUMNS.items():
            rows += [(f"{name}:{col}", c.t, get(c)) for c in cps]
    return {"plotdata.csv": format_csv(("series", "t_s", "value"), rows)}, [f"{len(inputs)} trajectories, {len(rows)} points"]


def cmd_calibrate(rc: RunConfig, cp):
    from .calibrate import Targets, calibrate_aging, calibrate_delay, seed_aging

    if rc.delay.kind != "synthetic":
        raise UsageError("calibrate tunes the synthetic delay generator; set [delay] source = synthetic")
    targets = Targets()
    model = delay_model(rc)
    seed = replace(seed_aging(rc.stats, rc.aging.temperature), dT_bti=rc.aging.dT_bti, dT_hci=rc.aging.dT_hci)
    aging = calibrate_aging(seed, rc.stats, rc.avs, model, targets)
    rc2 = replace(rc, aging=aging)
    gen = calibrate_delay(aging, rc.stats, rc.avs, rc.delay.synthetic, targets, engine_for(rc2))
    rc2 = replace(rc2, delay=replace(rc.delay, synthetic=gen))
    rep = compare_scenarios(rc.avs, aging, rc.stats, delay_model(rc2), engine_for(rc2))

    for name in [s for s in cp.sections() if s.startswith("trap.")]:
        cp.remove_section(name)
    for name, sp in zip(("fast", "slow"), aging.bti_traps):
        cp[f"trap.{name}"] = {k: f"{getattr(sp, k):.8g}" for k in ("A_c", "B_c", "E_ac", "n_c", "A_e", "B_e", "E_ae", "beta_e", "r_perm")}
    for dev, h in (("p", aging.hci_p), ("n", aging.hci_n)):
        cp[f"hci.{dev}"] = {k: f"{getattr(h, k):.8g}" for k in ("A_h", "B_h", "E_ah", "n_h")}
    cp["delay"]["w_p"] = f"{gen.w_p:.6g}"
    cp["delay"]["w_n"] = f"{gen.w_n:.6g}"
    files = {"calibrated.ini": dump(cp), "scenarios.csv": rep.csv(), "scenarios.txt": rep.text()}
    return files, [rep.text().rstrip()]


# --------------------------------------------------------------------------


def run(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command != "plotdata" and args.inputs:
            raise UsageError(f"{args.command} takes no positional arguments")
        cp = load_parser(args.config)
        apply_overrides(cp, args.horizon, args.budget, args.out)
        if args.dump_defaults:
            sys.stdout.write(dump(cp))
            return 0
        rc = build(cp, Path(args.config).parent if args.config else Path("."))
        if args.command == "plotdata":
            files, lines = cmd_plotdata(rc, args.inputs)
        elif args.command == "calibrate":
            files, lines = cmd_calibrate(rc, cp)
        else:
            files, lines = {
                "fit-delay": cmd_fit_delay,
                "simulate": cmd_simulate,
                "compare": cmd_compare,
                "policy": cmd_policy,
            }[args.command](rc)
    except (UsageError, ConfigError, PolicyError) as exc:
        print(f"agingavs: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"agingavs: error: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except (DelayModelError, AvsError, ExtrapolationError, AgingDomainError, ArithmeticError, ValueError) as exc:
        print(f"agingavs: computation failed: {exc}", file=sys.stderr)
        return 1

    for name, text in files.items():
        write_atomic(rc.out / name, text, rc.hash)
    for line in lines:
        print(line)
    print(f"wrote {len(files)} file{'s' if len(files) != 1 else ''} to {rc.out}/")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

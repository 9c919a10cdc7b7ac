"""Command-line front end: derive | steady | spectrum | sweep | delay | oracle.

Exit codes: 0 success, 1 runtime or per-point failures, 2 configuration
errors. Every run echoes its effective configuration into the output
directory so any result can be reproduced exactly.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dynamics, report, response
from . import params as params_mod
from .config import (ConfigError, RunConfig, apply_overrides, dump_config,
                     load_config, load_preset)
from .steady_state import solve_steady_state, steady_residuals

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sawomit",
        description="SAW-controlled transparency window simulator for a "
                    "piezo-optomechanical DBR cavity")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration file")
    common.add_argument("--preset", default=None,
                        help="built-in preset (fig3, fig4, fig5, fig6); "
                             "default fig3 when no --config is given")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override a config field")
    common.add_argument("--branch", choices=("lower", "middle", "upper"),
                        help="bistability branch selection")
    common.add_argument("--no-saw", action="store_true",
                        help="disable the SAW channel (g_om = 0, no RF drive)")
    common.add_argument("--plot", action="store_true", help="render an SVG figure")
    common.add_argument("--out", type=Path, default=None, metavar="DIR",
                        help="output directory (default: config out_dir)")
    common.add_argument("--verbose", action="store_true", help="debug logging")
    common.add_argument("--dump-trace", type=Path, default=None, metavar="CSV",
                        help="oracle mode: dump one integration trace")

    sub = parser.add_subparsers(dest="mode", required=True)
    helps = {
        "derive": "derived parameters, power window, and regime report",
        "steady": "steady-state branch report",
        "spectrum": "probe spectrum CSV over the detuning grid",
        "sweep": "spectra swept over P_pu or P_rf (long-format CSV)",
        "delay": "group delay versus pump power CSV",
        "oracle": "time-domain verification of the closed-form response",
    }
    for mode, text in helps.items():
        sub.add_parser(mode, parents=[common], help=text)
    return parser


def _load(args) -> RunConfig:
    if args.config is not None and args.preset is not None:
        raise ConfigError("--preset", "give either --config or --preset")
    if args.config is not None:
        cfg = load_config(args.config)
    else:
        cfg = load_preset(args.preset or "fig3")
    cfg = apply_overrides(cfg, args.overrides)
    run = replace(cfg.run, mode=args.mode)
    if args.branch:
        run = replace(run, branch=args.branch)
    if args.no_saw:
        run = replace(run, no_saw=True)
    if args.plot:
        run = replace(run, plot=True)
    if args.out is not None:
        run = replace(run, out_dir=str(args.out))
    return RunConfig(device=cfg.device, run=run)


def _delta_grid(cfg: RunConfig) -> np.ndarray:
    omega_b = cfg.device.mechanical.omega_b
    rel = np.linspace(cfg.run.delta_lo, cfg.run.delta_hi, cfg.run.delta_points)
    return omega_b * (1.0 + rel)


def _sweep_values(cfg: RunConfig) -> np.ndarray:
    run = cfg.run
    if run.sweep_scale == "log":
        return np.geomspace(run.sweep_lo, run.sweep_hi, run.sweep_points)
    return np.linspace(run.sweep_lo, run.sweep_hi, run.sweep_points)


def _solve_nominal(cfg: RunConfig):
    device = cfg.device
    delta_a = response.resolve_detuning(device, no_saw=cfg.run.no_saw,
                                        branch=cfg.run.branch)
    derived = params_mod.derive_quantities(device, delta_a)
    mp = params_mod.build_model(device, delta_a, derived=derived,
                                no_saw=cfg.run.no_saw)
    ss = solve_steady_state(mp, branch=cfg.run.branch)
    return delta_a, derived, mp, ss


def _run_derive(cfg: RunConfig, out: Path) -> int:
    delta_a, derived, mp, ss = _solve_nominal(cfg)
    device = cfg.device
    bounds = params_mod.rf_power_bounds(
        derived.eps_pump, delta_a, derived.g_om, device.cavity.kappa_a,
        device.mechanical.gamma_b, device.mechanical.l_idt, derived.v_saw,
        device.stack.rho_upper, device.mechanical.mass)
    regime = params_mod.validate_regime(device, g_total=ss.g_total)
    payload = report.derive_report_payload(device, delta_a, derived, bounds,
                                           regime, ss)
    report.write_json_report(out / "derive_report.json", payload)
    text = report.render_report_text(payload)
    (out / "derive_report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def _run_steady(cfg: RunConfig, out: Path) -> int:
    _, _, mp, ss = _solve_nominal(cfg)
    payload = report.steady_payload(ss)
    payload["residuals"] = list(steady_residuals(mp, ss))
    report.write_json_report(out / "steady_report.json", payload)
    for key in ("n_photon", "delta_eff_rad_s", "g_total_rad_s", "branch",
                "branches_n_photon"):
        print(f"{key} = {payload[key]}")
    return 0


def _run_spectrum(cfg: RunConfig, out: Path) -> int:
    omega_b = cfg.device.mechanical.omega_b
    spec = response.SweepSpec(deltas=_delta_grid(cfg), branch=cfg.run.branch,
                              no_saw=cfg.run.no_saw)
    result = response.sweep(cfg.device, spec)
    suffix = "_nosaw" if cfg.run.no_saw else ""
    report.write_spectrum_csv(out / f"spectrum{suffix}.csv", result, omega_b)
    if cfg.run.plot:
        report.emit_plot(result, out / f"spectrum{suffix}.svg", omega_b, "spectrum")
    print(f"spectrum: {result.deltas.size} rows, branch {cfg.run.branch}, "
          f"{result.n_failed} failed points")
    return 1 if result.n_failed else 0


def _run_sweep(cfg: RunConfig, out: Path) -> int:
    omega_b = cfg.device.mechanical.omega_b
    spec = response.SweepSpec(deltas=_delta_grid(cfg), axis=cfg.run.sweep_axis,
                              values=_sweep_values(cfg), branch=cfg.run.branch,
                              no_saw=cfg.run.no_saw)
    result = response.sweep(cfg.device, spec)
    result.meta["sweep_scale"] = cfg.run.sweep_scale
    report.write_sweep_csv(out / "sweep.csv", result, omega_b)
    if cfg.run.plot:
        report.emit_plot(result, out / "sweep.svg", omega_b, "sweep")
    for i, msg in result.errors:
        log.warning("sweep point %d failed: %s", i, msg)
    print(f"sweep over {cfg.run.sweep_axis}: {len(result.values)} x "
          f"{result.deltas.size} rows, {result.n_failed} failed points")
    return 1 if result.n_failed else 0


def _run_delay(cfg: RunConfig, out: Path) -> int:
    omega_b = cfg.device.mechanical.omega_b
    device = cfg.device
    delta_a = response.resolve_detuning(device, no_saw=cfg.run.no_saw,
                                        branch=cfg.run.branch)
    rows, failed = [], 0
    for p_pump in _sweep_values(cfg):
        try:
            drive = replace(device.drive, p_pump=p_pump,
                            p_probe=min(device.drive.p_probe, 1e-3 * p_pump))
            dev_i = replace(device, drive=drive)
            mp = params_mod.build_model(dev_i, delta_a, no_saw=cfg.run.no_saw)
            ss = solve_steady_state(mp, branch=cfg.run.branch)
            width = response.window_width(ss.g_total, mp.kappa_a, mp.gamma_b)
            deltas = omega_b + np.linspace(-6.0, 6.0, 4001) * max(width, mp.gamma_b)
            tau = response.group_delay(mp, ss, deltas)
            tau_center = float(response.group_delay(
                mp, ss, np.array([omega_b - 1.0, omega_b, omega_b + 1.0]))[1])
            peak = int(np.argmax(np.abs(tau)))
            rows.append((p_pump, tau_center, float(tau[peak]),
                         float(deltas[peak]), float(np.max(tau)),
                         ss.branch_index, True))
        except (ValueError, RuntimeError) as exc:
            failed += 1
            log.warning("delay point P_pu=%.3e failed: %s", p_pump, exc)
            rows.append((p_pump, float("nan"), float("nan"), float("nan"),
                         float("nan"), -1, False))
    report.write_delay_csv(out / "delay.csv", rows)
    if cfg.run.plot:
        spec = response.SweepSpec(deltas=_delta_grid(cfg), branch=cfg.run.branch,
                                  no_saw=cfg.run.no_saw)
        nominal = response.sweep(device, spec)
        report.emit_plot(nominal, out / "delay.svg", omega_b, "delay",
                         delay_rows=rows)
    print(f"delay: {len(rows)} pump powers, {failed} failed points")
    return 1 if failed else 0


def _run_oracle(cfg: RunConfig, out: Path, dump_trace: Path | None) -> int:
    omega_b = cfg.device.mechanical.omega_b
    _, _, mp, ss = _solve_nominal(cfg)
    width = response.window_width(ss.g_total, mp.kappa_a, mp.gamma_b)
    detunings = [omega_b, omega_b + 0.5 * width, omega_b - 0.5 * width,
                 omega_b + 2.0 * width, omega_b - 2.0 * width]
    rep = dynamics.verify_linearization(
        mp, ss, detunings, ratios=tuple(cfg.run.oracle_ratios),
        n_periods=cfg.run.oracle_periods,
        samples_per_period=cfg.run.oracle_samples_per_period)
    payload = {
        "detunings_rad_s": [float(d) for d in detunings],
        "ratios": list(cfg.run.oracle_ratios),
        "rows": [{
            "delta_rad_s": r.delta, "ratio": r.ratio,
            "oracle": [r.oracle.real, r.oracle.imag],
            "closed_form": [r.closed_form.real, r.closed_form.imag],
            "rel_error": r.rel_error,
        } for r in rep.rows],
        "scaling_exponents": list(rep.exponents),
    }
    report.write_json_report(out / "oracle_report.json", payload)
    print(f"{'delta-omega_b [rad/s]':>22s} {'ratio':>8s} {'rel error':>12s}")
    for r in rep.rows:
        print(f"{r.delta - omega_b:>+22.6e} {r.ratio:>8.0e} {r.rel_error:>12.3e}")
    if rep.exponents:
        print("probe-scaling exponents:", ", ".join(f"{e:.2f}" for e in rep.exponents))
    if dump_trace is not None:
        period = 2.0 * np.pi / omega_b
        dt = period / cfg.run.oracle_samples_per_period
        rate = dynamics.slow_decay_rate(mp, ss)
        trace = dynamics.integrate_mean_field(
            mp, omega_b, 12.5 / rate + 100 * period, dt, hint=ss,
            store_every=cfg.run.trace_decimate)
        report.write_trace_csv(dump_trace, trace)
    worst = max(r.rel_error for r in rep.rows if r.ratio == max(cfg.run.oracle_ratios))
    print(f"worst relative error: {worst:.3e} "
          f"({'within' if worst <= 1e-3 else 'beyond'} 1e-3)")
    return 0 if worst <= 1e-3 else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out = Path(cfg.run.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "effective_config.txt").write_text(dump_config(cfg), encoding="utf-8")
        if args.mode == "derive":
            return _run_derive(cfg, out)
        if args.mode == "steady":
            return _run_steady(cfg, out)
        if args.mode == "spectrum":
            return _run_spectrum(cfg, out)
        if args.mode == "sweep":
            return _run_sweep(cfg, out)
        if args.mode == "delay":
            return _run_delay(cfg, out)
        return _run_oracle(cfg, out, args.dump_trace)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

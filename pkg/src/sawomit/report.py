"""CSV/JSON emission and figure rendering for sweep results and reports.

CSV columns are fixed; floats are written with %.17g so identical runs yield
byte-identical files. Failed sweep points appear as NaN rows with ok = 0,
never dropped. Figures render through the Agg backend to SVG with a fixed
hash salt and no embedded date, so identical inputs give identical bytes for
a given matplotlib version.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .params import DerivedQuantities, DeviceConfig, PowerBounds, RegimeReport
from .response import SweepResult
from .steady_state import SteadyState

TWO_PI = 2.0 * math.pi

SPECTRUM_COLUMNS = ("delta_rad_s", "delta_over_wb_minus_1", "re_epsT", "im_epsT",
                    "T_pr", "phi_T_rad", "tau_T_s", "branch_id", "ok")
DELAY_COLUMNS = ("P_pu_W", "tau_center_s", "tau_peak_s", "delta_peak_rad_s",
                 "tau_pos_max_s", "branch_id", "ok")


def fmt(x) -> str:
    return "%.17g" % float(x)


def _spectrum_rows(result: SweepResult, omega_b: float, index: int):
    spec = result.spectra[index]
    ok = bool(result.ok[index])
    branch = spec.steady.branch_index if spec is not None else -1
    for j, delta in enumerate(result.deltas):
        if ok:
            row = (delta, delta / omega_b - 1.0, spec.eps_t[j].real,
                   spec.eps_t[j].imag, spec.power_t[j], spec.phi[j], spec.tau[j])
        else:
            row = (delta, delta / omega_b - 1.0) + (float("nan"),) * 5
        yield [fmt(v) for v in row] + [str(branch), "1" if ok else "0"]


def write_spectrum_csv(path, result: SweepResult, omega_b: float) -> None:
    if result.axis is not None:
        raise ValueError("sweep results need write_sweep_csv")
    lines = [",".join(SPECTRUM_COLUMNS)]
    lines += [",".join(row) for row in _spectrum_rows(result, omega_b, 0)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_sweep_csv(path, result: SweepResult, omega_b: float) -> None:
    if result.axis is None:
        raise ValueError("single spectra go through write_spectrum_csv")
    axis_col = f"{result.axis}_W"
    lines = [",".join((axis_col,) + SPECTRUM_COLUMNS)]
    for i, value in enumerate(result.values):
        head = fmt(value)
        lines += [",".join([head] + row) for row in _spectrum_rows(result, omega_b, i)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_delay_csv(path, rows) -> None:
    """rows: iterables matching DELAY_COLUMNS with (floats..., branch, ok)."""
    lines = [",".join(DELAY_COLUMNS)]
    for row in rows:
        p, tc, tp, dp, tpos, branch, ok = row
        lines.append(",".join([fmt(p), fmt(tc), fmt(tp), fmt(dp), fmt(tpos),
                               str(branch), "1" if ok else "0"]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_json_report(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8", newline="\n")


_UNITS_BY_FIELD = {
    "eps_pump": "1/s", "eps_probe": "1/s", "q0": "m", "f_rf": "N",
    "eps_rf": "1/s", "g_om": "rad/s", "g_om_formula": "rad/s", "b0": "",
    "n0": "", "x_zpf": "m", "v_saw": "m/s", "lambda_saw": "m",
    "omega_pump": "rad/s", "p_rf_min": "W", "p_rf_max": "W",
}


def derive_report_payload(device: DeviceConfig, delta_a: float,
                          derived: DerivedQuantities, bounds: PowerBounds,
                          regime: RegimeReport, steady: SteadyState) -> dict:
    quantities = {}
    for name, unit in _UNITS_BY_FIELD.items():
        quantities[name] = {
            "value": getattr(derived, name),
            "unit": unit,
            "provenance": derived.provenance[name],
        }
    return {
        "delta_a_rad_s": delta_a,
        "detuning_locked": device.drive.delta_a is None,
        "quantities": quantities,
        "coupling_paths": {
            "g_om_formula_rad_s": derived.g_om_formula,
            "g_om_used_rad_s": derived.g_om,
            "used_over_formula": derived.g_om / derived.g_om_formula,
            "consistent": abs(derived.g_om / derived.g_om_formula - 1.0) < 0.05,
        },
        "rf_power_window": {
            "p_min_W": bounds.p_min,
            "p_max_W": bounds.p_max,
            "bracket": bounds.bracket,
            "feasible": bounds.feasible,
        },
        "regime": {
            "sideband_ratio": regime.sideband_ratio,
            "sideband_ok": regime.sideband_ok,
            "omit_ratio": regime.omit_ratio,
            "omit_ok": regime.omit_ok,
            "g_total_rad_s": regime.g_total,
            "threshold_rad_s": regime.threshold,
            "threshold_ok": regime.threshold_ok,
        },
        "steady_state": steady_payload(steady),
    }


def steady_payload(ss: SteadyState) -> dict:
    return {
        "delta_a_rad_s": ss.delta_a,
        "a_s": [ss.a_s.real, ss.a_s.imag],
        "b_s": [ss.b_s.real, ss.b_s.imag],
        "delta_eff_rad_s": ss.delta_eff,
        "g_total_rad_s": ss.g_total,
        "n_photon": ss.n_photon,
        "branches_n_photon": list(ss.branches),
        "branch": ss.branch,
        "branch_index": ss.branch_index,
    }


def render_report_text(payload: dict) -> str:
    """Human-readable parameter report with units and provenance."""
    lines = ["derived quantities"]
    for name, entry in sorted(payload["quantities"].items()):
        unit = f" {entry['unit']}" if entry["unit"] else ""
        lines.append(f"  {name:14s} = {entry['value']:.9e}{unit:6s} [{entry['provenance']}]")
    cp = payload["coupling_paths"]
    lines.append("coupling paths")
    lines.append(f"  g_om formula   = {cp['g_om_formula_rad_s']:.9e} rad/s")
    lines.append(f"  g_om in use    = {cp['g_om_used_rad_s']:.9e} rad/s")
    flag = "" if cp["consistent"] else "  << inconsistent"
    lines.append(f"  used/formula   = {cp['used_over_formula']:.6f}{flag}")
    win = payload["rf_power_window"]
    lines.append("rf power window")
    lines.append(f"  P_min          = {win['p_min_W']:.9e} W")
    lines.append(f"  P_max          = {win['p_max_W']:.9e} W"
                 + ("" if win["feasible"] else "  << infeasible"))
    reg = payload["regime"]
    lines.append("regime checks")
    lines.append(f"  sideband ratio omega_b/kappa_a = {reg['sideband_ratio']:.4g}"
                 f"  [{'pass' if reg['sideband_ok'] else 'warn'}]")
    lines.append(f"  linewidth ratio kappa_a/gamma_b = {reg['omit_ratio']:.4g}"
                 f"  [{'pass' if reg['omit_ok'] else 'warn'}]")
    if reg["threshold_ok"] is None:
        lines.append("  window threshold: steady state not solved")
    else:
        lines.append(f"  G_om = {reg['g_total_rad_s']:.4e} vs threshold "
                     f"{reg['threshold_rad_s']:.4e} rad/s"
                     f"  [{'pass' if reg['threshold_ok'] else 'warn'}]")
    ss = payload["steady_state"]
    lines.append("steady state (selected branch)")
    lines.append(f"  n_photon       = {ss['n_photon']:.9e}")
    lines.append(f"  delta_eff      = {ss['delta_eff_rad_s']:.9e} rad/s")
    lines.append(f"  branches       = {ss['branches_n_photon']}")
    return "\n".join(lines) + "\n"


def write_trace_csv(path, trace, decimate: int = 1) -> None:
    """Time-series dump t, Re/Im a, Re/Im b, optionally down-sampled."""
    if decimate < 1:
        raise ValueError("decimate must be >= 1")
    lines = ["t_s,re_a,im_a,re_b,im_b"]
    for k in range(0, trace.t.size, decimate):
        lines.append(",".join(fmt(v) for v in (
            trace.t[k], trace.a[k].real, trace.a[k].imag,
            trace.b[k].real, trace.b[k].imag)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _matplotlib():
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "sawomit"
    return plt


def emit_plot(result: SweepResult, path, omega_b: float, kind: str = "spectrum",
              delay_rows=None) -> None:
    """Render a sweep result to a static SVG next to its CSV.

    kind "spectrum": stacked Re/Im quadrature and power-transmission panels.
    kind "sweep":    power transmission map over detuning and drive power.
    kind "delay":    phase dispersion at nominal drive plus delay-vs-power.
    """
    if result is None or not result.spectra or all(s is None for s in result.spectra):
        raise ValueError("nothing to plot: empty sweep result")
    plt = _matplotlib()
    rel = result.deltas / omega_b - 1.0

    if kind == "spectrum":
        spec = result.spectra[0]
        fig, axes = plt.subplots(3, 1, figsize=(6.0, 7.5), sharex=True)
        axes[0].plot(rel, spec.eps_t.real, lw=1.2)
        axes[0].set_ylabel(r"Re $\varepsilon_T$")
        axes[1].plot(rel, spec.eps_t.imag, lw=1.2)
        axes[1].set_ylabel(r"Im $\varepsilon_T$")
        axes[2].plot(rel, spec.power_t, lw=1.2)
        axes[2].set_ylabel(r"$T_{pr}$")
        axes[2].set_xlabel(r"$(\delta-\omega_b)/\omega_b$")
    elif kind == "sweep":
        grid = np.full((len(result.values), rel.size), np.nan)
        for i, spec in enumerate(result.spectra):
            if spec is not None:
                grid[i] = spec.power_t
        fig, ax = plt.subplots(figsize=(6.5, 4.5))
        mesh = ax.pcolormesh(rel, result.values, grid, shading="nearest",
                             rasterized=True)
        ax.set_xlabel(r"$(\delta-\omega_b)/\omega_b$")
        ax.set_ylabel(f"{result.axis} [W]")
        if result.meta.get("sweep_scale") == "log":
            ax.set_yscale("log")
        fig.colorbar(mesh, ax=ax, label=r"$T_{pr}$")
    elif kind == "delay":
        if not delay_rows:
            raise ValueError("delay plot needs delay rows")
        spec = result.spectra[0]
        fig, axes = plt.subplots(2, 1, figsize=(6.0, 6.5))
        axes[0].plot(rel, spec.phi, lw=1.2)
        axes[0].set_xlabel(r"$(\delta-\omega_b)/\omega_b$")
        axes[0].set_ylabel(r"$\phi_T$ [rad]")
        powers = [r[0] for r in delay_rows]
        axes[1].plot(powers, [r[1] for r in delay_rows], "o-", label=r"$\tau_T(\omega_b)$")
        axes[1].plot(powers, [r[2] for r in delay_rows], "s--", label=r"peak $|\tau_T|$")
        axes[1].set_xlabel(r"$P_{pu}$ [W]")
        axes[1].set_ylabel(r"$\tau_T$ [s]")
        axes[1].legend(frameon=False, fontsize=8)
    else:
        raise ValueError(f"unknown plot kind {kind!r}")

    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

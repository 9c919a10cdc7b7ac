"""Run configuration: unit-suffixed key-value files, presets, validation.

The on-disk format is INI-style sections of ``key = value`` pairs where every
physical key carries an explicit unit suffix (``omega_a_THz``,
``lambda_spacer_nm``, ``P_pu_uW``, ...). Frequencies are ordinary (cycles/s)
in files and converted to angular (rad/s) at this boundary; densities accept
g/cm^3; everything is canonicalized to SI internally. Unknown keys are
rejected with the offending field path.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path
from .params import (CavityParams, DeviceConfig, DriveParams, MaterialStack,
                     MechanicalParams)

TWO_PI = 2.0 * math.pi

MODES = ("derive", "steady", "spectrum", "sweep", "delay", "oracle")
BRANCHES = ("lower", "middle", "upper")
SWEEP_AXES = ("P_pu", "P_rf")
SWEEP_SCALES = ("linear", "log")


class ConfigError(Exception):
    """Configuration parse/validation failure; ``path`` names the field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# unit kind -> {suffix: factor to SI}; frequencies additionally gain 2*pi
_UNITS = {
    "freq": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9, "pm": 1e-12},
    "mass": {"kg": 1.0, "g": 1e-3, "pg": 1e-15},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "nW": 1e-9},
    "density": {"kg_m3": 1.0, "g_cm3": 1e3},
    "velocity": {"m_s": 1.0},
}

# section -> stem -> (kind, canonical suffix); kind None = bare value
_FIELDS = {
    "device": {
        "n_spacer": (None, None),
        "lambda_spacer": ("length", "nm"),
        "rho_upper": ("density", "g_cm3"),
        "d_upper": ("length", "um"),
        "omega_a": ("freq", "THz"),
        "kappa_a": ("freq", "GHz"),
        "L_spacer": ("length", "nm"),
        "omega_b": ("freq", "GHz"),
        "gamma_b": ("freq", "kHz"),
        "m_b": ("mass", "pg"),
        "l_idt": ("length", "um"),
        "lambda_saw": ("length", "um"),
        "v_saw": ("velocity", "m_s"),
        "g_om": ("freq", "MHz"),
        "defect_depth": ("length", "nm"),
        "defect_halfwidth": ("length", "nm"),
    },
    "drive": {
        "P_pu": ("power", "uW"),
        "P_pr": ("power", "uW"),
        "P_pr_frac": (None, None),
        "P_rf": ("power", "W"),
        "Delta_a": ("freq", "GHz"),
        "lock_detuning": ("enum", None),
    },
    "run": {
        "mode": ("enum", None),
        "branch": ("enum", None),
        "no_saw": ("bool", None),
        "plot": ("bool", None),
        "out_dir": ("str", None),
        "delta_lo": (None, None),
        "delta_hi": (None, None),
        "delta_points": ("int", None),
        "sweep_axis": ("enum", None),
        "sweep_lo": ("power", "W"),
        "sweep_hi": ("power", "W"),
        "sweep_points": ("int", None),
        "sweep_scale": ("enum", None),
        "oracle_ratios": ("list", None),
        "oracle_periods": ("int", None),
        "oracle_samples_per_period": ("int", None),
        "trace_decimate": ("int", None),
    },
}

@dataclass(frozen=True)
class RunOptions:
    """Run-section settings with mode-appropriate defaults."""

    mode: str = "spectrum"
    branch: str = "lower"
    no_saw: bool = False
    plot: bool = False
    out_dir: str = "."
    delta_lo: float = -0.004       # (delta - omega_b)/omega_b
    delta_hi: float = 0.004
    delta_points: int = 2001
    sweep_axis: str = "P_pu"
    sweep_lo: float = 1e-8         # [W]
    sweep_hi: float = 3e-8         # [W]
    sweep_points: int = 10
    sweep_scale: str = "linear"
    oracle_ratios: tuple = (1e-3,)
    oracle_periods: int = 100
    oracle_samples_per_period: int = 320
    trace_decimate: int = 1


@dataclass(frozen=True)
class RunConfig:
    device: DeviceConfig
    run: RunOptions


def _parse_key(section: str, key: str):
    """Resolve a raw key to (stem, kind, factor-to-SI); raises on mismatch.

    Frequency fields accept ordinary-frequency suffixes (converted by 2*pi)
    and the angular spelling ``<stem>_rad_s`` (written by the canonical dump,
    taken verbatim so round trips stay bit-exact).
    """
    fields = _FIELDS[section]
    if key in fields:
        kind, _ = fields[key]
        if kind in (None, "enum", "bool", "str", "int", "list"):
            return key, kind, 1.0
        # physical field written without its unit suffix
        suffixes = ", ".join(f"{key}_{s}" for s in _UNITS[kind])
        raise ConfigError(f"{section}.{key}",
                          f"missing unit suffix; use one of: {suffixes}")
    for stem, (kind, _) in fields.items():
        if key.startswith(stem + "_") and kind in _UNITS:
            suffix = key[len(stem) + 1:]
            if kind == "freq" and suffix == "rad_s":
                return stem, kind, 1.0
            if suffix in _UNITS[kind]:
                factor = _UNITS[kind][suffix]
                if kind == "freq":
                    factor *= TWO_PI
                return stem, kind, factor
            suffixes = ", ".join(f"{stem}_{s}" for s in _UNITS[kind])
            if kind == "freq":
                suffixes += f", {stem}_rad_s"
            raise ConfigError(f"{section}.{key}",
                              f"unknown unit suffix '{suffix}'; use one of: {suffixes}")
    raise ConfigError(f"{section}.{key}", "unknown key")


def _to_float(path: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(path, f"not a number: {raw!r}") from None


def _to_int(path: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(path, f"not an integer: {raw!r}") from None


def _to_bool(path: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(path, f"not a boolean: {raw!r}")


def _collect(section: str, parser: configparser.ConfigParser) -> dict:
    """Map a raw section to {stem: parsed value} with units applied."""
    out = {}
    if not parser.has_section(section):
        return out
    for key, raw in parser.items(section):
        stem, kind, factor = _parse_key(section, key)
        path = f"{section}.{key}"
        if stem in out:
            raise ConfigError(path, "field specified more than once")
        if kind in _UNITS:
            out[stem] = _to_float(path, raw) * factor
        elif kind is None:
            out[stem] = _to_float(path, raw)
        elif kind == "int":
            out[stem] = _to_int(path, raw)
        elif kind == "bool":
            out[stem] = _to_bool(path, raw)
        elif kind == "list":
            try:
                out[stem] = tuple(float(v) for v in raw.split(",") if v.strip())
            except ValueError:
                raise ConfigError(path, f"not a comma-separated number list: {raw!r}") from None
        else:  # enum / str
            out[stem] = raw.strip()
    return out


def _require(section: str, values: dict, *names: str) -> None:
    for name in names:
        if name not in values:
            raise ConfigError(f"{section}.{name}", "required field missing")


def _build_device(dev: dict, drv: dict) -> DeviceConfig:
    _require("device", dev, "n_spacer", "lambda_spacer", "rho_upper", "d_upper",
             "omega_a", "kappa_a", "L_spacer", "omega_b", "gamma_b", "m_b", "l_idt")
    _require("drive", drv, "P_pu", "P_rf")

    try:
        stack = MaterialStack(dev["n_spacer"], dev["lambda_spacer"],
                              dev["rho_upper"], dev["d_upper"])
        cavity = CavityParams(dev["omega_a"], dev["kappa_a"], dev["L_spacer"])
    except ValueError as exc:
        raise ConfigError("device", str(exc)) from None

    has_lambda, has_v = "lambda_saw" in dev, "v_saw" in dev
    if not (has_lambda or has_v):
        raise ConfigError("device.lambda_saw", "one of lambda_saw or v_saw is required")
    try:
        common = (dev["omega_b"], dev["gamma_b"], dev["m_b"], dev["l_idt"])
        if has_lambda and has_v:
            mech = MechanicalParams(*common, dev["v_saw"], dev["lambda_saw"])
        elif has_lambda:
            mech = MechanicalParams.from_saw_wavelength(*common, dev["lambda_saw"])
        else:
            mech = MechanicalParams.from_saw_velocity(*common, dev["v_saw"])
    except ValueError as exc:
        raise ConfigError("device", str(exc)) from None

    if "Delta_a" in drv and "lock_detuning" in drv:
        raise ConfigError("drive.Delta_a", "give either Delta_a or lock_detuning, not both")
    if "Delta_a" not in drv and "lock_detuning" not in drv:
        raise ConfigError("drive.lock_detuning",
                          "detuning unspecified: give Delta_a or lock_detuning = sideband")
    if "lock_detuning" in drv and drv["lock_detuning"] != "sideband":
        raise ConfigError("drive.lock_detuning",
                          f"unsupported directive {drv['lock_detuning']!r}; only 'sideband'")
    if "P_pr" in drv and "P_pr_frac" in drv:
        raise ConfigError("drive.P_pr", "give either P_pr or P_pr_frac, not both")
    p_pump = drv["P_pu"]
    if p_pump < 0:
        raise ConfigError("drive.P_pu", f"power must be >= 0, got {p_pump:g}")
    if drv["P_rf"] < 0:
        raise ConfigError("drive.P_rf", f"power must be >= 0, got {drv['P_rf']:g}")
    p_probe = drv.get("P_pr", drv.get("P_pr_frac", 1e-3) * p_pump)
    if p_probe < 0:
        raise ConfigError("drive.P_pr", f"power must be >= 0, got {p_probe:g}")

    try:
        drive = DriveParams(p_pump=p_pump, p_probe=p_probe, p_rf=drv["P_rf"],
                            delta_a=drv.get("Delta_a"),
                            lock_to_sideband="Delta_a" not in drv)
        return DeviceConfig(stack=stack, cavity=cavity, mechanical=mech,
                            drive=drive, g_om=dev.get("g_om"),
                            defect_depth=dev.get("defect_depth"),
                            defect_halfwidth=dev.get("defect_halfwidth"))
    except ValueError as exc:
        raise ConfigError("drive", str(exc)) from None


def _build_run(run: dict) -> RunOptions:
    opts = RunOptions()
    known = {}
    for name, value in run.items():
        known[name] = value
    for path, allowed in (("mode", MODES), ("branch", BRANCHES),
                          ("sweep_axis", SWEEP_AXES), ("sweep_scale", SWEEP_SCALES)):
        if path in known and known[path] not in allowed:
            raise ConfigError(f"run.{path}", f"must be one of {allowed}, got {known[path]!r}")
    opts = replace(opts, **known)
    if opts.delta_points < 2:
        raise ConfigError("run.delta_points", "grid needs at least 2 points")
    if not opts.delta_lo < opts.delta_hi:
        raise ConfigError("run.delta_lo", "delta_lo must be below delta_hi")
    if opts.sweep_points < 2:
        raise ConfigError("run.sweep_points", "secondary axis needs at least 2 points")
    if not 0 < opts.sweep_lo < opts.sweep_hi:
        raise ConfigError("run.sweep_lo", "need 0 < sweep_lo < sweep_hi")
    if opts.oracle_periods < 100:
        raise ConfigError("run.oracle_periods", "demodulation needs >= 100 periods")
    if opts.oracle_samples_per_period < 20:
        raise ConfigError("run.oracle_samples_per_period", "need >= 20 samples per period")
    if opts.trace_decimate < 1:
        raise ConfigError("run.trace_decimate", "decimation factor must be >= 1")
    return opts


def parse_text(text: str, source: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",),
                                       interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(source, f"parse error: {exc}") from None
    for section in parser.sections():
        if section not in _FIELDS:
            raise ConfigError(section, "unknown section")
    for section in ("device", "drive"):
        if not parser.has_section(section):
            raise ConfigError(section, "required section missing")
    device = _build_device(_collect("device", parser), _collect("drive", parser))
    run = _build_run(_collect("run", parser))
    return RunConfig(device=device, run=run)


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(str(p), "config file not found")
    return parse_text(p.read_text(encoding="utf-8"), source=str(p))


# overriding one member of an exclusive pair displaces the other
_EXCLUSIVE = {
    ("drive", "Delta_a"): ("lock_detuning",),
    ("drive", "lock_detuning"): ("Delta_a",),
    ("drive", "P_pr"): ("P_pr_frac",),
    ("drive", "P_pr_frac"): ("P_pr",),
}


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    """Apply ``section.key=value`` strings on top of a parsed config."""
    if not overrides:
        return cfg
    text = dump_config(cfg)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",),
                                       interpolation=None)
    parser.optionxform = str
    parser.read_string(text)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(item, "override must look like section.key=value")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        if section not in _FIELDS:
            raise ConfigError(target, "unknown section")
        stem, _, _ = _parse_key(section, key.strip())  # validates key + suffix
        if not parser.has_section(section):
            parser.add_section(section)
        # drop competing spellings of the same stem (and exclusive partners)
        # so overrides replace rather than clash
        drop = {stem, *_EXCLUSIVE.get((section, stem), ())}
        for existing in list(parser[section]):
            if _parse_key(section, existing)[0] in drop:
                parser.remove_option(section, existing)
        parser.set(section, key.strip(), value.strip())
    buf = io.StringIO()
    parser.write(buf)
    return parse_text(buf.getvalue(), source="<override>")


def dump_config(cfg: RunConfig) -> str:
    """Canonical effective-config text; reloading reproduces the identical run."""
    dev, drive, run = cfg.device, cfg.device.drive, cfg.run
    lines = ["[device]"]

    def freq(stem, value):  # angular frequencies dump verbatim in rad/s
        lines.append(f"{stem}_rad_s = {value!r}")

    lines.append(f"n_spacer = {dev.stack.n_spacer!r}")
    lines.append(f"lambda_spacer_m = {dev.stack.wavelength!r}")
    lines.append(f"rho_upper_kg_m3 = {dev.stack.rho_upper!r}")
    lines.append(f"d_upper_m = {dev.stack.d_upper!r}")
    freq("omega_a", dev.cavity.omega_a)
    freq("kappa_a", dev.cavity.kappa_a)
    lines.append(f"L_spacer_m = {dev.cavity.length!r}")
    freq("omega_b", dev.mechanical.omega_b)
    freq("gamma_b", dev.mechanical.gamma_b)
    lines.append(f"m_b_kg = {dev.mechanical.mass!r}")
    lines.append(f"l_idt_m = {dev.mechanical.l_idt!r}")
    lines.append(f"lambda_saw_m = {dev.mechanical.lambda_saw!r}")
    lines.append(f"v_saw_m_s = {dev.mechanical.v_saw!r}")
    if dev.g_om is not None:
        freq("g_om", dev.g_om)
    if dev.defect_depth is not None:
        lines.append(f"defect_depth_m = {dev.defect_depth!r}")
    if dev.defect_halfwidth is not None:
        lines.append(f"defect_halfwidth_m = {dev.defect_halfwidth!r}")

    lines.append("")
    lines.append("[drive]")
    lines.append(f"P_pu_W = {drive.p_pump!r}")
    lines.append(f"P_pr_W = {drive.p_probe!r}")
    lines.append(f"P_rf_W = {drive.p_rf!r}")
    if drive.delta_a is not None:
        lines.append(f"Delta_a_rad_s = {drive.delta_a!r}")
    else:
        lines.append("lock_detuning = sideband")

    lines.append("")
    lines.append("[run]")
    lines.append(f"mode = {run.mode}")
    lines.append(f"branch = {run.branch}")
    lines.append(f"no_saw = {str(run.no_saw).lower()}")
    lines.append(f"plot = {str(run.plot).lower()}")
    lines.append(f"out_dir = {run.out_dir}")
    lines.append(f"delta_lo = {run.delta_lo!r}")
    lines.append(f"delta_hi = {run.delta_hi!r}")
    lines.append(f"delta_points = {run.delta_points}")
    lines.append(f"sweep_axis = {run.sweep_axis}")
    lines.append(f"sweep_lo_W = {run.sweep_lo!r}")
    lines.append(f"sweep_hi_W = {run.sweep_hi!r}")
    lines.append(f"sweep_points = {run.sweep_points}")
    lines.append(f"sweep_scale = {run.sweep_scale}")
    lines.append("oracle_ratios = " + ",".join(repr(r) for r in run.oracle_ratios))
    lines.append(f"oracle_periods = {run.oracle_periods}")
    lines.append(f"oracle_samples_per_period = {run.oracle_samples_per_period}")
    lines.append(f"trace_decimate = {run.trace_decimate}")
    return "\n".join(lines) + "\n"


# Parameter set of the reference device (caption values of the device study):
# omega_a/2pi = 324 THz, kappa_a/2pi = 3.5 GHz, omega_b/2pi = 1.05 GHz,
# gamma_b/2pi = 10.5 kHz, g_om/2pi = 15.4 MHz (pinned), P_pu = 0.015 uW,
# P_rf = 5 mW, lambda_s = 2.9 um, l_IDT = 400 um, rho = 4.47 g/cm^3,
# m_b = 0.33 pg, L = 259.1 nm, pump locked to the red sideband.
FIG3_PRESET = """\
[device]
n_spacer = 3.57
lambda_spacer_nm = 925.0
rho_upper_g_cm3 = 4.47
d_upper_um = 1.42
omega_a_THz = 324.0
kappa_a_GHz = 3.5
L_spacer_nm = 259.1
omega_b_GHz = 1.05
gamma_b_kHz = 10.5
m_b_pg = 0.33
l_idt_um = 400.0
lambda_saw_um = 2.9
g_om_MHz = 15.4
defect_depth_nm = 25.9
defect_halfwidth_nm = 259.1

[drive]
P_pu_uW = 0.015
P_pr_frac = 1e-3
P_rf_W = 0.005
lock_detuning = sideband

[run]
mode = spectrum
branch = lower
delta_lo = -0.004
delta_hi = 0.004
delta_points = 2001
"""

_FIG4_RUN = """\
[run]
mode = sweep
sweep_axis = P_pu
sweep_lo_W = 1e-8
sweep_hi_W = 3e-8
sweep_points = 10
sweep_scale = linear
delta_lo = -0.02
delta_hi = 0.02
delta_points = 2001
"""

_FIG5_RUN = """\
[run]
mode = sweep
sweep_axis = P_rf
sweep_lo_W = 1e-5
sweep_hi_W = 1e-3
sweep_points = 12
sweep_scale = log
delta_lo = -0.004
delta_hi = 0.004
delta_points = 2001
"""

_FIG6_RUN = """\
[run]
mode = delay
sweep_axis = P_pu
sweep_lo_W = 1e-8
sweep_hi_W = 3e-8
sweep_points = 10
sweep_scale = linear
delta_lo = -0.004
delta_hi = 0.004
delta_points = 2001
"""


def _with_run(base: str, run_section: str) -> str:
    head = base.split("[run]")[0].rstrip() + "\n\n"
    return head + run_section


PRESETS = {
    "fig3": FIG3_PRESET,
    "fig4": _with_run(FIG3_PRESET, _FIG4_RUN),
    "fig5": _with_run(FIG3_PRESET, _FIG5_RUN),
    "fig6": _with_run(FIG3_PRESET, _FIG6_RUN),
}


def load_preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(name, f"unknown preset; have {sorted(PRESETS)}")
    return parse_text(PRESETS[name], source=f"<preset:{name}>")

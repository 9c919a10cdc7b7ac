"""Physical parameter derivation for a SAW-driven DBR optomechanical cavity.

Turns device geometry, material constants, and drive powers into the scalar
parameters of the coupled cavity/bulk-acoustic-resonator model. Everything
internal is SI with angular frequencies (rad/s); configuration code converts
ordinary frequencies and convenience units at the boundary.

Every derived scalar carries a provenance tag so reports can distinguish
values computed from the device geometry from values the user pinned by hand.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

from scipy.constants import hbar

TWO_PI = 2.0 * math.pi

FORMULA = "formula-derived"
USER = "user-supplied"

# Probe power must stay perturbative relative to the pump.
PROBE_RATIO_WARN = 1e-2
PROBE_RATIO_ERROR = 1.0

# Regime gates: sideband resolution, OMIT linewidth hierarchy.
SIDEBAND_RATIO_LO = 0.1
SIDEBAND_RATIO_HI = 10.0
OMIT_RATIO_MIN = 100.0


def _positive(name: str, value: float) -> None:
    if not (value > 0.0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


def _nonnegative(name: str, value: float) -> None:
    if not (value >= 0.0 and math.isfinite(value)):
        raise ValueError(f"{name} must be >= 0 and finite, got {value!r}")


@dataclass(frozen=True)
class MaterialStack:
    """Spacer optics and upper-mirror bulk properties.

    n_spacer    refractive index of the spacer layer (dimensionless, > 1)
    wavelength  spacer optical wavelength [m]
    rho_upper   average density of the upper mirror stack [kg/m^3]
    d_upper     total thickness of the upper mirror stack [m]
    """

    n_spacer: float
    wavelength: float
    rho_upper: float
    d_upper: float

    def __post_init__(self) -> None:
        _positive("n_spacer", self.n_spacer)
        if self.n_spacer <= 1.0:
            raise ValueError(f"n_spacer must exceed 1, got {self.n_spacer!r}")
        _positive("wavelength", self.wavelength)
        _positive("rho_upper", self.rho_upper)
        _positive("d_upper", self.d_upper)


@dataclass(frozen=True)
class CavityParams:
    """Optical mode: angular frequency, total energy decay rate, spacer thickness."""

    omega_a: float  # [rad/s]
    kappa_a: float  # [rad/s]
    length: float   # physical spacer thickness [m]

    def __post_init__(self) -> None:
        _positive("omega_a", self.omega_a)
        _positive("kappa_a", self.kappa_a)
        _positive("length", self.length)
        if self.omega_a <= self.kappa_a:
            raise ValueError(
                f"omega_a ({self.omega_a:g}) must greatly exceed kappa_a ({self.kappa_a:g})"
            )


@dataclass(frozen=True)
class MechanicalParams:
    """Bulk acoustic resonator formed by the vibrating upper mirror stack.

    The SAW wavelength and velocity are redundant (lambda_s = 2*pi*v/omega_b);
    either may be supplied and the other derived, but a stored pair must be
    consistent.
    """

    omega_b: float     # BAR angular frequency [rad/s]
    gamma_b: float     # intrinsic energy damping rate [rad/s]
    mass: float        # effective motional mass [kg]
    l_idt: float       # IDT finger length (acoustic aperture) [m]
    v_saw: float       # SAW velocity [m/s]
    lambda_saw: float  # SAW wavelength [m]

    def __post_init__(self) -> None:
        _positive("omega_b", self.omega_b)
        _positive("gamma_b", self.gamma_b)
        if self.omega_b <= self.gamma_b:
            raise ValueError(
                f"omega_b ({self.omega_b:g}) must exceed gamma_b ({self.gamma_b:g})"
            )
        _positive("mass", self.mass)
        _positive("l_idt", self.l_idt)
        _positive("v_saw", self.v_saw)
        _positive("lambda_saw", self.lambda_saw)
        expected = saw_wavelength(self.v_saw, self.omega_b)
        if rel_diff(self.lambda_saw, expected) > 1e-9:
            raise ValueError(
                f"lambda_saw ({self.lambda_saw:g} m) inconsistent with "
                f"2*pi*v_saw/omega_b ({expected:g} m)"
            )

    @classmethod
    def from_saw_wavelength(cls, omega_b, gamma_b, mass, l_idt, lambda_saw):
        return cls(omega_b, gamma_b, mass, l_idt,
                   saw_velocity(lambda_saw, omega_b), lambda_saw)

    @classmethod
    def from_saw_velocity(cls, omega_b, gamma_b, mass, l_idt, v_saw):
        return cls(omega_b, gamma_b, mass, l_idt,
                   v_saw, saw_wavelength(v_saw, omega_b))


def rel_diff(a: float, b: float) -> float:
    """Relative difference |a-b| / max(|a|, |b|), 0 when both vanish."""
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else 0.0


@dataclass(frozen=True)
class DriveParams:
    """Optical pump/probe powers, RF power, and pump-cavity detuning.

    Exactly one detuning specification is allowed: an explicit
    ``delta_a = omega_a - omega_pump`` [rad/s], or ``lock_to_sideband`` which
    asks the steady-state solver for the delta_a that puts the effective
    (spring-shifted) detuning on the red mechanical sideband.
    """

    p_pump: float                     # [W]
    p_probe: float                    # [W]
    p_rf: float                       # [W]
    delta_a: Optional[float] = None   # [rad/s]
    lock_to_sideband: bool = True

    def __post_init__(self) -> None:
        _nonnegative("p_pump", self.p_pump)
        _nonnegative("p_probe", self.p_probe)
        _nonnegative("p_rf", self.p_rf)
        if (self.delta_a is None) == (not self.lock_to_sideband):
            raise ValueError(
                "specify exactly one of delta_a or lock_to_sideband"
            )
        if self.p_pump > 0.0:
            ratio = self.p_probe / self.p_pump
            if ratio > PROBE_RATIO_ERROR:
                raise ValueError(
                    f"p_probe/p_pump = {ratio:g} exceeds 1; probe must be weak"
                )
            if ratio > PROBE_RATIO_WARN:
                warnings.warn(
                    f"p_probe/p_pump = {ratio:g} > {PROBE_RATIO_WARN:g}: "
                    "probe is not perturbative", stacklevel=2)
        elif self.p_probe > 0.0:
            raise ValueError("p_probe > 0 requires p_pump > 0")


@dataclass(frozen=True)
class DeviceConfig:
    """Complete device description as specified by the user.

    ``g_om`` optionally pins the single-photon coupling; when absent it is
    derived from the cavity geometry. The Gaussian-defect geometry is stored
    for documentation only and enters no formula.
    """

    stack: MaterialStack
    cavity: CavityParams
    mechanical: MechanicalParams
    drive: DriveParams
    g_om: Optional[float] = None          # [rad/s]
    defect_depth: Optional[float] = None      # [m], documentation only
    defect_halfwidth: Optional[float] = None  # [m], documentation only

    def __post_init__(self) -> None:
        if self.g_om is not None:
            _positive("g_om", self.g_om)


@dataclass(frozen=True)
class DerivedQuantities:
    """Every scalar the coupled-mode model needs, with provenance tags.

    provenance maps field name -> "formula-derived" | "user-supplied".
    """

    eps_pump: float      # pump drive amplitude [1/s]
    eps_probe: float     # probe drive amplitude [1/s]
    q0: float            # BAR displacement amplitude [m]
    f_rf: float          # RF drive force [N]
    eps_rf: float        # RF drive amplitude [1/s]
    g_om: float          # single-photon coupling in use [rad/s]
    g_om_formula: float  # geometry value, always computed [rad/s]
    b0: float            # mean phonon amplitude (dimensionless)
    n0: float            # mean phonon number (dimensionless)
    x_zpf: float         # zero-point length [m]
    v_saw: float         # [m/s]
    lambda_saw: float    # [m]
    omega_pump: float    # pump angular frequency omega_a - delta_a [rad/s]
    p_rf_min: float      # [W]
    p_rf_max: float      # [W]
    provenance: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PowerBounds:
    """RF power window for OMIT operation; infeasible windows are reported, not raised."""

    p_min: float
    p_max: float
    bracket: float

    @property
    def feasible(self) -> bool:
        return self.p_max >= self.p_min


@dataclass(frozen=True)
class RegimeReport:
    """Pass/warn record for the operating-regime conditions."""

    sideband_ratio: float        # omega_b / kappa_a
    sideband_ok: bool
    omit_ratio: float            # kappa_a / gamma_b
    omit_ok: bool
    g_total: Optional[float]     # pump-enhanced coupling, if a steady state was solved
    threshold: float             # sqrt(kappa_a*gamma_b)/2
    threshold_ok: Optional[bool]

    @property
    def all_ok(self) -> bool:
        checks = [self.sideband_ok, self.omit_ok]
        if self.threshold_ok is not None:
            checks.append(self.threshold_ok)
        return all(checks)


@dataclass(frozen=True)
class ModelParams:
    """Resolved scalar inputs of the coupled-mode model (all rad/s, 1/s, W-free)."""

    omega_b: float
    kappa_a: float
    gamma_b: float
    g_om: float
    eps_pump: float
    eps_probe: float
    eps_rf: float
    delta_a: float

    def without_saw(self) -> "ModelParams":
        """Model with the SAW channel off: no coupling, no RF drive."""
        return replace(self, g_om=0.0, eps_rf=0.0)


def field_amplitude(power: float, kappa_a: float, omega: float) -> float:
    """Optical drive amplitude sqrt(P * kappa_a / (hbar * omega)) [1/s].

    Parameters
    ----------
    power : float
        Input optical power [W], >= 0.
    kappa_a : float
        Total cavity energy decay rate [rad/s], > 0.
    omega : float
        Angular frequency of the drive field [rad/s], > 0.
    """
    _nonnegative("power", power)
    _positive("kappa_a", kappa_a)
    _positive("omega", omega)
    return math.sqrt(power * kappa_a / (hbar * omega))


def saw_amplitude(p_rf: float, l_idt: float, v_saw: float, rho: float,
                  omega_b: float) -> float:
    """BAR displacement amplitude q0 = sqrt(P_rf / (4*pi*l*v^2*rho*omega_b)) [m]."""
    _nonnegative("p_rf", p_rf)
    _positive("l_idt", l_idt)
    _positive("v_saw", v_saw)
    _positive("rho", rho)
    _positive("omega_b", omega_b)
    return math.sqrt(p_rf / (4.0 * math.pi * l_idt * v_saw ** 2 * rho * omega_b))


def saw_velocity(lambda_saw: float, omega_b: float) -> float:
    """SAW velocity from its wavelength: v = lambda_s * omega_b / (2*pi) [m/s]."""
    _positive("lambda_saw", lambda_saw)
    _positive("omega_b", omega_b)
    return lambda_saw * omega_b / TWO_PI


def saw_wavelength(v_saw: float, omega_b: float) -> float:
    """SAW wavelength from its velocity: lambda_s = 2*pi*v/omega_b [m]."""
    _positive("v_saw", v_saw)
    _positive("omega_b", omega_b)
    return TWO_PI * v_saw / omega_b


def rf_force(mass: float, omega_b: float, q0: float) -> float:
    """RF driving force F = 4*m*omega_b^2*q0 [N]."""
    _positive("mass", mass)
    _positive("omega_b", omega_b)
    _nonnegative("q0", q0)
    return 4.0 * mass * omega_b ** 2 * q0


def rf_amplitude(f_rf: float, omega_b: float, mass: float) -> float:
    """RF drive amplitude eps_rf = F * sqrt(1/(8*hbar*omega_b*m)) [1/s]."""
    _nonnegative("f_rf", f_rf)
    _positive("omega_b", omega_b)
    _positive("mass", mass)
    return f_rf * math.sqrt(1.0 / (8.0 * hbar * omega_b * mass))


def phonon_amplitude(eps_rf: float, omega_b: float) -> tuple[float, float]:
    """Mean phonon amplitude and number: b0 = eps_rf/(2*omega_b), n0 = b0^2."""
    _nonnegative("eps_rf", eps_rf)
    _positive("omega_b", omega_b)
    b0 = eps_rf / (2.0 * omega_b)
    return b0, b0 * b0


def zero_point_length(omega_b: float, mass: float) -> float:
    """Zero-point displacement x_zpf = sqrt(hbar/(2*omega_b*m)) [m]."""
    _positive("omega_b", omega_b)
    _positive("mass", mass)
    return math.sqrt(hbar / (2.0 * omega_b * mass))


def coupling_strength(omega_a: float, length: float, omega_b: float,
                      mass: float) -> float:
    """Single-photon coupling g = (omega_a/L) * sqrt(hbar/(2*omega_b*m)) [rad/s]."""
    _positive("omega_a", omega_a)
    _positive("length", length)
    return omega_a / length * zero_point_length(omega_b, mass)


def estimate_mass(rho: float, area: float, thickness: float) -> float:
    """Optional motional-mass estimate rho * A_eff * d [kg]; never applied silently."""
    _positive("rho", rho)
    _positive("area", area)
    _positive("thickness", thickness)
    return rho * area * thickness


def rf_power_bounds(eps_pump: float, delta_a: float, g_om: float,
                    kappa_a: float, gamma_b: float, l_idt: float,
                    v_saw: float, rho: float, mass: float) -> PowerBounds:
    """RF power window compatible with a visible transmission window.

    The lower bound keeps the mean phonon amplitude at unity or above,

        P_min = 8*hbar*pi*l_idt*v_saw^2*rho / m_b ,

    and the upper bound keeps the pump-enhanced coupling above the window
    threshold despite the static spring shift,

        P_max = P_min * (eps_pu*sqrt(1/(kappa_a*gamma_b)) + delta_a/(2*g))^2 .

    A bracket below one makes the window infeasible (P_max < P_min); that is
    reported through the returned flag rather than raised.
    """
    _nonnegative("eps_pump", eps_pump)
    _positive("g_om", g_om)
    _positive("kappa_a", kappa_a)
    _positive("gamma_b", gamma_b)
    _positive("l_idt", l_idt)
    _positive("v_saw", v_saw)
    _positive("rho", rho)
    _positive("mass", mass)
    p_min = 8.0 * hbar * math.pi * l_idt * v_saw ** 2 * rho / mass
    bracket = (eps_pump * math.sqrt(1.0 / (kappa_a * gamma_b))
               + delta_a / (2.0 * g_om))
    bounds = PowerBounds(p_min=p_min, p_max=p_min * bracket ** 2, bracket=bracket)
    if not bounds.feasible:
        warnings.warn(
            f"infeasible RF power window: P_max = {bounds.p_max:.3e} W below "
            f"P_min = {bounds.p_min:.3e} W", stacklevel=2)
    return bounds


def derive_quantities(device: DeviceConfig, delta_a: float) -> DerivedQuantities:
    """Evaluate the full derivation chain for a device at a resolved detuning.

    ``delta_a`` must already be resolved (explicit value or the output of the
    sideband lock); the pump converts at omega_pump = omega_a - delta_a and
    the probe at the window center omega_pump + omega_b.

    Returns a DerivedQuantities whose provenance records which scalars came
    from formulas and which the user pinned. A pinned g_om never alters any
    formula-derived sibling; the geometry value stays available alongside it.
    """
    cav, mech, drive = device.cavity, device.mechanical, device.drive
    omega_pump = cav.omega_a - delta_a
    if omega_pump <= 0.0:
        raise ValueError(f"delta_a {delta_a:g} puts the pump at negative frequency")

    eps_pump = field_amplitude(drive.p_pump, cav.kappa_a, omega_pump)
    eps_probe = field_amplitude(drive.p_probe, cav.kappa_a, omega_pump + mech.omega_b)
    q0 = saw_amplitude(drive.p_rf, mech.l_idt, mech.v_saw,
                       device.stack.rho_upper, mech.omega_b)
    f = rf_force(mech.mass, mech.omega_b, q0)
    eps_rf = rf_amplitude(f, mech.omega_b, mech.mass)
    b0, n0 = phonon_amplitude(eps_rf, mech.omega_b)
    x_zpf = zero_point_length(mech.omega_b, mech.mass)
    g_formula = coupling_strength(cav.omega_a, cav.length, mech.omega_b, mech.mass)
    g_used = device.g_om if device.g_om is not None else g_formula

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # infeasibility is reported via the flag
        bounds = rf_power_bounds(eps_pump, delta_a, g_used, cav.kappa_a,
                                 mech.gamma_b, mech.l_idt, mech.v_saw,
                                 device.stack.rho_upper, mech.mass)

    provenance = {
        "eps_pump": FORMULA,
        "eps_probe": FORMULA,
        "q0": FORMULA,
        "f_rf": FORMULA,
        "eps_rf": FORMULA,
        "g_om": USER if device.g_om is not None else FORMULA,
        "g_om_formula": FORMULA,
        "b0": FORMULA,
        "n0": FORMULA,
        "x_zpf": FORMULA,
        "v_saw": FORMULA,
        "lambda_saw": FORMULA,
        "omega_pump": FORMULA,
        "p_rf_min": FORMULA,
        "p_rf_max": FORMULA,
    }
    return DerivedQuantities(
        eps_pump=eps_pump, eps_probe=eps_probe, q0=q0, f_rf=f, eps_rf=eps_rf,
        g_om=g_used, g_om_formula=g_formula, b0=b0, n0=n0, x_zpf=x_zpf,
        v_saw=mech.v_saw, lambda_saw=mech.lambda_saw, omega_pump=omega_pump,
        p_rf_min=bounds.p_min, p_rf_max=bounds.p_max, provenance=provenance,
    )


def build_model(device: DeviceConfig, delta_a: float,
                derived: Optional[DerivedQuantities] = None,
                no_saw: bool = False) -> ModelParams:
    """Assemble the scalar coupled-mode model; ``no_saw`` forces the bare cavity."""
    if derived is None:
        derived = derive_quantities(device, delta_a)
    mp = ModelParams(
        omega_b=device.mechanical.omega_b,
        kappa_a=device.cavity.kappa_a,
        gamma_b=device.mechanical.gamma_b,
        g_om=derived.g_om,
        eps_pump=derived.eps_pump,
        eps_probe=derived.eps_probe,
        eps_rf=derived.eps_rf,
        delta_a=delta_a,
    )
    return mp.without_saw() if no_saw else mp


def validate_regime(device: DeviceConfig,
                    g_total: Optional[float] = None) -> RegimeReport:
    """Check sideband resolution, linewidth hierarchy, and the window threshold.

    The threshold check needs the pump-enhanced coupling from a solved steady
    state; pass ``g_total`` to include it, otherwise it is left undecided.
    All checks report pass/warn only; nothing raises here.
    """
    cav, mech = device.cavity, device.mechanical
    sideband = mech.omega_b / cav.kappa_a
    omit = cav.kappa_a / mech.gamma_b
    threshold = math.sqrt(cav.kappa_a * mech.gamma_b) / 2.0
    return RegimeReport(
        sideband_ratio=sideband,
        sideband_ok=SIDEBAND_RATIO_LO <= sideband <= SIDEBAND_RATIO_HI,
        omit_ratio=omit,
        omit_ok=omit >= OMIT_RATIO_MIN,
        g_total=g_total,
        threshold=threshold,
        threshold_ok=None if g_total is None else g_total >= threshold,
    )

"""Linearized probe response: transmission quadratures, phase, group delay.

Standard rotating-wave closed form for the transparency window: with
lam_a = delta - Delta_eff and lam_b = delta - omega_b,

    da_plus = (gamma_b/2 - i*lam_b) * eps_pr / D
    eps_T   = kappa_a * (gamma_b/2 - i*lam_b) / D
    D       = (kappa_a/2 - i*lam_a)*(gamma_b/2 - i*lam_b) + G^2

where G = |g_om * a_s| (the pump phase is absorbed; G^2 means |G|^2).
Then t_pr = eps_T - 1, T_pr = |t_pr|^2, phi_T = arg eps_T, and the group
delay is tau_T = d(phi_T)/d(omega_pr), evaluated both in closed form and by
finite differences of the unwrapped phase.

``probe_component_full`` additionally solves the complete linear response
including the lower motional sideband (the counter-rotating couplings the
closed form drops); see its docstring.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import params as _params
from .params import DeviceConfig, ModelParams
from .steady_state import SteadyState, lock_pump_detuning, solve_steady_state

log = logging.getLogger(__name__)

DELAY_CONSISTENCY_RTOL = 1e-4


def _lambdas(ss: SteadyState, mp: ModelParams, delta):
    delta = np.asarray(delta, dtype=float)
    return delta - ss.delta_eff, delta - mp.omega_b


def _denominator(mp: ModelParams, ss: SteadyState, lam_a, lam_b):
    n = 0.5 * mp.gamma_b - 1j * lam_b
    q = 0.5 * mp.kappa_a - 1j * lam_a
    return n, q, q * n + ss.g_total ** 2


def probe_component(mp: ModelParams, ss: SteadyState, delta):
    """Probe-frequency component da_plus of the cavity fluctuation [1/s units of eps_pr]."""
    lam_a, lam_b = _lambdas(ss, mp, delta)
    n, _, d = _denominator(mp, ss, lam_a, lam_b)
    return n * mp.eps_probe / d


def output_quadrature(mp: ModelParams, ss: SteadyState, delta):
    """Output quadrature eps_T = kappa_a*da_plus/eps_pr (probe-amplitude free)."""
    lam_a, lam_b = _lambdas(ss, mp, delta)
    n, _, d = _denominator(mp, ss, lam_a, lam_b)
    return mp.kappa_a * n / d


def transmission(eps_t):
    """Transmission coefficient and power transmission: t = eps_T - 1, T = |t|^2."""
    t = np.asarray(eps_t) - 1.0
    return t, np.abs(t) ** 2


def phase(eps_t):
    """Principal-value phase of eps_T in (-pi, pi]; zero output field has no phase."""
    arr = np.asarray(eps_t)
    if np.any(arr == 0):
        raise ValueError("phase undefined: eps_T = 0")
    return np.angle(arr)


def group_delay_analytic(mp: ModelParams, ss: SteadyState, delta):
    """Closed-form tau_T = Im[(1/eps_T) d(eps_T)/d(omega_pr)] [s].

    At fixed pump both lam_a and lam_b advance one-for-one with the probe
    frequency, so d/d(omega_pr) = d/d(delta).
    """
    lam_a, lam_b = _lambdas(ss, mp, delta)
    n, q, d = _denominator(mp, ss, lam_a, lam_b)
    # eps_T' / eps_T = n'/n - d'/d with n' = -i, d' = -i*(n + q)
    return np.imag(-1j / n + 1j * (n + q) / d)


def group_delay_fd(mp: ModelParams, ss: SteadyState, delta, step: Optional[float] = None):
    """Finite-difference group delay from the unwrapped phase.

    Central stencil with adaptive step max(1e-6*Gamma, 1e-3 rad/s); the
    two-point phase difference is continued to the nearest multiple of 2*pi
    via arg(eps_T(+h) * conj(eps_T(-h))).
    """
    if step is None:
        step = max(1e-6 * window_width(ss.g_total, mp.kappa_a, mp.gamma_b), 1e-3)
    delta = np.asarray(delta, dtype=float)
    e_hi = output_quadrature(mp, ss, delta + step)
    e_lo = output_quadrature(mp, ss, delta - step)
    return np.angle(e_hi * np.conj(e_lo)) / (2.0 * step)


def group_delay(mp: ModelParams, ss: SteadyState, delta, check: bool = True,
                rtol: float = DELAY_CONSISTENCY_RTOL):
    """Group delay via the analytic path, cross-checked against finite differences.

    Both evaluations run on every call; the analytic value is returned and
    the pair is logged. Disagreement beyond ``rtol`` at the |tau| peak is a
    consistency error.
    """
    tau = group_delay_analytic(mp, ss, delta)
    tau_fd = group_delay_fd(mp, ss, delta)
    peak = int(np.argmax(np.abs(np.atleast_1d(tau))))
    t_a = np.atleast_1d(tau)[peak]
    t_f = np.atleast_1d(tau_fd)[peak]
    log.debug("group delay at |tau| peak: analytic %.9e s, finite-diff %.9e s", t_a, t_f)
    if check and abs(t_a - t_f) > rtol * max(abs(t_a), 1e-300):
        raise RuntimeError(
            f"group-delay consistency failure at |tau| peak: analytic {t_a:.9e} s "
            f"vs finite-difference {t_f:.9e} s (rtol {rtol:g})")
    return tau


def window_width(g_total: float, kappa_a: float, gamma_b: float) -> float:
    """Transparency window width Gamma = gamma_b + 4*G^2/kappa_a [rad/s]."""
    if kappa_a <= 0.0:
        raise ValueError(f"kappa_a must be positive, got {kappa_a!r}")
    return gamma_b + 4.0 * g_total ** 2 / kappa_a


def probe_component_full(mp: ModelParams, ss: SteadyState, delta):
    """Linear probe response retaining the lower motional sideband.

    Solves the 4x4 linear system coupling (da_plus, db_plus, da_minus*,
    db_minus*); the standard closed form keeps only the first two. The
    difference is the counter-rotating (Stokes) contribution, suppressed
    only as omega_b grows beyond kappa_a; it is what the time-domain
    integration of the full mean-field equations actually measures.
    """
    deltas = np.atleast_1d(np.asarray(delta, dtype=float))
    g_c = mp.g_om * ss.a_s  # complex pump-enhanced coupling
    out = np.empty(deltas.shape, dtype=complex)
    for i, dl in enumerate(deltas):
        lam_a = dl - ss.delta_eff
        lam_b = dl - mp.omega_b
        m = np.array([
            [0.5 * mp.kappa_a - 1j * lam_a, -1j * g_c, 0.0, -1j * g_c],
            [-1j * np.conj(g_c), 0.5 * mp.gamma_b - 1j * lam_b, -1j * g_c, 0.0],
            [0.0, 1j * np.conj(g_c), 0.5 * mp.kappa_a - 1j * (dl + ss.delta_eff),
             1j * np.conj(g_c)],
            [1j * np.conj(g_c), 0.0, 1j * g_c,
             0.5 * mp.gamma_b - 1j * (dl + mp.omega_b)],
        ])
        rhs = np.array([mp.eps_probe, 0.0, 0.0, 0.0], dtype=complex)
        out[i] = np.linalg.solve(m, rhs)[0]
    return out[0] if np.isscalar(delta) or np.asarray(delta).ndim == 0 else out


@dataclass(frozen=True)
class Spectrum:
    """Per-detuning response arrays at one operating point."""

    delta: np.ndarray       # absolute probe-pump detuning [rad/s]
    eps_t: np.ndarray       # complex output quadrature
    t_pr: np.ndarray        # complex transmission coefficient
    power_t: np.ndarray     # |t_pr|^2
    phi: np.ndarray         # phase [rad]
    tau: np.ndarray         # group delay [s]
    steady: SteadyState


def evaluate_spectrum(mp: ModelParams, ss: SteadyState, deltas) -> Spectrum:
    deltas = np.asarray(deltas, dtype=float)
    eps_t = output_quadrature(mp, ss, deltas)
    t, power = transmission(eps_t)
    return Spectrum(delta=deltas, eps_t=eps_t, t_pr=t, power_t=power,
                    phi=phase(eps_t), tau=group_delay(mp, ss, deltas),
                    steady=ss)


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition for spectra, optionally swept over a drive power.

    deltas: absolute probe-pump detunings [rad/s], strictly increasing, >= 2.
    axis:   None for a single spectrum, else "P_pu" or "P_rf"; values then
            hold the per-point powers [W].
    The pump detuning is locked (or taken explicitly) once at the nominal
    device drive and held fixed across the secondary axis.
    """

    deltas: np.ndarray
    axis: Optional[str] = None
    values: Optional[np.ndarray] = None
    branch: str = "lower"
    no_saw: bool = False

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        if d.ndim != 1 or d.size < 2:
            raise ValueError("delta grid needs at least 2 points")
        if not np.all(np.diff(d) > 0):
            raise ValueError("delta grid must be strictly increasing")
        if self.axis is not None:
            if self.axis not in ("P_pu", "P_rf"):
                raise ValueError(f"sweep axis must be P_pu or P_rf, got {self.axis!r}")
            v = np.asarray(self.values, dtype=float)
            if v.ndim != 1 or v.size < 2:
                raise ValueError("secondary axis needs at least 2 points")
            if not np.all(np.diff(v) > 0):
                raise ValueError("secondary axis must be strictly increasing")


@dataclass
class SweepResult:
    """Row-major assembly of spectra over the (optional) secondary axis."""

    deltas: np.ndarray
    axis: Optional[str]
    values: Optional[np.ndarray]
    spectra: list            # Spectrum per secondary point (length 1 if no axis)
    ok: np.ndarray           # per secondary point
    errors: list             # (index, message) for failed points
    delta_a: float
    meta: dict = field(default_factory=dict)

    @property
    def n_failed(self) -> int:
        return int(np.size(self.ok) - np.count_nonzero(self.ok))


def resolve_detuning(device: DeviceConfig, no_saw: bool = False,
                     branch: str = "lower", max_iter: int = 6) -> float:
    """Resolve the device's detuning directive to a number.

    An explicit delta_a passes through. The sideband lock iterates with the
    pump-amplitude conversion (eps_pu depends on omega_pump = omega_a -
    delta_a) to a 1e-9 relative fixed point; two passes suffice at optical
    frequencies.
    """
    drive = device.drive
    if drive.delta_a is not None:
        return float(drive.delta_a)
    omega_b = device.mechanical.omega_b
    delta_a = omega_b
    for _ in range(max_iter):
        mp = _params.build_model(device, delta_a, no_saw=no_saw)
        new = lock_pump_detuning(mp, branch=branch)
        if abs(new - delta_a) <= 1e-9 * omega_b:
            return new
        delta_a = new
    raise RuntimeError(f"sideband lock did not settle after {max_iter} passes")


def _device_at(device: DeviceConfig, axis: Optional[str], value: Optional[float]) -> DeviceConfig:
    if axis is None:
        return device
    from dataclasses import replace as _replace
    if axis == "P_pu":
        # keep the probe perturbative as the pump scales down
        drive = _replace(device.drive, p_pump=value,
                         p_probe=min(device.drive.p_probe, 1e-3 * value))
    else:
        drive = _replace(device.drive, p_rf=value)
    return _replace(device, drive=drive)


def sweep(device: DeviceConfig, spec: SweepSpec) -> SweepResult:
    """Spectra over the delta grid, re-solving the steady state per power point.

    Per-point solver failures flag the point and the sweep continues; rows
    for failed points are emitted as NaN, never dropped. Point evaluations
    are independent and deterministic, so results do not depend on
    scheduling.
    """
    delta_a = resolve_detuning(device, no_saw=spec.no_saw, branch=spec.branch)
    values = [None] if spec.axis is None else list(np.asarray(spec.values, dtype=float))
    spectra, errors = [], []
    ok = np.ones(len(values), dtype=bool)
    for i, v in enumerate(values):
        try:
            dev_i = _device_at(device, spec.axis, v)
            mp = _params.build_model(dev_i, delta_a, no_saw=spec.no_saw)
            ss = solve_steady_state(mp, branch=spec.branch)
            spectra.append(evaluate_spectrum(mp, ss, spec.deltas))
        except (ValueError, RuntimeError) as exc:
            ok[i] = False
            errors.append((i, str(exc)))
            spectra.append(None)
    return SweepResult(
        deltas=np.asarray(spec.deltas, dtype=float), axis=spec.axis,
        values=None if spec.axis is None else np.asarray(spec.values, dtype=float),
        spectra=spectra, ok=ok, errors=errors, delta_a=delta_a,
        meta={"branch": spec.branch, "no_saw": spec.no_saw},
    )


def extract_fwhm(deltas: np.ndarray, re_eps_t: np.ndarray) -> float:
    """Numerical FWHM of the transparency dip in Re[eps_T].

    The dip sits on the flat cavity-line background close to 2; crossings of
    the half-depth level are located by linear interpolation on each side of
    the minimum.
    """
    deltas = np.asarray(deltas, dtype=float)
    y = np.asarray(re_eps_t, dtype=float)
    i_min = int(np.argmin(y))
    if i_min == 0 or i_min == y.size - 1:
        raise ValueError("dip minimum at grid edge; widen the delta grid")
    baseline = float(np.max(y))
    level = 0.5 * (baseline + y[i_min])

    def cross(side: slice, reverse: bool) -> float:
        seg_y = y[side]
        seg_d = deltas[side]
        idx = np.nonzero((seg_y[:-1] - level) * (seg_y[1:] - level) <= 0.0)[0]
        if idx.size == 0:
            raise ValueError("half-depth crossing not found; widen the delta grid")
        j = idx[-1] if reverse else idx[0]
        f = (level - seg_y[j]) / (seg_y[j + 1] - seg_y[j])
        return seg_d[j] + f * (seg_d[j + 1] - seg_d[j])

    left = cross(slice(0, i_min + 1), reverse=True)
    right = cross(slice(i_min, y.size), reverse=False)
    return right - left

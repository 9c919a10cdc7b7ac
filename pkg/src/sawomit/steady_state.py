"""Self-consistent classical steady state of the pumped cavity-BAR system.

With x = |a_s|^2 the static fixed point

    a_s = eps_pu / (i*Delta_eff + kappa_a/2)
    b_s = (i*g_om*x + eps_rf) / (i*omega_b + gamma_b/2)
    Delta_eff = Delta_a - 2*g_om*Re(b_s)

closes into a cubic in x (optical bistability): writing
Delta_eff = d0 - eta*x with

    d0   = Delta_a - g_om*eps_rf*gamma_b / (omega_b^2 + gamma_b^2/4)
    eta  = 2*g_om^2*omega_b / (omega_b^2 + gamma_b^2/4)

the photon number obeys  x*((d0 - eta*x)^2 + kappa_a^2/4) = eps_pu^2.

All functions are pure; callers may solve many operating points concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .params import ModelParams

BRANCH_NAMES = ("lower", "middle", "upper")

RESIDUAL_TOL = 1e-10
_POLISH_STEPS = 3


@dataclass(frozen=True)
class SteadyState:
    """Converged operating point plus the full branch list of the cubic."""

    delta_a: float            # pump-cavity detuning used [rad/s]
    a_s: complex              # cavity amplitude (photon-amplitude units)
    b_s: complex              # phonon amplitude (dimensionless)
    delta_eff: float          # spring-shifted detuning [rad/s]
    g_total: float            # |g_om * a_s| [rad/s]
    n_photon: float           # |a_s|^2 of the selected branch
    branches: tuple           # all real nonnegative roots, ascending in x
    branch_index: int
    branch: str


def spring_coefficients(mp: ModelParams) -> tuple[float, float]:
    """(eta, shift0) such that Delta_eff = (Delta_a - shift0) - eta*x."""
    denom = mp.omega_b ** 2 + 0.25 * mp.gamma_b ** 2
    eta = 2.0 * mp.g_om ** 2 * mp.omega_b / denom
    shift0 = mp.g_om * mp.eps_rf * mp.gamma_b / denom
    return eta, shift0


def _cubic(mp: ModelParams):
    eta, shift0 = spring_coefficients(mp)
    d0 = mp.delta_a - shift0
    half_k2 = 0.25 * mp.kappa_a ** 2

    def f(x):
        return x * ((d0 - eta * x) ** 2 + half_k2) - mp.eps_pump ** 2

    def fprime(x):
        w = d0 - eta * x
        return w * w + half_k2 - 2.0 * eta * x * w

    return f, fprime, eta, d0, half_k2


def photon_number_branches(mp: ModelParams) -> tuple[float, ...]:
    """All real nonnegative photon-number roots, ascending.

    The cubic's closed-form roots (companion-matrix solve) are polished with
    a few Newton steps to absorb cancellation at extreme rate ratios; a root
    whose polished residual stays above RESIDUAL_TOL (relative to eps_pu^2)
    is a numerical failure and raises.
    """
    f, fprime, eta, d0, half_k2 = _cubic(mp)
    target = mp.eps_pump ** 2
    if target == 0.0:
        return (0.0,)
    if eta == 0.0:
        return (target / (d0 * d0 + half_k2),)

    coeffs = (eta * eta, -2.0 * d0 * eta, d0 * d0 + half_k2, -target)
    raw = np.roots(coeffs)
    scale = max(abs(r.real) for r in raw)
    xs = []
    for r in raw:
        if abs(r.imag) > 1e-8 * max(abs(r.real), 1e-300):
            continue
        x = r.real
        for _ in range(_POLISH_STEPS):
            d = fprime(x)
            if d == 0.0:
                break
            x -= f(x) / d
        if x <= 0.0:
            continue
        if abs(f(x)) > RESIDUAL_TOL * target:
            raise RuntimeError(
                f"steady-state root polish failed: x={x:.6e}, "
                f"residual {abs(f(x))/target:.3e} > {RESIDUAL_TOL:g} "
                f"(delta_a={mp.delta_a:.6e}, eps_pu={mp.eps_pump:.6e})")
        xs.append(x)

    xs.sort()
    deduped = []
    for x in xs:
        if not deduped or x - deduped[-1] > 1e-8 * max(x, scale * 1e-8):
            deduped.append(float(x))
    if not deduped:
        raise RuntimeError(
            "no nonnegative real photon-number root found (internal failure: "
            f"coeffs={coeffs})")
    return tuple(deduped)


def _branch_index(branch: str, count: int) -> int:
    if branch not in BRANCH_NAMES:
        raise ValueError(f"branch must be one of {BRANCH_NAMES}, got {branch!r}")
    if branch == "lower":
        return 0
    if branch == "upper":
        return count - 1
    if count < 3:
        raise ValueError(
            f"branch 'middle' requires 3 steady-state branches, found {count}")
    return 1


def solve_steady_state(mp: ModelParams, branch: str = "lower") -> SteadyState:
    """Solve the self-consistent steady state and select a branch.

    The default "lower" branch (smallest |a_s|^2) connects continuously to
    the undriven state; "middle"/"upper" select the other bistable roots.
    The full ascending branch list is always returned for reporting.
    """
    xs = photon_number_branches(mp)
    idx = _branch_index(branch, len(xs))
    x = xs[idx]
    eta, shift0 = spring_coefficients(mp)
    delta_eff = (mp.delta_a - shift0) - eta * x
    a_s = mp.eps_pump / complex(0.5 * mp.kappa_a, delta_eff)
    b_s = complex(mp.eps_rf, mp.g_om * x) / complex(0.5 * mp.gamma_b, mp.omega_b)
    return SteadyState(
        delta_a=mp.delta_a, a_s=a_s, b_s=b_s, delta_eff=delta_eff,
        g_total=total_coupling(mp.g_om, a_s), n_photon=x,
        branches=xs, branch_index=idx, branch=branch,
    )


def total_coupling(g_om: float, a_s: complex) -> float:
    """Pump-enhanced coupling magnitude |g_om * a_s| [rad/s]."""
    return abs(g_om) * abs(a_s)


def steady_residuals(mp: ModelParams, ss: SteadyState) -> tuple[float, float]:
    """Relative residuals of the two fixed-point lines at (a_s, b_s)."""
    delta_eff = mp.delta_a - 2.0 * mp.g_om * ss.b_s.real
    a_rhs = mp.eps_pump / complex(0.5 * mp.kappa_a, delta_eff)
    b_rhs = complex(mp.eps_rf, mp.g_om * abs(ss.a_s) ** 2) \
        / complex(0.5 * mp.gamma_b, mp.omega_b)
    r_a = abs(ss.a_s - a_rhs) / max(abs(ss.a_s), 1e-300)
    r_b = abs(ss.b_s - b_rhs) / max(abs(ss.b_s), 1e-300)
    return r_a, r_b


def lock_pump_detuning(mp: ModelParams, target: Optional[float] = None,
                       branch: str = "lower", rtol: float = 1e-9,
                       max_expand: int = 60) -> float:
    """Pump detuning delta_a that puts the selected branch at Delta_eff = target.

    Default target is the red mechanical sideband omega_b. The relation is
    inverted explicitly where the branch is unique and by a bracketed root
    search on delta_a otherwise. Without optomechanical coupling there is no
    spring shift and delta_a = target exactly.
    """
    if target is None:
        target = mp.omega_b
    if mp.g_om == 0.0:
        return float(target)

    eta, shift0 = spring_coefficients(mp)
    x_target = mp.eps_pump ** 2 / (target ** 2 + 0.25 * mp.kappa_a ** 2)
    guess = target + shift0 + eta * x_target
    scale = max(abs(target), 1.0)

    def mismatch(delta_a: float) -> float:
        ss = solve_steady_state(replace(mp, delta_a=delta_a), branch=branch)
        return ss.delta_eff - target

    m0 = mismatch(guess)
    if abs(m0) <= rtol * scale:
        return guess

    # Bracket around the explicit inversion, doubling until a sign change.
    width = max(abs(m0), 1e-9 * scale)
    lo = hi = guess
    f_lo = f_hi = m0
    for _ in range(max_expand):
        lo, hi = guess - width, guess + width
        f_lo, f_hi = mismatch(lo), mismatch(hi)
        if f_lo == 0.0:
            return lo
        if f_hi == 0.0:
            return hi
        if f_lo * f_hi < 0.0:
            break
        width *= 2.0
    else:
        raise RuntimeError(
            f"detuning lock failed to bracket: target={target:.6e}, "
            f"guess={guess:.6e}, last bracket [{lo:.6e}, {hi:.6e}] "
            f"with mismatches ({f_lo:.3e}, {f_hi:.3e})")

    root = brentq(mismatch, lo, hi, xtol=0.25 * rtol * scale, rtol=8e-16)
    if abs(mismatch(root)) > rtol * scale:
        raise RuntimeError(
            f"detuning lock did not converge: residual "
            f"{abs(mismatch(root)):.3e} at delta_a={root:.6e}")
    return float(root)

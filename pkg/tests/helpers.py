"""Independent oracles shared between module and acceptance tests."""

import numpy as np

from sawomit import params as par
from sawomit import steady_state as sst


def brute_force_roots(mp, n_points=1_000_000, span_factor=1e3):
    """Independent root finder: sign-change scan over x plus bisection.

    Scans the self-consistency residual on a linear grid over
    [0, 4*eps_pu^2/kappa^2 * span_factor] (all roots satisfy
    x <= 4*eps_pu^2/kappa^2) and bisects each bracket to 1e-12 relative.
    """
    eta, shift0 = sst.spring_coefficients(mp)
    d0 = mp.delta_a - shift0
    half_k2 = 0.25 * mp.kappa_a ** 2
    target = mp.eps_pump ** 2

    def f(x):
        return x * ((d0 - eta * x) ** 2 + half_k2) - target

    hi = 4.0 * target / mp.kappa_a ** 2 * span_factor
    grid = np.linspace(0.0, hi, n_points)
    vals = grid * ((d0 - eta * grid) ** 2 + half_k2) - target
    sign_change = np.nonzero(vals[:-1] * vals[1:] < 0.0)[0]
    roots = []
    for i in sign_change:
        lo_x, hi_x = grid[i], grid[i + 1]
        for _ in range(200):
            mid = 0.5 * (lo_x + hi_x)
            if f(lo_x) * f(mid) <= 0.0:
                hi_x = mid
            else:
                lo_x = mid
            if hi_x - lo_x <= 1e-12 * max(hi_x, 1e-300):
                break
        roots.append(0.5 * (lo_x + hi_x))
    return roots


def random_model(rng):
    """Random operating point; ranges biased so a few percent land bistable."""
    kappa = 10.0 ** rng.uniform(6.0, 9.0)
    gamma = 10.0 ** rng.uniform(1.0, 4.0)
    omega_b = 10.0 ** rng.uniform(7.0, 9.5)
    if gamma >= omega_b:
        gamma = omega_b * 1e-3
    return par.ModelParams(
        omega_b=omega_b, kappa_a=kappa, gamma_b=gamma,
        g_om=10.0 ** rng.uniform(3.0, 7.0),
        eps_pump=10.0 ** rng.uniform(9.0, 12.0),
        eps_probe=0.0,
        eps_rf=10.0 ** rng.uniform(6.0, 12.0),
        delta_a=rng.uniform(-1.0, 3.0) * kappa,
    )

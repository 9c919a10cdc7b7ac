"""Shared fixtures: the reference device and its locked operating point."""

import math

import pytest

from sawomit import params as par
from sawomit import response as rsp
from sawomit import steady_state as sst
from sawomit.config import load_preset

TWO_PI = 2.0 * math.pi


def make_fig3_device(**drive_overrides) -> par.DeviceConfig:
    """Reference device built directly from the caption parameter set."""
    from dataclasses import replace
    device = load_preset("fig3").device
    if drive_overrides:
        device = replace(device, drive=replace(device.drive, **drive_overrides))
    return device


@pytest.fixture(scope="session")
def fig3_device():
    return make_fig3_device()


@pytest.fixture(scope="session")
def fig3_locked(fig3_device):
    """(delta_a, derived, model, steady state) at the sideband-locked point."""
    delta_a = rsp.resolve_detuning(fig3_device)
    derived = par.derive_quantities(fig3_device, delta_a)
    mp = par.build_model(fig3_device, delta_a, derived=derived)
    ss = sst.solve_steady_state(mp)
    return delta_a, derived, mp, ss


@pytest.fixture(scope="session")
def bistable_model():
    """Parameter set with three photon-number branches (verified by scan)."""
    return par.ModelParams(
        omega_b=TWO_PI * 1e7, kappa_a=TWO_PI * 1e6, gamma_b=TWO_PI * 10.0,
        g_om=TWO_PI * 1e3, eps_pump=1e10, eps_probe=0.0, eps_rf=0.0,
        delta_a=1.5 * TWO_PI * 1e6)

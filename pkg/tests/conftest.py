"""Shared fixtures; the expensive canonical-scenario runs are session scoped."""

from dataclasses import replace

import pytest

from radgas.domain import scenario_catalog
from radgas.integrator import controls_for, run_simulation


@pytest.fixture(scope="session")
def catalog():
    return scenario_catalog()


@pytest.fixture(scope="session")
def canonical_spec(catalog):
    return catalog["canonical"]


@pytest.fixture(scope="session")
def canonical_run(canonical_spec):
    """The full canonical run with stored states, shared by many checks."""
    return run_simulation(canonical_spec, sample_cadence=0.02, keep_states=True)


@pytest.fixture(scope="session")
def energy_drift_runs(canonical_spec):
    """Canonical runs at globally capped timesteps dt, dt/2, dt/4."""
    out = {}
    for cap in (0.02, 0.01, 0.005):
        controls = controls_for(canonical_spec, dt_max=cap)
        out[cap] = run_simulation(
            canonical_spec, sample_cadence=canonical_spec.T_end, controls=controls
        )
    return out


@pytest.fixture(scope="session")
def small_gaussian_spec(catalog):
    """Desk-scale variant whose waves never reach the boundary."""
    return replace(catalog["canonical"], L=10.0, N=128, T_end=1.0)

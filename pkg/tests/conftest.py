import math

import numpy as np
import pytest

from qbounce.physics import WavePacketParams, gqs_units
from qbounce.grid import Grid

# criterion id -> (passed, message); filled by test_acceptance
ACCEPTANCE = {}


def record(cid, passed, message):
    ACCEPTANCE[cid] = (bool(passed), message)
    line = f"criterion {cid}: {'PASS' if passed else 'FAIL'} | {message}"
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: (int("".join(ch for ch in c if ch.isdigit())), c)):
        passed, msg = ACCEPTANCE[cid]
        terminalreporter.write_line(f"criterion {cid}: {'PASS' if passed else 'FAIL'} | {msg}")


@pytest.fixture(scope="session")
def nominal():
    return WavePacketParams()


@pytest.fixture(scope="session")
def small():
    """A packet a few l_g above the mirror: about fifty states suffice."""
    return WavePacketParams(z0=20e-6, v0=0.0, sigma_z=2e-6, d=1e-3, D=2e-3)


@pytest.fixture(scope="session")
def small_grid(small):
    from qbounce.airy import airy_zero

    units = gqs_units(small.m, small.g)
    z_max = (airy_zero(50) + 10.0) * units.l_g
    n = 4096
    return Grid(-z_max, 2.0 * z_max / n, n)


@pytest.fixture(scope="session")
def nominal_model(nominal):
    from qbounce.model import BounceModel

    return BounceModel(nominal)


@pytest.fixture(scope="session")
def nominal_density(nominal_model):
    return nominal_model.density()


@pytest.fixture(scope="session")
def fisher_densities(nominal_model):
    """Densities at g0 +- delta and g0 +- delta/2 with delta = 1e-7 g0."""
    g0 = nominal_model.g0
    delta = 1e-7 * g0
    return delta, {
        s * h: nominal_model.density(g0 + s * h)
        for h in (delta, 0.5 * delta)
        for s in (1.0, -1.0)
    }


def cached_lookup(g0, dens):
    """density_fn that serves precomputed densities keyed by offset from g0."""

    def fn(g):
        off = min(dens, key=lambda k: abs(g0 + k - g))
        assert abs(g0 + off - g) < 1e-12 * g0
        return dens[off]

    return fn


@pytest.fixture(scope="session")
def nominal_fisher(nominal_model, fisher_densities):
    from qbounce.estimation import fisher_information

    delta, dens = fisher_densities
    return fisher_information(nominal_model, delta, density_fn=cached_lookup(nominal_model.g0, dens))


@pytest.fixture(scope="session")
def campaigns(nominal_model, nominal_fisher):
    """Desk-scale campaigns (M = 500), computed on first use and shared."""
    from qbounce.estimation import monte_carlo_campaign

    cache = {}

    def get(N):
        if N not in cache:
            cache[N] = monte_carlo_campaign(nominal_model, N, 500, seed=2024, fisher=nominal_fisher.value)
        return cache[N]

    return get


def rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def nearly(a, b, rel):
    return math.isclose(a, b, rel_tol=rel)

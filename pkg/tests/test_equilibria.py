import math

import numpy as np
import pytest

from befp.diagnostics import pde_residual
from befp.equilibria import (FUNDAMENTAL_MASS, EquilibriumParams, beta_from_mass,
                             befp_fundamental, befp_infinite_mass, bose_einstein,
                             bose_einstein_dr, fp_maxwellian, mass_from_beta, theta)
from befp.transform import BEFP, FP, RadialProfile, lambda_forward, mass_f_from_M

TWO_PI = 2 * math.pi
BETAS = [1.01, 1.1, 2.0, 10.0, 1e3]


@pytest.mark.parametrize("beta", BETAS)
def test_stationarity(rng, beta):
    # grad f + v f (1 + f) = 0, radially
    r = rng.uniform(0, 8, 1000)
    f = bose_einstein(beta, r)
    np.testing.assert_allclose(bose_einstein_dr(beta, r), -r * f * (1 + f), rtol=1e-13, atol=1e-300)
    assert np.abs(bose_einstein_dr(beta, r) + r * f * (1 + f)).max() <= 1e-8


@pytest.mark.parametrize("beta", BETAS)
def test_triangle_closure(beta):
    m = mass_from_beta(beta)
    assert beta_from_mass(m) == pytest.approx(beta, rel=1e-12)
    p = EquilibriumParams.from_beta(beta)
    assert p.mass_M == pytest.approx(TWO_PI / (beta - 1), rel=1e-14)
    assert mass_f_from_M(p.mass_M) == pytest.approx(m, rel=1e-12)
    q = EquilibriumParams.from_fp_mass(p.mass_M)
    assert q.beta == pytest.approx(beta, rel=1e-12)
    assert EquilibriumParams.from_mass(m).beta == pytest.approx(beta, rel=1e-12)


@pytest.mark.parametrize("beta", [1.1, 2.0, 10.0])
def test_equilibrium_mass_by_quadrature(grid, beta):
    p = RadialProfile.from_density(grid, lambda r: bose_einstein(beta, r), kind=BEFP)
    assert p.mass() == pytest.approx(mass_from_beta(beta), rel=1e-9)


def test_inconsistent_params_rejected():
    with pytest.raises(ValueError):
        EquilibriumParams(2.0, 1.0, TWO_PI)
    with pytest.raises(ValueError):
        EquilibriumParams(2.0, mass_from_beta(2.0), 1.0)


@pytest.mark.parametrize("bad", [1.0, 0.5, -3.0])
def test_beta_at_most_one_rejected(bad):
    with pytest.raises(ValueError):
        bose_einstein(bad, 1.0)
    with pytest.raises(ValueError):
        mass_from_beta(bad)


def test_beta_close_to_one_accurate():
    beta = 1 + 1e-12
    # expm1 form keeps the relative error at round-off near the origin
    assert bose_einstein(beta, 1e-4) == pytest.approx(1 / ((beta - 1) + beta * math.expm1(0.5e-8)), rel=1e-12)
    assert math.isfinite(mass_from_beta(beta))


def test_nonpositive_mass_rejected():
    for m in (0.0, -1.0):
        with pytest.raises(ValueError):
            beta_from_mass(m)


def test_theta():
    assert theta(0.0) == 0.0
    assert theta(1e-10) == pytest.approx(2e-10, rel=1e-9)
    assert theta(50.0) == 1.0


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_fundamental_mass_conserved(grid, t):
    p = RadialProfile.from_density(grid, lambda r: befp_fundamental(t, r), kind=BEFP)
    assert p.mass() == pytest.approx(FUNDAMENTAL_MASS, rel=1e-9)


def test_fundamental_is_transform_of_fp_kernel(grid):
    t = 0.8
    th = float(theta(t))
    g = RadialProfile.from_density(grid, lambda r: np.exp(-r * r / (2 * th)) / (TWO_PI * th))
    f = lambda_forward(g)
    np.testing.assert_allclose(f.values, grid.nodes * befp_fundamental(t, grid.nodes), atol=1e-10)


def test_fundamental_tends_to_equilibrium():
    r = np.linspace(0, 6, 100)
    beta = beta_from_mass(FUNDAMENTAL_MASS)
    assert beta == pytest.approx(TWO_PI + 1, rel=1e-13)
    np.testing.assert_allclose(befp_fundamental(40.0, r), bose_einstein(beta, r), rtol=1e-13)


def test_fundamental_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        befp_fundamental(0.0, 1.0)


def test_fundamental_pde_residual(rng):
    t = rng.uniform(0.1, 4.0, 500)
    r = rng.uniform(0.05, 5.0, 500)
    res = pde_residual(befp_fundamental, t, r, dt=1e-4, dr=1e-4)
    assert np.abs(res).max() <= 1e-6


def test_equilibrium_pde_residual(rng):
    r = rng.uniform(0.05, 5.0, 300)
    res = pde_residual(lambda t, x: bose_einstein(2.0, x) + 0 * t, np.ones(300), r)
    assert np.abs(res).max() < 1e-8


def test_infinite_mass_solution_residual(rng):
    t = rng.uniform(0.0, 1.0, 300)
    r = rng.uniform(0.2, 3.0, 300)
    res = pde_residual(lambda s, x: befp_infinite_mass(s, x, 1.0), t, r, dt=1e-3, dr=1e-3)
    assert np.abs(res).max() < 1e-6
    with pytest.raises(ValueError):
        befp_infinite_mass(0.0, 1.0, 0.0)


def test_residual_detects_non_solution(rng):
    r = rng.uniform(0.2, 3.0, 50)
    res = pde_residual(lambda t, x: fp_maxwellian(3.0, x) + 0 * t, np.ones(50), r)
    assert np.abs(res).max() > 1e-3


def test_maxwellian_unit_mass(grid):
    p = RadialProfile.from_density(grid, lambda r: fp_maxwellian(2.5, r), kind=FP)
    assert p.mass() == pytest.approx(2.5, rel=1e-12)

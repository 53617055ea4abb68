import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from befp import quadrature
from befp.equilibria import bose_einstein, fp_maxwellian
from befp.transform import (BEFP, FP, RadialGrid, RadialProfile, cumulate,
                            inverse_lipschitz_bound, l1_distance, lambda_forward,
                            lambda_inverse, lipschitz_bound, mass_M_from_m,
                            mass_f_from_M)

TWO_PI = 2 * math.pi


def bumps(r, params):
    out = np.zeros_like(r)
    for a, c, w in params:
        out += a * np.exp(-0.5 * ((r - c) / w) ** 2)
    return out


bump = st.tuples(st.floats(0.0, 3.0), st.floats(0.0, 4.0), st.floats(0.3, 2.0))


# -- quadrature -------------------------------------------------------------

def test_weights_integrate_cubics_exactly():
    nodes = np.sort(np.r_[0.0, np.random.default_rng(3).uniform(0, 2, 30)])
    w = quadrature.interval_weights(nodes)
    vals = 1 + nodes - 3 * nodes**2 + nodes**3
    exact = nodes + nodes**2 / 2 - nodes**3 + nodes**4 / 4
    np.testing.assert_allclose(quadrature.cumulative(vals, nodes, weights=w), exact, atol=1e-13)


def test_quadrature_fourth_order():
    errs = []
    for n in (100, 200):
        r = np.linspace(0, 3, n + 1)
        errs.append(abs(quadrature.integrate(np.sin(r), r) - (1 - math.cos(3))))
    assert math.log2(errs[0] / errs[1]) > 3.7


# -- grid / profile ---------------------------------------------------------

@pytest.mark.parametrize("nodes", [[0.0, 1.0], [0.1, 1.0, 2.0], [0.0, 2.0, 1.0]])
def test_grid_rejects_bad_nodes(nodes):
    with pytest.raises(ValueError):
        RadialGrid(np.array(nodes))


def test_profile_rejects_negative(coarse_grid):
    with pytest.raises(ValueError):
        RadialProfile(coarse_grid, -np.ones(coarse_grid.nodes.size))
    with pytest.raises(ValueError):
        RadialProfile(coarse_grid, np.zeros(coarse_grid.nodes.size), atom=-1.0)


def test_csv_round_trip(tmp_path, coarse_grid):
    p = RadialProfile.from_density(coarse_grid, lambda r: np.exp(-r), atom=0.25, kind=BEFP)
    path = tmp_path / "p.csv"
    p.to_csv(path)
    first = path.read_text().splitlines()[0]
    assert first == "# atom=0.25 kind=befp"
    q = RadialProfile.from_csv(path)
    assert q.kind == BEFP and q.atom == 0.25
    np.testing.assert_array_equal(q.values, p.values)
    np.testing.assert_array_equal(q.grid.nodes, coarse_grid.nodes)


# -- cumulate ---------------------------------------------------------------

def test_cumulate_zero(coarse_grid):
    c = cumulate(RadialProfile.zeros(coarse_grid))
    assert not c.values.any()


def test_cumulate_pure_atom(coarse_grid):
    c = cumulate(RadialProfile(coarse_grid, np.zeros(coarse_grid.nodes.size), atom=0.7))
    np.testing.assert_array_equal(c.values, 0.7)


def test_cumulate_gaussian(grid):
    r = grid.nodes
    c = cumulate(RadialProfile(grid, r * np.exp(-r**2 / 2), kind=BEFP))
    # antiderivative of r exp(-r^2/2)
    np.testing.assert_allclose(c.values, -np.expm1(-r**2 / 2), atol=1e-12)
    assert np.all(np.diff(c.values) >= 0)


# -- forward / inverse ------------------------------------------------------

def test_forward_zero(coarse_grid):
    f = lambda_forward(RadialProfile.zeros(coarse_grid))
    assert f.kind == BEFP and not f.values.any() and f.atom == 0


def test_inverse_zero(coarse_grid):
    g = lambda_inverse(RadialProfile.zeros(coarse_grid, kind=BEFP))
    assert g.kind == FP and not g.values.any() and g.atom == 0


def test_forward_dirac_atom(coarse_grid):
    g = RadialProfile(coarse_grid, np.zeros(coarse_grid.nodes.size), atom=1 / TWO_PI)
    f = lambda_forward(g)
    # log(1 + 1/2pi) and 2pi log(1 + 1/2pi), evaluated with mpmath to 30 digits
    assert f.atom == pytest.approx(0.147691242300573387, rel=1e-14)
    assert f.mass() == pytest.approx(0.927971443622062936, rel=1e-14)
    assert lambda_inverse(f).atom == pytest.approx(1 / TWO_PI, rel=1e-14)


@pytest.mark.parametrize("M", [0.1, 1.0, TWO_PI, 50.0])
def test_forward_maxwellian_is_bose_einstein(grid, M):
    r = grid.nodes
    f = lambda_forward(RadialProfile.from_density(grid, lambda x: fp_maxwellian(M, x)))
    np.testing.assert_allclose(f.values, r * bose_einstein(TWO_PI / M + 1, r), rtol=0, atol=1e-9)


def test_inverse_of_bose_einstein_two(grid):
    r = grid.nodes
    g = lambda_inverse(RadialProfile.from_density(grid, lambda x: bose_einstein(2.0, x), kind=BEFP))
    np.testing.assert_allclose(g.values, r * np.exp(-r**2 / 2), atol=1e-9)
    assert g.mass() == pytest.approx(TWO_PI, rel=1e-10)


def test_inverse_rejects_huge_atom(coarse_grid):
    with pytest.raises(FloatingPointError):
        lambda_inverse(RadialProfile(coarse_grid, np.zeros(coarse_grid.nodes.size), atom=800.0, kind=BEFP))


def test_inverse_rejects_unresolved_profile():
    g = RadialGrid.uniform(8.0, 10)
    with pytest.raises(ValueError):
        lambda_inverse(RadialProfile(g, np.full(11, 50.0), kind=BEFP))


def test_kind_is_checked(coarse_grid):
    with pytest.raises(ValueError):
        lambda_forward(RadialProfile.zeros(coarse_grid, kind=BEFP))
    with pytest.raises(ValueError):
        lambda_inverse(RadialProfile.zeros(coarse_grid, kind=FP))


@settings(max_examples=40, deadline=None)
@given(st.lists(bump, min_size=1, max_size=4), st.floats(0.0, 2.0))
def test_round_trips(params, atom):
    grid = RadialGrid.uniform(8.0, 2000)
    r = grid.nodes
    d = bumps(r, params)
    p_fp = RadialProfile(grid, r * d, atom=atom, kind=FP)
    back = lambda_inverse(lambda_forward(p_fp))
    assert np.abs(back.values - p_fp.values).max() <= 1e-10 * (1 + p_fp.values.max())
    assert back.atom == pytest.approx(atom, abs=1e-12)
    p_be = RadialProfile(grid, r * d, atom=atom, kind=BEFP)
    back = lambda_forward(lambda_inverse(p_be))
    assert np.abs(back.values - p_be.values).max() <= 1e-10 * (1 + p_be.values.max())


def test_round_trip_large_values():
    grid = RadialGrid.uniform(8.0, 2000)
    r = grid.nodes
    p = RadialProfile(grid, 1e3 * r * np.exp(-(r - 2) ** 2), kind=FP)
    back = lambda_inverse(lambda_forward(p))
    assert np.abs(back.values - p.values).max() <= 1e-10 * (1 + p.values.max())


@settings(max_examples=30, deadline=None)
@given(st.lists(bump, min_size=1, max_size=3))
def test_order_and_mass_consistency(params):
    grid = RadialGrid.uniform(8.0, 2000)
    r = grid.nodes
    g = RadialProfile(grid, r * bumps(r, params))
    f = lambda_forward(g)
    assert np.all(f.values <= g.values + 1e-15)
    h = lambda_inverse(f.replace(values=g.values, kind=BEFP))
    assert np.all(h.values >= g.values - 1e-15)
    assert f.mass() == pytest.approx(mass_f_from_M(g.mass()), rel=1e-9, abs=1e-12)


def test_cumulative_monotonicity(grid):
    r = grid.nodes
    g1 = RadialProfile(grid, r * np.exp(-r**2 / 2))
    g2 = RadialProfile(grid, r * (np.exp(-r**2 / 2) + 0.3 * np.exp(-(r - 2) ** 2)))
    c1, c2 = cumulate(g1).values, cumulate(g2).values
    assert np.all(c1 <= c2)
    assert np.all(cumulate(lambda_forward(g1)).values <= cumulate(lambda_forward(g2)).values + 1e-14)


def test_narrow_bump_tends_to_dirac(grid):
    r = grid.nodes
    M = 2.0
    dirac = cumulate(lambda_forward(RadialProfile(grid, np.zeros(r.size), atom=M / TWO_PI))).values
    errs = []
    for width in (0.4, 0.2, 0.1):
        bump = r * np.exp(-0.5 * (r / width) ** 2)
        g = RadialProfile(grid, bump * (M / RadialProfile(grid, bump).mass()))
        c = cumulate(lambda_forward(g)).values
        errs.append(np.abs(c - dirac)[r >= 0.5].max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-4


# -- masses and Lipschitz constants -----------------------------------------

def test_mass_relation_values():
    assert mass_f_from_M(0.0) == 0.0
    assert mass_f_from_M(TWO_PI * (math.e - 1)) == pytest.approx(TWO_PI, rel=1e-15)
    assert mass_M_from_m(TWO_PI * math.log(2)) == pytest.approx(TWO_PI, rel=1e-15)


@given(st.floats(0.0, 1e4))
def test_mass_relation_inverse(M):
    m = mass_f_from_M(M)
    assert m <= M + 1e-12
    assert mass_M_from_m(m) == pytest.approx(M, rel=1e-12, abs=1e-15)


def test_mass_rejects_negative():
    with pytest.raises(ValueError):
        mass_f_from_M(-1.0)
    with pytest.raises(ValueError):
        mass_M_from_m(-1.0)


def test_lipschitz_factor_values():
    assert lipschitz_bound(1.0, 0.0) == 1.0
    assert lipschitz_bound(3.0, TWO_PI) == 2.0


def test_lipschitz_on_sampled_pairs(rng):
    grid = RadialGrid.uniform(8.0, 2000)
    r = grid.nodes
    worst = 0.0
    for _ in range(40):
        ps = []
        for _ in range(2):
            d = bumps(r, [(rng.uniform(0.1, 1), rng.uniform(0, 3), rng.uniform(0.3, 1.5)) for _ in range(2)])
            p = RadialProfile(grid, r * d)
            ps.append(p.replace(values=p.values * rng.uniform(0.1, TWO_PI) / p.mass()))
        g1, g2 = ps
        ratio = l1_distance(lambda_forward(g1), lambda_forward(g2)) / l1_distance(g1, g2)
        assert ratio <= lipschitz_bound(g1.mass(), g2.mass()) + 1e-9
        worst = max(worst, ratio)
    assert worst <= 2.0


def test_inverse_lipschitz_on_sampled_pairs(rng):
    grid = RadialGrid.uniform(8.0, 2000)
    r = grid.nodes
    for _ in range(20):
        ps = []
        for _ in range(2):
            d = bumps(r, [(rng.uniform(0.1, 1), rng.uniform(0, 3), rng.uniform(0.3, 1.5))])
            p = RadialProfile(grid, r * d, kind=BEFP)
            ps.append(p.replace(values=p.values * rng.uniform(0.1, 4.0) / p.mass()))
        f1, f2 = ps
        m = max(f1.mass(), f2.mass())
        ratio = l1_distance(lambda_inverse(f1), lambda_inverse(f2)) / l1_distance(f1, f2)
        assert ratio <= inverse_lipschitz_bound(m) + 1e-9

import warnings

import numpy as np
import pytest

from cwikel_lab.errors import AccuracyWarning
from cwikel_lab.lattice import GridSpec, SampledFunction
from cwikel_lab.majorization import singular_values
from cwikel_lab.moyal import (
    HS_BASE_CONSTANT,
    S,
    BSplineMixture,
    GaussianSymbol,
    Symbol,
    bspline_overlap,
    multi_indices,
    position_operator,
    product_hs_norm,
    product_kernel,
    random_bspline_mixture,
    self_dual_grid,
    sobolev_cwikel_ratio,
    sobolev_norm,
    symbol_derivative,
    tau_schatten_norm,
    theta_normal_form,
    translation_unitary,
    twisted_convolve,
    u_matrix,
    weyl_kernel,
    zero_symbol,
)

RNG = np.random.default_rng(3)
SMALL = GridSpec.centered(2, 8.0, 16)


def coords(grid):
    return [c.ravel() for c in grid.points()]


def inner_mask(grid, r):
    u1, u2 = coords(grid)
    return (np.abs(u1) < r) & (np.abs(u2) < r)


# -- normal form --------------------------------------------------------------

def test_normal_form_examples():
    nf = theta_normal_form(S)
    np.testing.assert_allclose(nf.Q, np.eye(2))
    np.testing.assert_allclose(nf.N, np.eye(2))
    np.testing.assert_allclose(nf.theta_tilde, S)
    nf = theta_normal_form(3 * S)
    np.testing.assert_allclose(nf.N, np.sqrt(3) * np.eye(2))
    assert theta_normal_form(np.zeros((2, 2))).rank == 0


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_normal_form_random(d):
    a = RNG.normal(size=(d, d))
    theta = a - a.T
    nf = theta_normal_form(theta)
    np.testing.assert_allclose(nf.reconstruct(), theta, atol=1e-12)
    np.testing.assert_allclose(nf.Q.T @ nf.Q, np.eye(d), atol=1e-12)
    assert np.all(np.diag(nf.N) > 0)
    assert nf.kernel_dim == d % 2


def test_normal_form_rejects_symmetric():
    with pytest.raises(ValueError):
        theta_normal_form(np.eye(2))


# -- U(s), D_k, V(t) ------------------------------------------------------------

def test_u_identity_and_lattice():
    np.testing.assert_array_equal(u_matrix([0, 0], SMALL).entries, np.eye(SMALL.size))
    with pytest.raises(ValueError):
        u_matrix([0.1, 0], SMALL)


def test_u_commutation_relation():
    g = GridSpec.centered(2, 4.0, 8)
    h = g.h
    s, t = np.array([h, 2 * h]), np.array([-3 * h, h])
    lhs = u_matrix(s, g).entries @ u_matrix(t, g).entries
    rhs = np.exp(0.5j * t @ S @ s) * u_matrix(s + t, g).entries
    u1, u2 = coords(g)

    def inside(a, b):
        lo, hi = g.axis[0] - 1e-12, g.axis[-1] + 1e-12
        return (a >= lo) & (a <= hi) & (b >= lo) & (b <= hi)

    ok = inside(u1 - s[0], u2 - s[1]) & inside(u1 - s[0] - t[0], u2 - s[1] - t[1])
    assert ok.sum() > 10
    assert np.abs(lhs - rhs)[ok].max() < 1e-13


def test_position_commutator():
    h = SMALL.h
    s = np.array([2 * h, -h])
    u = u_matrix(s, SMALL).entries
    inner = inner_mask(SMALL, 2.0)
    for k in (0, 1):
        d = position_operator(SMALL, k)
        c = d @ u - u @ d - s[k] * u
        assert np.abs(c[np.ix_(inner, inner)]).max() < 1e-13


def test_translation_unitary():
    t = np.array([2.0, -1.0])
    v = translation_unitary(t, SMALL).entries
    np.testing.assert_array_equal(translation_unitary([0, 0], SMALL).entries, np.eye(SMALL.size))
    np.testing.assert_allclose(v @ v.conj().T, np.eye(SMALL.size), atol=1e-13)
    u = u_matrix([SMALL.h, -2 * SMALL.h], SMALL).entries
    inner = inner_mask(SMALL, 1.5)
    assert np.abs((v @ u - u @ v)[:, inner]).max() < 1e-13
    for k in (0, 1):
        d = position_operator(SMALL, k)
        for s in (0.3, 1.0):
            lhs = v @ np.diag(np.exp(1j * s * np.diag(d))) @ v.conj().T
            rhs = np.diag(np.exp(1j * s * (np.diag(d) + t[k])))
            assert np.abs(np.diag(lhs - rhs))[inner].max() < 1e-13


# -- symbols and the half-dimensional kernel ------------------------------------

def cubic_b(x):
    ax = np.abs(x)
    return np.where(ax < 1, (4 - 6 * ax ** 2 + 3 * ax ** 3) / 6, np.where(ax < 2, (2 - ax) ** 3 / 6, 0.0))


def test_bspline_overlap_oracle():
    from scipy.integrate import quad

    for c1, w1, c2, w2 in [(0, 1, 0, 1), (0.3, 0.8, -1.1, 1.7), (0, 1, 5, 0.5), (1, 2, 0.5, 0.3)]:
        knots = sorted(set(np.r_[c1 + w1 * np.arange(-2, 3), c2 + w2 * np.arange(-2, 3)]))
        ref = quad(lambda x: cubic_b((x - c1) / w1) * cubic_b((x - c2) / w2), -20, 20, points=knots, limit=200)[0]
        assert bspline_overlap(c1, w1, c2, w2) == pytest.approx(ref, abs=1e-12)
    assert bspline_overlap(0, 1, 0, 1) == pytest.approx(151 / 315)


def test_mixture_norm_matches_fine_quadrature():
    m = random_bspline_mixture(RNG, 5.0)
    g = GridSpec.centered(2, 12.0, 512)
    assert m.sample(g).l2_norm() == pytest.approx(m.l2_norm(), rel=1e-6)


def test_weyl_kernel_zero_and_linear():
    g = self_dual_grid(64)
    assert not np.any(weyl_kernel(zero_symbol(g)).K)
    f = GaussianSymbol(1.0, (0.5, 0), 1.0).sample(g)
    k = GaussianSymbol(1.5, (0, -1), 2j).sample(g)
    combo = weyl_kernel(f.scale(2.0) + k.scale(-1j)).K
    np.testing.assert_allclose(combo, 2 * weyl_kernel(f).K - 1j * weyl_kernel(k).K, atol=1e-13)


def test_gaussian_isometry():
    g = self_dual_grid(256)
    sym = GaussianSymbol(1.5, (1.0, -0.5), 1 + 1j)
    assert tau_schatten_norm(sym.sample(g), 2) / sym.l2_norm() == pytest.approx(1.0, abs=1e-3)


def test_isometry_improves_under_refinement():
    m = random_bspline_mixture(RNG, 6.0)
    errs = []
    for n in (64, 128, 256):
        f = m.sample(self_dual_grid(n))
        errs.append(abs(tau_schatten_norm(f, 2) - f.l2_norm()) / f.l2_norm())
        assert abs(tau_schatten_norm(f, 2) - m.l2_norm()) / m.l2_norm() < 1e-3
    assert errs[2] < 0.6 * errs[1] < 0.36 * errs[0]


def test_decay_warning():
    g = self_dual_grid(32)
    wide = GaussianSymbol(6.0).sample(g)
    with pytest.warns(AccuracyWarning):
        weyl_kernel(wide)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        weyl_kernel(GaussianSymbol(1.0).sample(g))


def test_operator_norm_bound():
    g = self_dual_grid(64)
    for _ in range(5):
        f = random_bspline_mixture(RNG, 6.0).sample(g)
        assert tau_schatten_norm(f, np.inf) <= (2 * np.pi) ** -0.5 * f.l1_norm() * (1 + 1e-9)
    assert tau_schatten_norm(zero_symbol(g), 2) == 0.0


# -- derivatives and Sobolev norms ------------------------------------------------

def test_symbol_derivative():
    g = self_dual_grid(32)
    f = GaussianSymbol(1.0, (0.3, 0.2)).sample(g)
    np.testing.assert_array_equal(symbol_derivative(f, (0, 0)).values, f.values)
    a = symbol_derivative(symbol_derivative(f, (1, 0)), (0, 1)).values
    b = symbol_derivative(symbol_derivative(f, (0, 1)), (1, 0)).values
    np.testing.assert_allclose(a, b, rtol=1e-15)
    with pytest.raises(ValueError):
        symbol_derivative(f, (-1, 0))


def test_sobolev_gaussian_closed_form():
    g = self_dual_grid(128)
    sigma = 1.2
    f = GaussianSymbol(sigma).sample(g)
    expected = np.sqrt(np.pi) * sigma + 2 * np.sqrt(np.pi / 2) * sigma ** 2
    assert sobolev_norm(f, 1, 2) == pytest.approx(expected, rel=1e-6)
    assert sobolev_norm(f, 0, 2) == pytest.approx(tau_schatten_norm(f, 2))
    assert sobolev_norm(f, 0, 1) < sobolev_norm(f, 1, 1) < sobolev_norm(f, 2, 1)
    # L_2 membership criterion: sum of weighted symbol norms
    direct = sum(symbol_derivative(f, a).l2_norm() for a in multi_indices(2))
    assert sobolev_norm(f, 2, 2) == pytest.approx(direct, rel=1e-9)


# -- twisted convolution -------------------------------------------------------------

@pytest.fixture(scope="module")
def triple():
    g = self_dual_grid(48)
    f = GaussianSymbol(0.9, (0.5, -0.3), 1.0).sample(g)
    k = GaussianSymbol(1.1, (-0.4, 0.6), 1j).sample(g)
    m = GaussianSymbol(1.0, (0.2, 0.2), 0.5 - 1j).sample(g)
    return f, k, m


def test_twisted_product_realizes_operator_product(triple):
    f, k, _ = triple
    fk = twisted_convolve(f, k)
    prod = weyl_kernel(f).matrix @ weyl_kernel(k).matrix
    assert np.linalg.norm(prod - weyl_kernel(fk).matrix) / np.linalg.norm(prod) < 1e-6


def test_leibniz(triple):
    f, k, _ = triple
    fk = twisted_convolve(f, k)
    for a in ((1, 0), (0, 1)):
        lhs = symbol_derivative(fk, a).values
        rhs = twisted_convolve(symbol_derivative(f, a), k).values + twisted_convolve(f, symbol_derivative(k, a)).values
        assert np.abs(lhs - rhs).max() <= 1e-13 * np.abs(lhs).max()


def test_associativity(triple):
    f, k, m = triple
    a = twisted_convolve(twisted_convolve(f, k), m).values
    b = twisted_convolve(f, twisted_convolve(k, m)).values
    assert np.abs(a - b).max() / np.abs(a).max() < 1e-8


def test_delta_unit():
    g = self_dual_grid(32)
    f = GaussianSymbol(1.0, (0.4, 0)).sample(g)
    delta = np.zeros(g.shape)
    delta[g.N // 2, g.N // 2] = (2 * np.pi) ** 0.5 / g.cell_volume
    out = twisted_convolve(f, Symbol(g, delta))
    np.testing.assert_allclose(out.values, f.values, atol=1e-14)


# -- product kernel ----------------------------------------------------------------

def test_product_hs_structured_matches_dense():
    f = GaussianSymbol(0.6, (0.3, 0)).sample(SMALL)
    for _ in range(3):
        g = SampledFunction(SMALL, RNG.normal(size=SMALL.shape) + 1j * RNG.normal(size=SMALL.shape))
        assert product_hs_norm(f, g) == pytest.approx(np.linalg.norm(product_kernel(f, g).entries), rel=1e-12)


def test_product_hs_identity_and_zero():
    grid = GridSpec.centered(2, 20.0, 128)
    f = random_bspline_mixture(RNG, 4.5).sample(grid)
    g = SampledFunction(grid, random_bspline_mixture(RNG, 4.5)(*grid.points()))
    assert product_hs_norm(f, g) == pytest.approx((2 * np.pi) ** -0.5 * f.l2_norm() * g.l2_norm(), rel=1e-12)
    assert product_hs_norm(f, g.map(lambda v: 0 * v)) == 0.0


def test_product_hs_box_indicator():
    grid = GridSpec.centered(2, 20.0, 64)
    f = GaussianSymbol(0.5).sample(grid)
    one = SampledFunction(grid, np.ones(grid.shape))
    ratio = product_hs_norm(f, one) / ((2 * np.pi) ** -0.5 * f.l2_norm() * one.l2_norm())
    # only the strip within ~2 sigma of the edge loses mass
    assert 1 - 4 * 1.0 / grid.L < ratio <= 1


def test_translation_invariance_of_mu():
    h = SMALL.h
    u1, u2 = coords(SMALL)
    f = GaussianSymbol(0.5).sample(SMALL)
    g0 = SampledFunction(SMALL, ((u1 >= 0) & (u1 < 1) & (u2 >= 0) & (u2 < 1)) * np.exp(u1 + 1j * u2))
    n = np.array([-2.0, 1.0])
    gn = SampledFunction(SMALL, np.roll(g0.values, (int(n[0] / h), int(n[1] / h)), axis=(0, 1)))
    a = singular_values(product_kernel(f, g0).entries)
    b = singular_values(product_kernel(f, gn).entries)
    np.testing.assert_allclose(a, b, atol=1e-11)
    v = translation_unitary(n, SMALL).entries
    conj = v @ product_kernel(f, gn).entries @ v.conj().T
    assert np.abs(conj - product_kernel(f, g0).entries).max() < 1e-5


# -- ratios ---------------------------------------------------------------------------

def test_ratio_zero_and_modes():
    g1 = SampledFunction(SMALL, np.ones(SMALL.shape))
    assert sobolev_cwikel_ratio(zero_symbol(SMALL), 1.0, "weak_lattice", g=g1) == 0.0
    f = GaussianSymbol(0.5).sample(SMALL)
    with pytest.raises(ValueError):
        sobolev_cwikel_ratio(f, 1.0, "nope", g=g1)
    with pytest.raises(ValueError):
        sobolev_cwikel_ratio(f, 1.0, "weak_lattice")
    with pytest.raises(ValueError):
        sobolev_cwikel_ratio(f, 2.0, "interpolation_p_gt_2", g=g1)


def test_resolvent_base_case_hs():
    f = GaussianSymbol(0.5, (0.2, -0.1)).sample(SMALL)
    assert sobolev_cwikel_ratio(f, 2.0, "resolvent_power", k=0) <= HS_BASE_CONSTANT
    for k in (0, 1, 2):
        r = sobolev_cwikel_ratio(f, 1.0, "resolvent_power", k=k)
        assert np.isfinite(r) and r > 0


def test_single_cell_weak_lattice_is_translation_invariant():
    h = SMALL.h
    u1, u2 = coords(SMALL)
    f = GaussianSymbol(0.35).sample(SMALL)
    g0 = SampledFunction(SMALL, ((u1 >= 0) & (u1 < 1) & (u2 >= 0) & (u2 < 1)) * 1.0)
    gn = SampledFunction(SMALL, np.roll(g0.values, (int(-1 / h), int(1 / h)), axis=(0, 1)))
    for p in (1.0, 1.5):
        a = sobolev_cwikel_ratio(f, p, "weak_lattice", g=g0)
        b = sobolev_cwikel_ratio(f, p, "weak_lattice", g=gn)
        assert a == pytest.approx(b, rel=1e-6)

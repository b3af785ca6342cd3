import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cwikel_lab.logconvex import (
    entropy_lagrange_batch,
    entropy_lagrange_check,
    entropy_scan,
    geometric_telescoping,
    log_triangle_check,
    random_collection,
    simplex_corners,
    weak_l1_log_triangle,
    weak_l1_norm,
)

RNG = np.random.default_rng(5)


def test_entropy_examples():
    assert entropy_lagrange_check([1, 0, 0, 0]) == pytest.approx((1.0, 2.0))
    lhs, rhs = entropy_lagrange_check([0.25] * 4)
    assert lhs == pytest.approx(1 + np.log(4))
    assert rhs == pytest.approx(2 * (1 + (np.log(2) + np.log(3) + np.log(4)) / 4))
    assert (round(lhs, 3), round(rhs, 3)) == (2.386, 3.589)
    lhs, rhs = entropy_lagrange_check([0.5, 0.5])
    assert lhs == pytest.approx(1 + np.log(2))
    assert rhs == pytest.approx(2 + np.log(2))


def test_entropy_rejects_bad_points():
    for bad in ([0.5, 0.6], [1.2, -0.2], [], [[1.0]]):
        with pytest.raises(ValueError):
            entropy_lagrange_check(bad)


def test_batch_matches_scalar():
    rows = RNG.dirichlet(np.ones(7), size=20)
    lhs, rhs = entropy_lagrange_batch(rows)
    for r, l, h in zip(rows, lhs, rhs):
        assert (l, h) == pytest.approx(entropy_lagrange_check(r / r.sum()))


def test_corners():
    c = simplex_corners(4)
    assert c.shape == (4 + 6, 4)
    np.testing.assert_allclose(c.sum(axis=1), 1)


def test_entropy_scan_small():
    scan = entropy_scan(RNG, samples=5000, n_max=64)
    assert scan.violations == 0
    assert scan.max_ratio < 1


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(0, 1)))
def test_entropy_any_order(w):
    if w.sum() <= 0:
        return
    lhs, rhs = entropy_lagrange_check(w / w.sum())
    assert lhs <= rhs


def test_triangle_examples():
    x = RNG.normal(size=(5, 5))
    lhs, rhs = weak_l1_log_triangle([x])
    assert lhs == pytest.approx(weak_l1_norm(x))
    assert rhs == pytest.approx(4 * weak_l1_norm(x))
    e11, e22 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    lhs, rhs = weak_l1_log_triangle([e11, e22])
    assert lhs == pytest.approx(2.0)
    assert rhs == pytest.approx(4 * (2 + np.log(2)))
    assert round(rhs, 2) == 10.77


def test_triangle_shape_mismatch():
    with pytest.raises(ValueError):
        weak_l1_log_triangle([np.eye(2), np.eye(3)])
    with pytest.raises(ValueError):
        weak_l1_log_triangle([])


def test_sorted_pass_is_tighter():
    for _ in range(20):
        xs = random_collection(RNG, n_max=8, dim_max=10)
        c = log_triangle_check(xs)
        assert c.rhs_sorted <= c.rhs_given * (1 + 1e-12)
        assert c.holds


def test_homogeneity():
    xs = random_collection(RNG, n_max=6, dim_max=8)
    lhs, rhs = weak_l1_log_triangle(xs)
    lhs3, rhs3 = weak_l1_log_triangle([3.0 * x for x in xs])
    assert lhs3 == pytest.approx(3 * lhs, rel=1e-12)
    assert rhs3 == pytest.approx(3 * rhs, rel=1e-12)


def test_geometric_telescoping():
    rows = geometric_telescoping(RNG, n_terms=10, dim=8)
    tails = [r[1] for r in rows]
    for n, lhs, bound in rows:
        assert lhs <= bound
    # tails of a Cauchy sequence shrink
    assert tails[-1] < tails[0] / 100

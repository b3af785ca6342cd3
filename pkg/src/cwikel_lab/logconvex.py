"""Entropy-type simplex inequality and the logarithmic triangle inequality for weak L_1.

Both inequalities index terms from ``k = 1``. The weak-L_1 bound depends on
the enumeration order, so it is evaluated in the given order and again after
sorting the terms by decreasing quasinorm.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .majorization import DenseOperator, lorentz_quasinorm, singular_step

SIMPLEX_TOL = 1e-12


def _check_simplex(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("simplex point must be a nonempty vector")
    if np.any(a < -SIMPLEX_TOL) or np.any(a > 1 + SIMPLEX_TOL):
        raise ValueError("entries must lie in [0, 1]")
    if abs(a.sum() - 1.0) > SIMPLEX_TOL * max(1, a.size):
        raise ValueError("entries must sum to 1")
    return np.clip(a, 0.0, 1.0)


def _entropy_terms(a: np.ndarray) -> np.ndarray:
    # x log(e/x) -> 0 as x -> 0
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = a[pos] * (1.0 - np.log(a[pos]))
    return out


def entropy_lagrange_check(a) -> tuple[float, float]:
    """``(sum a_k log(e/a_k), 2 sum a_k (1 + log k))``."""
    a = _check_simplex(a)
    k = np.arange(1, a.size + 1)
    lhs = float(np.sum(_entropy_terms(a)))
    rhs = float(2 * np.sum(a * (1 + np.log(k))))
    return lhs, rhs


def entropy_lagrange_batch(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized check over the rows of a (samples, n) array of simplex points."""
    rows = np.asarray(rows, dtype=float)
    k = np.arange(1, rows.shape[1] + 1)
    return _entropy_terms(rows).sum(axis=1), 2 * (rows * (1 + np.log(k))).sum(axis=1)


def simplex_corners(n: int) -> np.ndarray:
    """All vertices and edge midpoints of the n-simplex."""
    eye = np.eye(n)
    mids = [(eye[i] + eye[j]) / 2 for i, j in itertools.combinations(range(n), 2)]
    return np.vstack([eye] + mids) if mids else eye


@dataclass(frozen=True)
class SimplexScan:
    samples: int
    violations: int
    max_ratio: float


def entropy_scan(rng: np.random.Generator, samples: int = 100_000, n_max: int = 64, corner_n: int = 8) -> SimplexScan:
    """Dirichlet(1,...,1) samples with random n <= n_max, plus all corners for n <= corner_n."""
    ns = rng.integers(1, n_max + 1, size=samples)
    worst, bad, total = 0.0, 0, 0
    for n in np.unique(ns):
        count = int(np.sum(ns == n))
        rows = rng.dirichlet(np.ones(n), size=count) if n > 1 else np.ones((count, 1))
        lhs, rhs = entropy_lagrange_batch(rows)
        bad += int(np.sum(lhs > rhs))
        worst = max(worst, float(np.max(lhs / rhs)))
        total += count
    for n in range(1, corner_n + 1):
        lhs, rhs = entropy_lagrange_batch(simplex_corners(n))
        bad += int(np.sum(lhs > rhs))
        worst = max(worst, float(np.max(lhs / rhs)))
        total += len(lhs)
    return SimplexScan(total, bad, worst)


def weak_l1_norm(x) -> float:
    return lorentz_quasinorm(singular_step(x), 1.0)


def _entries(x) -> np.ndarray:
    return x.entries if isinstance(x, DenseOperator) else np.asarray(x)


def weak_l1_log_triangle(xs, sort: bool = False) -> tuple[float, float]:
    """``(||sum x_k||_{1,inf}, 4 sum ||x_k||_{1,inf} (1 + log k))``.

    With ``sort=True`` the terms are reordered by decreasing quasinorm first,
    which minimizes the right-hand side.
    """
    mats = [_entries(x) for x in xs]
    if not mats:
        raise ValueError("need at least one matrix")
    if any(m.shape != mats[0].shape for m in mats):
        raise ValueError("all matrices must have the same shape")
    norms = np.array([weak_l1_norm(m) for m in mats])
    if sort:
        norms = np.sort(norms)[::-1]
    k = np.arange(1, len(mats) + 1)
    lhs = weak_l1_norm(sum(mats))
    rhs = float(4 * np.sum(norms * (1 + np.log(k))))
    return lhs, rhs


@dataclass(frozen=True)
class LogTriangleCheck:
    lhs: float
    rhs_given: float
    rhs_sorted: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs_given * (1 + 1e-12) and self.lhs <= self.rhs_sorted * (1 + 1e-12)


def log_triangle_check(xs) -> LogTriangleCheck:
    lhs, rhs = weak_l1_log_triangle(xs)
    _, rhs_sorted = weak_l1_log_triangle(xs, sort=True)
    return LogTriangleCheck(lhs, rhs, rhs_sorted)


def random_collection(rng: np.random.Generator, n_max: int = 16, dim_max: int = 32) -> list[np.ndarray]:
    """Random complex matrices of mixed rank and scale."""
    n = int(rng.integers(1, n_max + 1))
    dim = int(rng.integers(1, dim_max + 1))
    out = []
    for _ in range(n):
        r = int(rng.integers(1, dim + 1))
        a = rng.normal(size=(dim, r)) + 1j * rng.normal(size=(dim, r))
        b = rng.normal(size=(r, dim)) + 1j * rng.normal(size=(r, dim))
        out.append(np.exp(rng.normal(0, 2)) * (a @ b) / dim)
    return out


def geometric_telescoping(rng: np.random.Generator, n_terms: int = 12, dim: int = 16):
    """Partial sums of ``x_k`` with ``||x_k||_{1,inf} = 2**-k``.

    Returns rows ``(n, ||S_total - S_n||_{1,inf}, bound)`` where the bound is
    the log-triangle estimate applied to the tail ``x_{n+1}, x_{n+2}, ...``.
    """
    xs = []
    for k in range(1, n_terms + 1):
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        xs.append(a * (2.0 ** -k / weak_l1_norm(a)))
    total = sum(xs)
    rows = []
    for n in range(n_terms):
        tail = xs[n:]
        lhs = weak_l1_norm(total - sum(xs[:n], np.zeros_like(total)))
        k = np.arange(1, len(tail) + 1)
        bound = float(4 * np.sum(2.0 ** -np.arange(n + 1, n_terms + 1) * (1 + np.log(k))))
        rows.append((n, lhs, bound))
    return rows

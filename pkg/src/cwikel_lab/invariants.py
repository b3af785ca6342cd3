"""Randomized checks of the basic singular-value inequalities.

Each ``check_*`` function draws one random instance from ``rng`` and returns
``(ok, margin)``; ``margin`` is the observed ratio of the two sides (values
``<= 1`` mean the inequality holds). ``run_core_invariants`` loops them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .majorization import (
    StepFunction,
    decreasing_rearrangement,
    direct_sum,
    lorentz_quasinorm,
    majorizes,
    pointwise_sum,
    power,
    schatten_norm,
    singular_step,
    submajorizes,
    tensor_rearrangement,
)

P_VALUES = (0.5, 1.0, 1.5)
RTOL = 1e-10


def weak_reversal_constant(p: float) -> float:
    """``c_p = 2**(1/p) * sqrt(p / (2 - p))`` for ``0 < p < 2``.

    If ``mu^2(x)`` is majorized by ``mu^2(y)`` then the tails satisfy
    ``int_t^inf mu^2(y) <= int_t^inf mu^2(x)``; bounding ``mu(y, 2t)^2 t`` by
    the tail of ``x`` and integrating ``s**(-2/p)`` gives this constant.
    """
    if not 0 < p < 2:
        raise ValueError("need 0 < p < 2")
    return 2 ** (1 / p) * np.sqrt(p / (2 - p))


def rearrangement_by_distribution(values, weights, t) -> np.ndarray:
    """``mu(t) = inf{s >= 0 : d(s) <= t}`` by brute force over the level set."""
    a = np.abs(np.asarray(values, dtype=float))
    w = np.asarray(weights, dtype=float)
    levels = np.unique(np.concatenate([[0.0], a]))
    d = np.array([w[a > s].sum() for s in levels])
    t = np.atleast_1d(t)
    return np.array([levels[np.argmax(d <= tt)] for tt in t])


def _rand_matrix(rng, n=None, m=None):
    n = n or int(rng.integers(1, 9))
    m = m or n
    scale = np.exp(rng.normal(0, 1, size=(n, 1)))
    return scale * (rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m)))


def _rand_psd(rng, n):
    a = _rand_matrix(rng, n)
    return a @ a.conj().T


def block_average(rng, g: StepFunction) -> StepFunction:
    """Average ``g`` over random consecutive blocks of segments (result is majorized by ``g``)."""
    n = len(g)
    if n < 2:
        return g
    cuts = np.sort(rng.choice(np.arange(1, n), size=int(rng.integers(1, n)), replace=False))
    vals, wids = [], []
    for block in np.split(np.arange(n), cuts):
        w = g.widths[block].sum()
        vals.append(float((g.values[block] * g.widths[block]).sum() / w))
        wids.append(float(w))
    order = np.argsort(vals)[::-1]
    return StepFunction(np.array(vals)[order], np.array(wids)[order])


def check_rearrangement_oracle(rng):
    n = int(rng.integers(1, 60))
    v = rng.normal(size=n) * rng.integers(0, 3, size=n)
    w = rng.uniform(0.01, 2.0, size=n)
    f = decreasing_rearrangement(v, w)
    t = rng.uniform(0, 1.2 * w.sum(), size=20)
    ok = np.array_equal(f(t), rearrangement_by_distribution(v, w, t))
    return ok, 0.0 if ok else np.inf


def check_mu_of_sum(rng):
    """``mu(t+s, A+B) <= mu(t, A) + mu(s, B)`` at every pair of breakpoints."""
    n = int(rng.integers(1, 9))
    a, b = _rand_matrix(rng, n), _rand_matrix(rng, n)
    ma, mb, mab = singular_step(a), singular_step(b), singular_step(a + b)
    k = np.arange(n, dtype=float)
    t, s = np.meshgrid(k, k, indexing="ij")
    lhs = mab(t + s)
    rhs = ma(t) + mb(s)
    margin = float(np.max(np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1), lhs > 0)))
    return bool(np.all(lhs <= rhs * (1 + RTOL))), margin


def check_mu_squared(rng):
    """``mu(x^{1/2} y x^{1/2}) = mu^2(y^{1/2} x^{1/2})`` for positive ``x, y``."""
    n = int(rng.integers(1, 9))
    x, y = _rand_psd(rng, n), _rand_psd(rng, n)
    xh, yh = sla.sqrtm(x), sla.sqrtm(y)
    lhs = np.sort(np.linalg.svd(xh @ y @ xh, compute_uv=False))[::-1]
    rhs = np.sort(np.linalg.svd(yh @ xh, compute_uv=False))[::-1] ** 2
    err = float(np.max(np.abs(lhs - rhs)) / max(lhs[0], 1e-300))
    return err < 1e-8, err


def check_submajorized_sum(rng):
    """``sum_k A_k`` is submajorized by the pointwise sum of ``mu(A_k)``."""
    n = int(rng.integers(1, 9))
    mats = [_rand_matrix(rng, n) for _ in range(int(rng.integers(2, 6)))]
    lhs = singular_step(sum(mats))
    rhs = pointwise_sum([singular_step(m) for m in mats])
    v = submajorizes(rhs, lhs, rtol=RTOL)
    return v.holds, v.observed_constant


def check_block_majorization(rng):
    """Blocks ``T_k`` on disjoint column ranges: ``mu^2(+T_k) < mu^2(sum T_k)``."""
    rows = int(rng.integers(1, 9))
    widths = rng.integers(1, 5, size=int(rng.integers(1, 5)))
    total = int(widths.sum())
    blocks = []
    start = 0
    for w in widths:
        t = np.zeros((rows, total), dtype=complex)
        t[:, start:start + w] = _rand_matrix(rng, rows, int(w))
        blocks.append(t)
        start += w
    direct = power(direct_sum([singular_step(t) for t in blocks]), 2)
    summed = power(singular_step(sum(blocks)), 2)
    v = majorizes(summed, direct, tol=1e-9)
    return v.holds, v.observed_constant


def check_norm_reversal(rng):
    """If ``mu^2(x) < mu^2(y)`` then ``||y||_p <= ||x||_p`` and ``||y||_{p,inf} <= c_p ||x||_{p,inf}``, ``p < 2``."""
    n = int(rng.integers(2, 12))
    y2 = StepFunction(np.sort(rng.exponential(size=n) ** 3)[::-1], rng.uniform(0.1, 2.0, size=n))
    x2 = block_average(rng, y2)
    if not majorizes(y2, x2, tol=1e-9).holds:
        return False, np.inf
    x, y = power(x2, 0.5), power(y2, 0.5)
    worst = 0.0
    for p in P_VALUES:
        worst = max(worst, schatten_norm(y, p) / schatten_norm(x, p))
        worst = max(worst, lorentz_quasinorm(y, p) / (weak_reversal_constant(p) * lorentz_quasinorm(x, p)))
    return worst <= 1 + RTOL, worst


def check_tensor_weak(rng):
    """``||f (x) g||_{p,inf} <= ||f||_p ||g||_{p,inf}``."""
    f = decreasing_rearrangement(rng.exponential(size=int(rng.integers(1, 10))), rng.uniform(0.1, 2))
    g = decreasing_rearrangement(rng.exponential(size=int(rng.integers(1, 10))), rng.uniform(0.1, 2))
    worst = 0.0
    for p in (0.5, 1.0, 1.5, 2.0):
        lhs = lorentz_quasinorm(tensor_rearrangement(f, g), p)
        worst = max(worst, lhs / (schatten_norm(f, p) * lorentz_quasinorm(g, p)))
    return worst <= 1 + RTOL, worst


CHECKS = {
    "rearrangement-oracle": check_rearrangement_oracle,
    "mu-of-sum": check_mu_of_sum,
    "mu-squared": check_mu_squared,
    "submajorized-sum": check_submajorized_sum,
    "block-majorization": check_block_majorization,
    "norm-reversal": check_norm_reversal,
    "tensor-weak": check_tensor_weak,
}


@dataclass(frozen=True)
class InvariantTally:
    name: str
    trials: int
    violations: int
    worst_margin: float


def run_core_invariants(rng: np.random.Generator, trials: int = 1000) -> list[InvariantTally]:
    out = []
    for name, check in CHECKS.items():
        bad, worst = 0, 0.0
        for _ in range(trials):
            ok, margin = check(rng)
            bad += not ok
            worst = max(worst, float(margin))
        out.append(InvariantTally(name, trials, bad, worst))
    return out

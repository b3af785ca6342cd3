"""Landau levels of the two-dimensional magnetic Laplacian.

The eigenprojection ``P_n`` at ``(2n+1) b`` has kernel

    K_n(s, t) = b/(2 pi) L_n(b |s-t|^2 / 2) exp(-b |s-t|^2 / 4 + i (b/2)(t_1 s_2 - t_2 s_1)).

The phase coefficient ``b/2`` is the one for which ``P_n`` is idempotent;
``phase="displayed"`` swaps in the fixed coefficient 2, which agrees only
at ``b = 4``. Moduli, and hence every Hilbert-Schmidt norm, do not depend
on the phase.

Quadrature is the midpoint rule on ``[-R, R]^2`` with ``N`` points per axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np
import scipy.optimize as sopt
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.polynomial import Laguerre, Polynomial

from .majorization import (
    decreasing_rearrangement,
    lorentz_quasinorm,
    schatten_norm,
    tensor_rearrangement,
)

TAIL_TOL = 1e-8


def laguerre(n: int, u):
    """``L_n(u)`` by ``(k+1) L_{k+1} = (2k+1-u) L_k - k L_{k-1}``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    u = np.asarray(u, dtype=float)
    prev, cur = np.ones_like(u), 1.0 - u
    if n == 0:
        return prev
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - u) * cur - k * prev) / (k + 1)
    return cur


def laguerre_binomial(n: int, u):
    """``sum_m C(n, m) (-u)^m / m!``, the defining sum."""
    u = np.asarray(u, dtype=float)
    return sum(comb(n, m) * (-u) ** m / factorial(m) for m in range(n + 1))


def radial_tail(n: int, u0: float) -> float:
    """``int_{u0}^inf L_n(u)^2 e^{-u} du`` in closed form.

    For a polynomial ``P``, ``int_{u0}^inf P e^{-u} = e^{-u0} sum_j P^{(j)}(u0)``.
    """
    p = (Laguerre.basis(n) ** 2).convert(kind=Polynomial)
    total = 0.0
    while p.degree() >= 0 and np.any(p.coef):
        total += p(u0)
        p = p.deriv()
        if p.degree() == 0 and p.coef[0] == 0:
            break
    return float(np.exp(-u0) * total)


def min_radius(b: float, n_max: int, tol: float = TAIL_TOL) -> float:
    """Smallest ``R`` with kernel mass outside radius ``R/2`` below ``tol`` for all ``n <= n_max``."""
    def worst(R):
        u0 = b * (R / 2) ** 2 / 2
        return max(radial_tail(n, u0) for n in range(n_max + 1)) - tol

    hi = 12 / np.sqrt(b)
    while worst(hi) > 0:
        hi *= 1.5
    lo = 1e-3 / np.sqrt(b)
    return float(sopt.brentq(worst, lo, hi, xtol=1e-10))


@dataclass(frozen=True)
class LandauSpec:
    b: float
    n_max: int = 4
    R: float | None = None
    N: int = 128

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("b must be positive")
        if self.n_max < 0 or self.N < 2:
            raise ValueError("need n_max >= 0 and N >= 2")
        need = min_radius(self.b, self.n_max)
        if self.R is None:
            object.__setattr__(self, "R", max(12 / np.sqrt(self.b), need))
        elif self.R < need * (1 - 1e-9):
            raise ValueError(f"R = {self.R} too small; kernels need R >= {need:.4g}")

    @property
    def h(self) -> float:
        return 2 * self.R / self.N

    @property
    def axis(self) -> np.ndarray:
        return -self.R + self.h * (np.arange(self.N) + 0.5)

    def points(self) -> np.ndarray:
        """``(N^2, 2)`` midpoints, row-major."""
        x1, x2 = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([x1.ravel(), x2.ravel()], axis=1)

    def sample(self, func) -> np.ndarray:
        p = self.points()
        return np.asarray(func(p[:, 0], p[:, 1]), dtype=complex)


def _phase_coef(b: float, phase: str) -> float:
    if phase == "magnetic":
        return b / 2
    if phase == "displayed":
        return 2.0
    raise ValueError("phase must be 'magnetic' or 'displayed'")


def landau_kernel(n: int, b: float, s, t, phase: str = "magnetic"):
    """``K_n(s, t)``; ``s`` and ``t`` broadcast over leading axes, last axis of length 2."""
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    r2 = np.sum((s - t) ** 2, axis=-1)
    cross = t[..., 0] * s[..., 1] - t[..., 1] * s[..., 0]
    c = _phase_coef(b, phase)
    return b / (2 * np.pi) * laguerre(n, b * r2 / 2) * np.exp(-b * r2 / 4 + 1j * c * cross)


def kernel_matrix(n: int, spec: LandauSpec, rows=None, cols=None, phase: str = "magnetic") -> np.ndarray:
    """``K_n`` between grid points (indices into ``spec.points()``)."""
    p = spec.points()
    a = p if rows is None else p[rows]
    c = p if cols is None else p[cols]
    return landau_kernel(n, spec.b, a[:, None, :], c[None, :, :], phase)


def inner_points(spec: LandauSpec, radius: float | None = None) -> np.ndarray:
    r = spec.R / 2 if radius is None else radius
    return np.flatnonzero(np.linalg.norm(spec.points(), axis=1) < r)


def projection_residual(n: int, b: float, spec: LandauSpec, m: int | None = None, phase: str = "magnetic") -> float:
    """``||P_n P_m - delta_nm P_n||_HS / ||P_n||_HS`` on points inside radius ``R/2``.

    The composition integrates over the whole grid; restricting the outer
    indices keeps the truncation of the inner integral out of the residual.
    """
    if spec.b != b:
        raise ValueError("spec.b does not match b")
    m = n if m is None else m
    idx = inner_points(spec)
    w = spec.h ** 2
    left = kernel_matrix(n, spec, rows=idx, phase=phase)
    right = left if m == n else kernel_matrix(m, spec, rows=idx, phase=phase)
    # K_m(u, t) = conj(K_m(t, u)), so the right factor is the adjoint of its rows
    comp = w * left @ right.conj().T
    target = left[:, idx] if m == n else 0.0
    return float(np.linalg.norm(comp - target) / np.linalg.norm(left[:, idx]))


def radial_integral(n: int, spec: LandauSpec) -> float:
    """Midpoint quadrature of ``int |K_n(0, u)|^2 du`` over the grid box."""
    k = landau_kernel(n, spec.b, np.zeros(2), spec.points())
    return float(spec.h ** 2 * np.sum(np.abs(k) ** 2))


def mf_pn_hs(f: np.ndarray, n: int, b: float, spec: LandauSpec) -> tuple[float, float]:
    """``(computed, claimed)`` for ``||M_f P_n||_2``.

    ``int int |f(s)|^2 |K_n(s, t)|^2`` splits, since the inner integral over
    ``t`` does not depend on ``s``, into ``||f||^2`` times the radial integral.
    """
    if spec.b != b:
        raise ValueError("spec.b does not match b")
    f = np.asarray(f).ravel()
    f2 = spec.h ** 2 * np.sum(np.abs(f) ** 2)
    if f2 == 0:
        return 0.0, 0.0
    computed = np.sqrt(f2 * radial_integral(n, spec))
    claimed = np.sqrt(b / (2 * np.pi) * f2)
    return float(computed), float(claimed)


def mf_pn_hs_matrix(f: np.ndarray, n: int, spec: LandauSpec, chunk: int = 512) -> float:
    """Frobenius norm of the discretized ``M_f P_n`` over rows in ``supp f``."""
    f = np.asarray(f).ravel()
    rows = np.flatnonzero(f)
    total = 0.0
    for start in range(0, rows.size, chunk):
        r = rows[start:start + chunk]
        k = kernel_matrix(n, spec, rows=r)
        total += np.sum(np.abs(f[r, None] * k) ** 2)
    return float(spec.h ** 2 * np.sqrt(total))


@dataclass(frozen=True)
class NuFunction:
    """Values ``g(b (2n+1))`` for ``n = 0..n_max``; each atom carries weight ``2b``."""

    b: float
    values: np.ndarray

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("b must be positive")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex).ravel())

    @property
    def atoms(self) -> np.ndarray:
        return self.b * (2 * np.arange(self.values.size) + 1)

    @classmethod
    def from_function(cls, b: float, func, n_max: int) -> "NuFunction":
        return cls(b, func(b * (2 * np.arange(n_max + 1) + 1)))

    def l2_norm(self) -> float:
        return float(np.sqrt(2 * self.b * np.sum(np.abs(self.values) ** 2)))

    def rearrangement(self):
        return decreasing_rearrangement(self.values, 2 * self.b)


def nu_norm(g: NuFunction, p: float, weak: bool = False) -> float:
    mu = g.rearrangement()
    return lorentz_quasinorm(mu, p) if weak else schatten_norm(mu, p)


def level_sum_kernel(weights, spec: LandauSpec, rows=None, cols=None) -> np.ndarray:
    """``sum_n w_n K_n`` between grid points, sharing one Laguerre recurrence."""
    p = spec.points()
    a = p if rows is None else p[rows]
    c = p if cols is None else p[cols]
    b = spec.b
    d1 = a[:, None, 0] - c[None, :, 0]
    d2 = a[:, None, 1] - c[None, :, 1]
    u = b * (d1 * d1 + d2 * d2) / 2
    cross = c[None, :, 0] * a[:, None, 1] - c[None, :, 1] * a[:, None, 0]
    base = b / (2 * np.pi) * np.exp(-u / 2 + 0.5j * b * cross)
    acc = np.zeros(u.shape, dtype=complex)
    prev, cur = None, np.ones_like(u)
    for k, w in enumerate(weights):
        if k == 1:
            prev, cur = cur, 1.0 - u
        elif k > 1:
            prev, cur = cur, ((2 * k - 1 - u) * cur - (k - 1) * prev) / k
        if w != 0:
            acc += w * cur
    return acc * base


def level_sum_hs(f: np.ndarray, g: NuFunction, spec: LandauSpec) -> float:
    """``(sum_n |g_n|^2 (b / 2 pi))^{1/2} ||f||_2``, the level-by-level Hilbert-Schmidt value."""
    f2 = spec.h ** 2 * np.sum(np.abs(np.asarray(f)) ** 2)
    return float(np.sqrt(spec.b / (2 * np.pi) * np.sum(np.abs(g.values) ** 2) * f2))


def magnetic_gram(f: np.ndarray, g: NuFunction, spec: LandauSpec) -> tuple[np.ndarray, np.ndarray]:
    """``T T^*`` for ``T = M_f g(-Delta_b)`` on ``supp f``, as an operator matrix.

    ``T T^* = M_f |g|^2(-Delta_b) M_fbar`` because the ``P_n`` are orthogonal
    projections, so its kernel only needs ``K_n`` between points of ``supp f``.
    """
    f = np.asarray(f).ravel()
    rows = np.flatnonzero(f)
    k = level_sum_kernel(np.abs(g.values) ** 2, spec, rows, rows)
    return spec.h ** 2 * f[rows, None] * k * np.conj(f[rows])[None, :], rows


def magnetic_singular_values(f: np.ndarray, g: NuFunction, spec: LandauSpec) -> np.ndarray:
    gram, _ = magnetic_gram(f, g, spec)
    if gram.size == 0:
        return np.zeros(0)
    ev = np.linalg.eigvalsh(gram)
    ev = np.clip(ev, 0.0, None)
    ev[ev < 1e-12 * max(ev.max(), 1e-300)] = 0.0
    return np.sqrt(ev[::-1])


def magnetic_cwikel(f: np.ndarray, g: NuFunction, spec: LandauSpec, flavor="HS", p: float = 2.0,
                    chunk: int = 256) -> tuple[float, float]:
    """``(lhs, rhs)`` for ``M_f g(-Delta_b)``.

    ``HS``: Frobenius norm of ``sum_n g_n M_f P_n`` assembled on the grid
    (rows in ``supp f``) against ``(2 pi)^{-1/2} ||f||_2 ||g||_{L_2(nu)}``
    with the atom weight ``2b``. Level orthogonality gives
    ``sum_n |g_n|^2 (b / 2 pi) ||f||^2`` for the square of the left side,
    which is half the square of that right side; see ``level_sum_hs``.
    ``p`` / ``weak``: Schatten or weak Schatten norm of the operator against
    the same norm of ``mu(f) (x) mu_nu(g)``.
    """
    if g.b != spec.b:
        raise ValueError("g and spec use different field strengths")
    if g.values.size > spec.n_max + 1:
        raise ValueError("g has more levels than spec.n_max")
    f = np.asarray(f).ravel()
    if flavor == "HS":
        rows = np.flatnonzero(f)
        total = 0.0
        for start in range(0, rows.size, chunk):
            r = rows[start:start + chunk]
            total += np.sum(np.abs(f[r, None] * level_sum_kernel(g.values, spec, r)) ** 2)
        lhs = spec.h ** 2 * np.sqrt(total)
        f2 = np.sqrt(spec.h ** 2 * np.sum(np.abs(f) ** 2))
        return float(lhs), float((2 * np.pi) ** -0.5 * f2 * g.l2_norm())
    s = magnetic_singular_values(f, g, spec)
    mu_op = decreasing_rearrangement(s, 1.0)
    tensor = tensor_rearrangement(decreasing_rearrangement(f, spec.h ** 2), g.rearrangement())
    if flavor == "p":
        return schatten_norm(mu_op, p), schatten_norm(tensor, p)
    if flavor == "weak":
        return lorentz_quasinorm(mu_op, p), lorentz_quasinorm(tensor, p)
    raise ValueError("flavor must be 'HS', 'p' or 'weak'")


# -- eigenvalue counting in three dimensions --------------------------------------

def dirichlet_laplacian_3d(shape, h: float) -> sp.csr_matrix:
    """``-Delta`` with the 7-point stencil and zero Dirichlet data outside the box."""
    ops = []
    for n in shape:
        ops.append(sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / h ** 2)
    e = [sp.identity(n) for n in shape]
    lap = (sp.kron(sp.kron(ops[0], e[1]), e[2]) + sp.kron(sp.kron(e[0], ops[1]), e[2])
           + sp.kron(sp.kron(e[0], e[1]), ops[2]))
    return lap.tocsr()


def count_negative(a: sp.spmatrix, k0: int = 16) -> int:
    """Number of negative eigenvalues of a sparse symmetric matrix."""
    n = a.shape[0]
    if n <= 600:
        return int(np.sum(np.linalg.eigvalsh(a.toarray()) < 0))
    k = min(k0, n - 2)
    while True:
        vals = spla.eigsh(a, k=k, which="SA", return_eigenvectors=False, tol=1e-10)
        neg = int(np.sum(vals < 0))
        if neg < k or k >= n - 2:
            return neg
        k = min(2 * k, n - 2)


def clr_count(V: np.ndarray, h: float) -> tuple[int, float]:
    """``(#negative eigenvalues of -Delta + V, int |V_-|^{3/2})`` on a 3-d grid of spacing ``h``."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 3:
        raise ValueError("V must be a 3-d array")
    if not np.any(V < 0):
        return 0, 0.0
    a = dirichlet_laplacian_3d(V.shape, h) + sp.diags(V.ravel())
    bound = float(h ** 3 * np.sum(np.clip(-V, 0, None) ** 1.5))
    return count_negative(a), bound

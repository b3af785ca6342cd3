"""A two-dimensional Moyal plane on a centered periodic box.

Conventions (``theta = S = [[0, -1], [1, 0]]`` unless stated otherwise):

* ``(U(s) xi)(u) = exp(-(i/2) <s, theta u>) xi(u - s)`` on ``L_2(R^2)``, so
  ``U(s) U(t) = exp((i/2) <t, theta s>) U(s + t)``.
* A symbol ``f`` represents ``x = (2 pi)^{-1/2} int f(s) U(s) ds``.
* The half-dimensional model sends ``U(s)`` to ``exp(i (s_2 X + s_1 d/dx))``
  on ``L_2(R)``. That map respects the product law above, and the resulting
  integral kernel is ``K(u, v) = (F_2^{-1} f)(v - u, (u + v)/2)``, with
  ``F_2^{-1}`` the unitary inverse Fourier transform in the second variable.
  The change of variables ``(u, v) -> (v - u, (u + v)/2)`` has unit Jacobian,
  so ``||K||_HS = ||f||_2``.
* Products of symbols: ``(f * g)(s) = (2 pi)^{-1/2} int f(t) g(s - t) exp((i/2) <s, theta t>) dt``.
* ``g(-i grad_theta)`` acts on ``L_2(R^2)`` as multiplication by ``g``.

A symbol grid with ``h = sqrt(2 pi / N)`` and ``L = sqrt(2 pi N)`` is
self-dual: the half-lattice of midpoints then spans exactly one period of
the discrete Fourier sum, which makes the kernel norm a plain Riemann sum.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import BSpline

from .errors import AccuracyWarning
from .lattice import GridSpec, SampledFunction, mixed_cell_norm
from .majorization import DenseOperator, lorentz_quasinorm, schatten_norm, singular_step

S = np.array([[0.0, -1.0], [1.0, 0.0]])
BOUNDARY_TOL = 1e-6
QUANT = (2 * np.pi) ** -0.5  # (2 pi)^{-d/4} at d = 2


# -- antisymmetric matrices ---------------------------------------------------

@dataclass(frozen=True)
class NormalForm:
    Q: np.ndarray  # orthogonal d x d, nondegenerate pairs first
    N: np.ndarray  # positive diagonal scaling on the nondegenerate block
    theta_tilde: np.ndarray  # direct sum of S blocks
    kernel_dim: int

    @property
    def rank(self) -> int:
        return self.theta_tilde.shape[0]

    def reconstruct(self) -> np.ndarray:
        q = self.Q[:, : self.rank]
        return q @ self.N @ self.theta_tilde @ self.N @ q.T


def theta_normal_form(theta, tol: float = 1e-12) -> NormalForm:
    """Write ``theta = Q N theta~ N Q^T`` on its nondegenerate part."""
    theta = np.asarray(theta, dtype=float)
    d = theta.shape[0]
    if theta.shape != (d, d) or not np.allclose(theta, -theta.T, atol=tol):
        raise ValueError("theta must be a real antisymmetric matrix")
    scale = max(np.abs(theta).max(), 1.0)
    if np.allclose(theta, 0, atol=tol):
        return NormalForm(np.eye(d), np.zeros((0, 0)), np.zeros((0, 0)), d)
    t, z = sla.schur(theta, output="real")
    pairs, kernel = [], []
    i = 0
    while i < d:
        if i + 1 < d and abs(t[i + 1, i]) > tol * scale:
            b = t[i, i + 1]  # block [[0, b], [-b, 0]] = -b S
            u, v = z[:, i], z[:, i + 1]
            if b > 0:
                u, v = v, u  # swapping the pair flips the sign
            pairs.append((u, v, abs(b)))
            i += 2
        else:
            kernel.append(z[:, i])
            i += 1
    cols = [c for u, v, _ in pairs for c in (u, v)] + kernel
    q = np.stack(cols, axis=1)
    n = np.diag(np.repeat([np.sqrt(b) for _, _, b in pairs], 2))
    tt = sla.block_diag(*([S] * len(pairs)))
    return NormalForm(q, n, tt, len(kernel))


# -- symbols ------------------------------------------------------------------

def self_dual_grid(N: int) -> GridSpec:
    """Centered 2-d box with ``h * L = 2 pi``."""
    return GridSpec.centered(2, float(np.sqrt(2 * np.pi * N)), N)


@dataclass(frozen=True, eq=False)
class Symbol:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        if self.grid.d != 2:
            raise ValueError("symbols live on 2-d grids")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex).reshape(self.grid.shape))

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.cell_volume * np.sum(np.abs(self.values) ** 2)))

    def l1_norm(self) -> float:
        return float(self.grid.cell_volume * np.sum(np.abs(self.values)))

    def scale(self, c) -> "Symbol":
        return Symbol(self.grid, c * self.values)

    def __add__(self, other: "Symbol") -> "Symbol":
        _same_grid(self.grid, other.grid)
        return Symbol(self.grid, self.values + other.values)

    def boundary_fraction(self) -> float:
        """Share of ``|f|^2`` in the outer eighth of the box on any side."""
        s1, s2 = self.grid.points()
        edge = (np.abs(s1) >= 3 * self.grid.L / 8) | (np.abs(s2) >= 3 * self.grid.L / 8)
        tot = np.sum(np.abs(self.values) ** 2)
        return float(np.sum(np.abs(self.values[edge]) ** 2) / tot) if tot > 0 else 0.0


def _same_grid(a: GridSpec, b: GridSpec):
    if a != b:
        raise ValueError("symbols must share a grid")


def _warn_decay(f: Symbol):
    frac = f.boundary_fraction()
    if frac > BOUNDARY_TOL:
        warnings.warn(f"symbol has {frac:.2e} of its mass near the box edge", AccuracyWarning, stacklevel=3)


def zero_symbol(grid: GridSpec) -> Symbol:
    return Symbol(grid, np.zeros(grid.shape))


@dataclass(frozen=True)
class GaussianSymbol:
    """``a * exp(-|s - c|^2 / (2 sigma^2))``."""

    sigma: float = 1.0
    center: tuple = (0.0, 0.0)
    amplitude: complex = 1.0

    def __call__(self, s1, s2):
        r2 = (s1 - self.center[0]) ** 2 + (s2 - self.center[1]) ** 2
        return self.amplitude * np.exp(-r2 / (2 * self.sigma ** 2))

    def l2_norm(self) -> float:
        return float(abs(self.amplitude) * np.sqrt(np.pi) * self.sigma)

    def sample(self, grid: GridSpec) -> Symbol:
        return Symbol(grid, self(*grid.points()))


def _cubic(center: float, width: float) -> BSpline:
    return BSpline.basis_element(center + width * np.linspace(-2, 2, 5), extrapolate=False)


def _eval_cubic(center, width, x):
    return np.nan_to_num(_cubic(center, width)(x))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


def bspline_overlap(c1: float, w1: float, c2: float, w2: float) -> float:
    """Exact ``int B((x-c1)/w1) B((x-c2)/w2) dx`` for the centered cubic B-spline.

    The integrand is a degree-6 polynomial between consecutive knots, so
    four-point Gauss-Legendre on each piece is exact.
    """
    knots = np.union1d(c1 + w1 * np.linspace(-2, 2, 5), c2 + w2 * np.linspace(-2, 2, 5))
    lo, hi = max(c1 - 2 * w1, c2 - 2 * w2), min(c1 + 2 * w1, c2 + 2 * w2)
    knots = knots[(knots >= lo) & (knots <= hi)]
    if knots.size < 2:
        return 0.0
    a, b = knots[:-1], knots[1:]
    x = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * _GL_X[None, :]
    vals = _eval_cubic(c1, w1, x) * _eval_cubic(c2, w2, x)
    return float(np.sum(0.5 * (b - a)[:, None] * _GL_W[None, :] * vals))


@dataclass(frozen=True)
class BSplineMixture:
    """``sum_m c_m B((s_1 - a_m)/w_m) B((s_2 - b_m)/v_m)`` with cubic B-splines."""

    coeffs: np.ndarray
    centers: np.ndarray  # (m, 2)
    widths: np.ndarray  # (m, 2)

    def __call__(self, s1, s2):
        out = np.zeros(np.broadcast(s1, s2).shape, dtype=complex)
        for c, (a, b), (w, v) in zip(self.coeffs, self.centers, self.widths):
            out += c * _eval_cubic(a, w, s1) * _eval_cubic(b, v, s2)
        return out

    def l2_norm(self) -> float:
        total = 0.0
        m = len(self.coeffs)
        for i in range(m):
            for j in range(m):
                ov = bspline_overlap(self.centers[i, 0], self.widths[i, 0], self.centers[j, 0], self.widths[j, 0])
                if ov == 0.0:
                    continue
                ov *= bspline_overlap(self.centers[i, 1], self.widths[i, 1], self.centers[j, 1], self.widths[j, 1])
                total += (self.coeffs[i] * np.conj(self.coeffs[j])).real * ov
        return float(np.sqrt(max(total, 0.0)))

    def radius(self) -> float:
        return float(np.max(np.abs(self.centers) + 2 * self.widths))

    def sample(self, grid: GridSpec) -> Symbol:
        return Symbol(grid, self(*grid.points()))


def random_bspline_mixture(rng: np.random.Generator, radius: float, terms: int = 4,
                           width_range=(0.8, 2.5)) -> BSplineMixture:
    """Random complex mixture supported in the square ``[-radius, radius]^2``."""
    widths = rng.uniform(*width_range, size=(terms, 2))
    widths = np.minimum(widths, radius / 4)
    centers = rng.uniform(-1, 1, size=(terms, 2)) * (radius - 2 * widths)
    coeffs = rng.normal(size=terms) + 1j * rng.normal(size=terms)
    return BSplineMixture(coeffs, centers, widths)


# -- the unitaries U(s) and V(t) on the box -----------------------------------

def _lattice_shift(grid: GridSpec, s) -> np.ndarray:
    k = np.asarray(s, dtype=float) / grid.h
    if grid.d != 2 or k.shape != (2,) or not np.allclose(k, np.round(k), atol=1e-9):
        raise ValueError("shift must be a 2-vector on the grid lattice")
    return np.round(k).astype(int)


def _shift_matrix(grid: GridSpec, k) -> np.ndarray:
    """Cyclic ``(T xi)(u) = xi(u - k h)`` as an ``N^2 x N^2`` permutation."""
    n = grid.N
    idx = np.arange(grid.size).reshape(grid.shape)
    src = np.roll(idx, shift=tuple(k), axis=(0, 1)).ravel()
    t = np.zeros((grid.size, grid.size))
    t[np.arange(grid.size), src] = 1.0
    return t


def u_matrix(s, grid: GridSpec, theta=S) -> DenseOperator:
    """``U(s)`` on the periodic box: phase diagonal times cyclic shift."""
    k = _lattice_shift(grid, s)
    u = np.stack([c.ravel() for c in grid.points()], axis=1)
    phase = np.exp(-0.5j * (u @ (np.asarray(theta).T @ np.asarray(s, dtype=float))))
    return DenseOperator(phase[:, None] * _shift_matrix(grid, k), grid.cell_volume)


def position_operator(grid: GridSpec, k: int) -> np.ndarray:
    """``D_k = diag(u_k)``."""
    return np.diag(grid.points()[k].ravel().astype(complex))


def translation_unitary(t, grid: GridSpec) -> DenseOperator:
    """``V(t) = exp(i t_1 A_1) exp(i t_2 A_2)`` for ``theta = S``.

    ``exp(i t_1 A_1) xi(u) = exp((i/2) t_1 u_2) xi(u_1 + t_1, u_2)`` and
    ``exp(i t_2 A_2) xi(u) = exp(-(i/2) t_2 u_1) xi(u_1, u_2 + t_2)``. Their
    product commutes with every ``U(s)`` and conjugates ``D_k`` to ``D_k + t_k``.
    """
    k = _lattice_shift(grid, t)
    u1, u2 = (c.ravel() for c in grid.points())
    v1 = np.exp(0.5j * t[0] * u2)[:, None] * _shift_matrix(grid, (-k[0], 0))
    v2 = np.exp(-0.5j * t[1] * u1)[:, None] * _shift_matrix(grid, (0, -k[1]))
    return DenseOperator(v1 @ v2, grid.cell_volume)


# -- half-dimensional kernel --------------------------------------------------

@dataclass(frozen=True)
class HalfDimKernel:
    """Kernel ``K(u, v)`` on a 1-d grid of spacing ``h``; the operator is ``h K``."""

    K: np.ndarray
    h: float

    @property
    def matrix(self) -> np.ndarray:
        return self.h * self.K

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def compose(self, other: "HalfDimKernel") -> "HalfDimKernel":
        return HalfDimKernel(self.h * self.K @ other.K, self.h)


def _require_standard(theta):
    if not np.allclose(np.asarray(theta, dtype=float), S):
        raise ValueError("kernel constructions are implemented for theta = S only")


def weyl_kernel(f: Symbol, theta=S) -> HalfDimKernel:
    """Kernel of the image of ``x`` on ``L_2(R)``; the ``u`` grid is the symbol axis."""
    _require_standard(theta)
    _warn_decay(f)
    grid = f.grid
    n, h = grid.N, grid.h
    s2 = grid.axis
    y = grid.axis[0] + 0.5 * h * np.arange(2 * n - 1)  # midpoints (u + v)/2
    g = (h / np.sqrt(2 * np.pi)) * (f.values @ np.exp(1j * np.outer(s2, y)))
    p, q = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    a = q - p + n // 2  # index of s_1 = v - u
    ok = (a >= 0) & (a < n)
    k = np.zeros((n, n), dtype=complex)
    k[ok] = g[a[ok], (p + q)[ok]]
    return HalfDimKernel(k, h)


def tau_schatten_norm(f: Symbol, p: float, theta=S) -> float:
    if not np.any(f.values):
        return 0.0
    return schatten_norm(singular_step(weyl_kernel(f, theta).matrix), p)


def symbol_derivative(f: Symbol, alpha) -> Symbol:
    """Symbol of ``d^alpha x``: multiply by ``s_1^a1 s_2^a2``."""
    a1, a2 = (int(a) for a in alpha)
    if a1 < 0 or a2 < 0:
        raise ValueError("multi-index must be nonnegative")
    s1, s2 = f.grid.points()
    return Symbol(f.grid, (s1 ** a1) * (s2 ** a2) * f.values)


def multi_indices(m: int):
    return [(a, k - a) for k in range(m + 1) for a in range(k, -1, -1)]


def sobolev_norm(f: Symbol, m: int, p: float, theta=S) -> float:
    return float(sum(tau_schatten_norm(symbol_derivative(f, a), p, theta) for a in multi_indices(m)))


# -- products -----------------------------------------------------------------

def twisted_convolve(f: Symbol, g: Symbol, theta=S) -> Symbol:
    """Symbol of the operator product ``x_f x_g``, zero outside the box."""
    _same_grid(f.grid, g.grid)
    grid = f.grid
    n, h = grid.N, grid.h
    th = np.asarray(theta, dtype=float)
    s1, s2 = grid.points()
    pad = np.zeros((3 * n, 3 * n), dtype=complex)
    pad[n:2 * n, n:2 * n] = g.values
    out = np.zeros(grid.shape, dtype=complex)
    ax = grid.axis
    for i, j in zip(*np.nonzero(f.values)):
        t = np.array([ax[i], ax[j]])
        # g(s - t): s index a, t index i -> g index a - i + n/2
        gi = pad[n - i + n // 2: 2 * n - i + n // 2, n - j + n // 2: 2 * n - j + n // 2]
        w = th @ t  # <s, theta t> = s . (theta t)
        out += f.values[i, j] * gi * np.exp(0.5j * (s1 * w[0] + s2 * w[1]))
    return Symbol(grid, QUANT * grid.cell_volume * out)


def product_kernel(f: Symbol, g: SampledFunction, theta=S) -> DenseOperator:
    """``x g(-i grad_theta)`` on ``L_2`` of the box, as an ``N^2 x N^2`` matrix."""
    _require_standard(theta)
    grid = f.grid
    if g.grid != grid:
        raise ValueError("f and g must share a grid")
    _warn_decay(f)
    n = grid.N
    i1, i2 = (c.ravel() for c in np.indices(grid.shape))
    a1 = i1[:, None] - i1[None, :] + n // 2
    a2 = i2[:, None] - i2[None, :] + n // 2
    ok = (a1 >= 0) & (a1 < n) & (a2 >= 0) & (a2 < n)
    fts = np.zeros(ok.shape, dtype=complex)
    fts[ok] = f.values[a1[ok], a2[ok]]
    u = np.stack([c.ravel() for c in grid.points()], axis=1)
    phase = np.exp(0.5j * (u @ np.asarray(theta, dtype=float).T @ u.T))  # <s, theta t> at [t, s]
    k = QUANT * fts * phase * g.values.ravel()[None, :]
    return DenseOperator(grid.cell_volume * k, grid.cell_volume)


def product_hs_norm(f: Symbol, g: SampledFunction) -> float:
    """Frobenius norm of ``product_kernel(f, g)`` without forming it.

    The phase has modulus one, so the squared norm is
    ``h^4 (2 pi)^{-1} sum_s |g(s)|^2 sum_{t in box} |f(t - s)|^2`` and the
    inner sum is a rectangle sum of ``|f|^2`` read off a 2-d prefix sum.
    """
    grid = f.grid
    if g.grid != grid:
        raise ValueError("f and g must share a grid")
    n = grid.N
    pre = np.zeros((n + 1, n + 1))
    pre[1:, 1:] = np.cumsum(np.cumsum(np.abs(f.values) ** 2, axis=0), axis=1)
    idx = np.arange(n)
    lo = np.clip(n // 2 - idx, 0, n)
    hi = np.clip(3 * n // 2 - idx, 0, n)
    w = (pre[hi[:, None], hi[None, :]] - pre[lo[:, None], hi[None, :]]
         - pre[hi[:, None], lo[None, :]] + pre[lo[:, None], lo[None, :]])
    total = np.sum(np.abs(g.values) ** 2 * w)
    return float(grid.cell_volume * np.sqrt(total / (2 * np.pi)))


# -- Cwikel-type ratios --------------------------------------------------------

def resolvent_weight(grid: GridSpec, alpha: float) -> np.ndarray:
    """Samples of ``(1 + |t|^2)^{-alpha}``, the multiplier model of ``(1 - Delta_theta)^{-alpha}``."""
    s1, s2 = grid.points()
    return (1 + s1 ** 2 + s2 ** 2) ** (-alpha)


HS_BASE_CONSTANT = 2 ** -0.5  # (2 pi)^{-1/2} ||(1 + |t|^2)^{-1}||_2 at d = 2


def sobolev_cwikel_ratio(f: Symbol, p: float, mode: str, k: int = 0, g: SampledFunction | None = None) -> float:
    """Observed ratio for one of the Sobolev-type Cwikel estimates.

    ``resolvent_power``: ``||(1-D)^{(k-1)/2-1/2} x (1-D)^{-(k+1)/2-1/2}||_p / (2^k ||x||_{W^{k,p}})``.
    ``weak_lattice`` / ``strong_lattice``: ``||x g||_{p,inf}`` or ``||x g||_p`` over
    ``||x||_{W^{2,p}}`` times the ``l_{p,inf}(L_inf)`` or ``l_p(L_inf)`` norm of ``g``.
    ``interpolation_p_gt_2``: ``||x g||_p / ((2 pi)^{-1/p} ||x||_p ||g||_p)`` for ``p > 2``.
    """
    grid = f.grid
    if not np.any(f.values):
        return 0.0
    if mode == "resolvent_power":
        one = SampledFunction(grid, np.ones(grid.shape))
        m = product_kernel(f, one).entries
        left = resolvent_weight(grid, -((k - 1) / 2 - 0.5)).ravel()
        right = resolvent_weight(grid, (k + 1) / 2 + 0.5).ravel()
        lhs = schatten_norm(singular_step(left[:, None] * m * right[None, :]), p)
        return lhs / (2 ** k * sobolev_norm(f, k, p))
    if g is None:
        raise ValueError(f"mode {mode!r} needs g")
    mu = singular_step(product_kernel(f, g).entries)
    if mode == "weak_lattice":
        return lorentz_quasinorm(mu, p) / (sobolev_norm(f, 2, p) * mixed_cell_norm(g, np.inf, "lp_weak", p))
    if mode == "strong_lattice":
        return schatten_norm(mu, p) / (sobolev_norm(f, 2, p) * mixed_cell_norm(g, np.inf, "lp", p))
    if mode == "interpolation_p_gt_2":
        if not p > 2:
            raise ValueError("interpolation mode needs p > 2")
        g_p = (grid.cell_volume * np.sum(np.abs(g.values) ** p)) ** (1 / p)
        return schatten_norm(mu, p) / ((2 * np.pi) ** (-1 / p) * tau_schatten_norm(f, p) * g_p)
    raise ValueError(f"unknown mode {mode!r}")

"""Cwikel-type estimates for ``M_f g(-i grad)`` on grid models.

Covers the dyadic slicing of positive operators, the split of the product
into a bounded part ``A_n`` and a Hilbert-Schmidt part ``B_n``, the
submajorization with constants 130 and 532, the Fourier coefficient and
compact support lemmas, the mixed-norm estimates for ``p < 2``, the weak
``L_2`` estimate with the logarithmic weight, and the counterexample built
from ``t**(-1/2) / |log t|``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy import integrate

from .lattice import (
    FREQUENCY,
    POSITION,
    GridSpec,
    SampledFunction,
    classical_product,
    fourier_multiplier,
    mixed_cell_norm,
    mult_operator,
    phase_space_rearrangement,
    product_singular_values,
    product_step,
    tensor_cell_norm,
)
from .majorization import (
    DenseOperator,
    MajorizationVerdict,
    lorentz_quasinorm,
    power,
    schatten_norm,
    singular_values,
    submajorizes,
)

CONSTANT_FINITE = 130.0
CONSTANT_GENERAL = 532.0


# -- dyadic decomposition -------------------------------------------------

def dyadic_band(values) -> np.ndarray:
    """``k`` with ``2**k <= v < 2**(k+1)`` for ``v > 0``, computed exactly via frexp."""
    v = np.asarray(values, dtype=float)
    _, e = np.frexp(v)
    return e - 1


def dyadic_slices(x) -> dict[int, DenseOperator]:
    """Spectral slices ``x E_x[2**k, 2**(k+1))`` of a positive matrix."""
    a = x.entries if isinstance(x, DenseOperator) else np.asarray(x)
    weight = x.cell_weight if isinstance(x, DenseOperator) else 1.0
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("x must be a square matrix")
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    if not np.allclose(a, a.conj().T, atol=1e-12 * scale, rtol=0):
        raise ValueError("x must be Hermitian")
    if np.count_nonzero(a - np.diag(np.diag(a))) == 0:
        lam = np.real(np.diag(a))
        vecs = None
    else:
        lam, vecs = np.linalg.eigh(a)
    top = max(lam.max(initial=0.0), 0.0)
    if lam.min(initial=0.0) < -1e-10 * max(top, 1.0):
        raise ValueError("x must be positive semidefinite")
    lam = np.where(lam <= 1e-12 * top, 0.0, lam)
    pos = lam > 0
    bands = np.full(lam.shape, np.iinfo(np.int64).min)
    bands[pos] = dyadic_band(lam[pos])
    out = {}
    for k in np.unique(bands[pos]):
        sel = bands == k
        if vecs is None:
            out[int(k)] = DenseOperator(np.diag(np.where(sel, lam, 0.0)).astype(a.dtype), weight)
        else:
            v = vecs[:, sel]
            out[int(k)] = DenseOperator((v * lam[sel]) @ v.conj().T, weight)
    return out


def _positive_samples(f: SampledFunction) -> np.ndarray:
    v = f.values.ravel()
    if np.any(np.abs(np.imag(v)) > 0) or np.any(np.real(v) < 0):
        raise ValueError("the dyadic split needs nonnegative real samples")
    return np.real(v)


def _unitary_dft(grid: GridSpec) -> np.ndarray:
    n = grid.size
    basis = np.eye(n, dtype=complex).reshape(grid.shape + (n,))
    return sfft.fftn(basis, axes=tuple(range(grid.d)), norm="ortho").reshape(n, n)


def _bands_or_sentinel(v):
    out = np.full(v.shape, np.iinfo(np.int32).min // 2, dtype=np.int64)
    pos = v > 0
    out[pos] = dyadic_band(v[pos])
    return out, pos


@dataclass
class DyadicSplit:
    n: int
    x_slices: dict[int, DenseOperator]
    y_slices: dict[int, DenseOperator]
    A: DenseOperator
    B: DenseOperator
    product: DenseOperator
    norm_A: float
    bound_A: float
    hs2_B: float
    tensor_tail: float
    reconstruction_error: float

    @property
    def holds(self) -> bool:
        return self.norm_A <= self.bound_A * (1 + 1e-12) and self.hs2_B <= self.tensor_tail * (1 + 1e-10) + 1e-300


def _tensor_tail(f: SampledFunction, g: SampledFunction, n: int) -> float:
    """``||(x (x) y) E[2**n, inf)||_2**2`` from the phase-space rearrangement."""
    mu = phase_space_rearrangement(f, g)
    sel = mu.values >= 2.0 ** n
    return float(np.sum(mu.values[sel] ** 2 * mu.widths[sel]))


def _band_pieces(f: SampledFunction, g: SampledFunction):
    fv, gv = _positive_samples(f), _positive_samples(g)
    kf, pf = _bands_or_sentinel(fv)
    lg, pg = _bands_or_sentinel(gv)
    F = _unitary_dft(f.grid)
    # P[i, j] = f_i sum_q conj(F[q, i]) g_q F[q, j]; band of term (i, q) is k_i + l_q
    left = fv[:, None] * F.conj().T * gv[None, :]
    levels = kf[:, None] + lg[None, :]
    active = pf[:, None] & pg[None, :]
    return left, levels, active, F


def an_bn_split(f: SampledFunction, g: SampledFunction, n: int) -> DyadicSplit:
    """``A_n = sum_{k+l<n} x_k y_l`` and ``B_n`` the rest, for ``x = M_f``, ``y = g(-i grad)``."""
    if f.tag != POSITION or g.tag != FREQUENCY:
        raise ValueError("f must be a position function and g a frequency function")
    left, levels, active, F = _band_pieces(f, g)
    a_mat = (left * (active & (levels < n))) @ F
    full = left @ F
    b_mat = full - a_mat
    xs = dyadic_slices(mult_operator(f.map(np.real)))
    ys = {}
    gv = _positive_samples(g)
    lg, pg = _bands_or_sentinel(gv)
    for l in np.unique(lg[pg]):
        ys[int(l)] = fourier_multiplier(SampledFunction(g.grid, np.where(lg == l, gv, 0.0).reshape(g.grid.shape), FREQUENCY))
    direct = classical_product(f, g).entries
    err = np.linalg.norm(a_mat + b_mat - direct) / max(np.linalg.norm(direct), np.finfo(float).tiny)
    norm_a = float(singular_values(a_mat)[0]) if a_mat.size else 0.0
    return DyadicSplit(
        n=n,
        x_slices=xs,
        y_slices=ys,
        A=DenseOperator(a_mat),
        B=DenseOperator(b_mat),
        product=DenseOperator(direct),
        norm_A=norm_a,
        bound_A=2.0 ** (n + 2),
        hs2_B=float(np.linalg.norm(b_mat) ** 2),
        tensor_tail=_tensor_tail(f, g, n),
        reconstruction_error=float(err),
    )


@dataclass
class DyadicReport:
    """Bounds of the A_n/B_n split for every level ``n`` of one instance."""

    levels: np.ndarray
    norm_A: np.ndarray
    hs2_B: np.ndarray
    tensor_tail: np.ndarray
    band_levels: np.ndarray
    band_norms: np.ndarray
    reconstruction_error: float
    violations: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


def dyadic_report(f: SampledFunction, g: SampledFunction, margin: int = 1) -> DyadicReport:
    """Check every bound of the split at all levels of the populated range.

    ``A_n`` is the cumulative sum of the diagonal bands ``D_m = sum_{k+l=m}
    x_k y_l`` for ``m < n``; the band norms are checked against ``2**(m+2)``
    as well.
    """
    left, levels, active, F = _band_pieces(f, g)
    full = left @ F
    if not active.any():
        return DyadicReport(np.zeros(0, int), *(np.zeros(0),) * 3, np.zeros(0, int), np.zeros(0), 0.0)
    ms = np.unique(levels[active])
    mu = phase_space_rearrangement(f, g)
    ns = np.arange(ms.min() - margin, ms.max() + margin + 2)
    acc = np.zeros_like(full)
    band_norms = []
    norm_a, hs2_b, tails = [], [], []
    violations = []
    band_at = {}
    for m in ms:
        band = (left * (active & (levels == m))) @ F
        band_at[int(m)] = band
        s = float(singular_values(band)[0])
        band_norms.append(s)
        if s > 2.0 ** (m + 2) * (1 + 1e-12):
            violations.append(("band", int(m), s))
    for n in ns:
        for m in ms[ms == n - 1]:
            acc = acc + band_at[int(m)]
        sv = singular_values(acc)
        na = float(sv[0]) if sv.size else 0.0
        b = full - acc
        hb = float(np.linalg.norm(b) ** 2)
        sel = mu.values >= 2.0 ** n
        tail = float(np.sum(mu.values[sel] ** 2 * mu.widths[sel]))
        norm_a.append(na)
        hs2_b.append(hb)
        tails.append(tail)
        if na > 2.0 ** (n + 2) * (1 + 1e-12):
            violations.append(("A", int(n), na))
        if hb > tail * (1 + 1e-10) + 1e-14 * np.linalg.norm(full) ** 2:
            violations.append(("B", int(n), hb, tail))
    total = sum(band_at.values())
    err = np.linalg.norm(total - full) / max(np.linalg.norm(full), np.finfo(float).tiny)
    direct = classical_product(f, g).entries
    err = max(err, np.linalg.norm(full - direct) / max(np.linalg.norm(direct), np.finfo(float).tiny))
    if err > 1e-10:
        violations.append(("reconstruction", err))
    return DyadicReport(ns, np.array(norm_a), np.array(hs2_b), np.array(tails), ms, np.array(band_norms), float(err), violations)


def projection_inequality_check(f: SampledFunction, g: SampledFunction, n: int) -> bool:
    """``E_{x (x) y}[2**n, inf) >= sum_{k+l>=n} E_x[2**k,..) (x) E_y[2**l,..)``.

    For diagonal models both sides are diagonal projections on the product
    grid, and the operator inequality is an inclusion of index sets.
    """
    fv, gv = _positive_samples(f), _positive_samples(g)
    kf, pf = _bands_or_sentinel(fv)
    lg, pg = _bands_or_sentinel(gv)
    lhs = np.outer(fv, gv) >= 2.0 ** n
    rhs = (kf[:, None] + lg[None, :] >= n) & pf[:, None] & pg[None, :]
    return bool(np.all(lhs | ~rhs))


# -- submajorization ------------------------------------------------------

def check_submajorization(f: SampledFunction, g: SampledFunction, constant: float = CONSTANT_GENERAL) -> MajorizationVerdict:
    """``mu**2(M_f g(-i grad)) << constant * mu**2(f (x) g)``."""
    lhs = power(product_step(f, g), 2)
    rhs = power(phase_space_rearrangement(f, g), 2)
    return submajorizes(rhs, lhs, slack=constant, rtol=1e-10)


def check_submajorization_532(f: SampledFunction, g: SampledFunction) -> MajorizationVerdict:
    return check_submajorization(f, g, CONSTANT_GENERAL)


def check_submajorization_130(f: SampledFunction, g: SampledFunction) -> MajorizationVerdict:
    """The constant 130 for positive bounded inputs; moduli are taken."""
    return check_submajorization(f.map(np.abs), g.map(np.abs), CONSTANT_FINITE)


def schatten_vs_tensor(f: SampledFunction, g: SampledFunction, p: float) -> float:
    """``||M_f g(-i grad)||_p / ||f (x) g||_p`` (phase-space normalization)."""
    lhs = schatten_norm(product_step(f, g), p)
    rhs = schatten_norm(phase_space_rearrangement(f, g), p)
    return lhs / rhs if rhs > 0 else 0.0


# -- compactly supported pieces -------------------------------------------

def bump_eta(v) -> np.ndarray:
    """Smooth cutoff: 1 on [-1, 1], 0 outside (-3, 3)."""
    a = np.abs(np.asarray(v, dtype=float))
    out = np.zeros_like(a)
    out[a <= 1] = 1.0
    mid = (a > 1) & (a < 3)
    r = ((a[mid] - 1) / 2) ** 2
    out[mid] = np.exp(1 - 1 / (1 - r))
    return out


def fourier_coeff_lemma(h: SampledFunction, p: float, M: int = 256) -> tuple[float, float]:
    """``(sum_k |psi_hat(k)|**p, ||h||_1)`` for ``psi = phi * F^{-1} h`` on ``[-pi, pi]^d``.

    ``F^{-1} h(u) = (2 pi)**(-d/2) int h(x) e^{i u.x} dx`` is summed over
    the samples of ``h`` in the unit cube; the Fourier coefficients
    ``(2 pi)**-d int psi(u) e^{-i k.u} du`` come from an FFT on ``M`` points
    per axis, which is spectrally accurate since ``psi`` is smooth and
    vanishes near the boundary.
    """
    if not 0 < p <= 2:
        raise ValueError("p must lie in (0, 2]")
    grid = h.grid
    axis = grid.axis
    inside = (axis >= -1e-12) & (axis < 1 - 1e-12)
    vals = h.values
    outside = np.ones(grid.shape, dtype=bool)
    outside[np.ix_(*([inside] * grid.d))] = False
    if np.any(vals[outside] != 0):
        raise ValueError("h must be supported on the unit cube")
    x = axis[inside]
    hv = vals[np.ix_(*([inside] * grid.d))]
    l1 = float(np.sum(np.abs(hv)) * grid.cell_volume)
    u = -np.pi + 2 * np.pi * np.arange(M) / M
    E = np.exp(1j * np.outer(u, x)) * grid.h / np.sqrt(2 * np.pi)
    if grid.d == 1:
        inv = E @ hv
        phi = bump_eta(u)
    else:
        inv = E @ hv @ E.T
        phi = np.outer(bump_eta(u), bump_eta(u))
    psi = phi * inv
    coeffs = sfft.fftn(psi) / M ** grid.d
    return float(np.sum(np.abs(coeffs) ** p)), l1


def fourier_coeff_ratio(h: SampledFunction, p: float, M: int = 256) -> float:
    s, l1 = fourier_coeff_lemma(h, p, M)
    return s / l1 ** p if l1 > 0 else 0.0


def _lebesgue_l2(f: SampledFunction) -> float:
    w = f.grid.cell_volume if f.tag == POSITION else (2 * np.pi / f.grid.L) ** f.grid.d
    return float(np.sqrt(w * np.sum(np.abs(f.values) ** 2)))


def _in_unit_cube(f: SampledFunction) -> bool:
    coords = f.grid.points() if f.tag == POSITION else f.grid.frequencies()
    mask = np.ones(f.grid.shape, dtype=bool)
    for c in coords:
        mask &= (c >= -1e-12) & (c < 1 - 1e-12)
    return not np.any(f.values[~mask] != 0)


def compact_support_ratio(f: SampledFunction, g: SampledFunction, p: float) -> float:
    """``||M_f g(-i grad)||_p / (||f||_2 ||g||_2)`` with Lebesgue norms on both sides."""
    if not (_in_unit_cube(f) and _in_unit_cube(g)):
        raise ValueError("f and g must be supported on the unit cube")
    denom = _lebesgue_l2(f) * _lebesgue_l2(g)
    if denom == 0:
        return 0.0
    return schatten_norm(product_step(f, g), p) / denom


def cwikel_small_p(f: SampledFunction, g: SampledFunction, p: float, flavor: str = "strong") -> tuple[float, float, float]:
    """``||M_f g(-i grad)||_{p}`` (or weak) against the cell norm of ``f (x) g``."""
    mu = product_step(f, g)
    if flavor == "strong":
        lhs, outer = schatten_norm(mu, p), "lp"
    elif flavor == "weak":
        lhs, outer = lorentz_quasinorm(mu, p), "lp_weak"
    else:
        raise ValueError("flavor must be 'strong' or 'weak'")
    rhs = tensor_cell_norm(f, g, outer, p, inner_q=2.0)
    return lhs, rhs, (lhs / rhs if rhs > 0 else 0.0)


def weak_l2_positive(f: SampledFunction, g: SampledFunction) -> tuple[float, float, float]:
    """``||M_f g||_{2,inf}`` against ``||f||_{l_{2,log}(L_inf)} ||g||_{l_{2,inf}(L_4)}``."""
    lhs = lorentz_quasinorm(product_step(f, g), 2)
    rhs = mixed_cell_norm(f, np.inf, "l2log") * mixed_cell_norm(g, 4.0, "lp_weak", 2.0)
    return lhs, rhs, (lhs / rhs if rhs > 0 else 0.0)


# -- counterexample -------------------------------------------------------

@dataclass(frozen=True)
class CounterexampleRow:
    cutoff: float
    truncated_double_integral: float
    grid_N: int
    truncated_schatten4_pow4: float
    f_norm_sq: float


def _check_cutoff(eps):
    if not 0 < eps < 0.5:
        raise ValueError("cutoff must lie in (0, 1/2)")


def counterexample_norm_sq(eps: float) -> float:
    """``int_eps^{1/2} dt / (t log(t)**2)`` by adaptive quadrature in ``u = log t``."""
    _check_cutoff(eps)
    val, _ = integrate.quad(lambda u: 1.0 / u ** 2, np.log(eps), -np.log(2.0), epsabs=0, epsrel=1e-12)
    return val


def counterexample_double_integral(eps: float) -> float:
    """``iint_{t >= 2s; s, t in (eps, 1/2)} dt ds / (t s log(t)**2)``.

    In logarithmic variables ``u = log t``, ``v = log s`` the integrand is
    ``1 / u**2`` over ``log(eps) < v < u - log 2``, ``log(2 eps) < u < -log 2``.
    """
    _check_cutoff(eps)
    lo, hi = np.log(2 * eps), -np.log(2.0)
    if lo >= hi:
        return 0.0
    val, _ = integrate.dblquad(
        lambda v, u: 1.0 / u ** 2, lo, hi, lambda u: np.log(eps), lambda u: u - np.log(2.0), epsabs=0, epsrel=1e-10
    )
    return val


def counterexample_samples(eps: float, grid: GridSpec) -> np.ndarray:
    """Cell-wise L2 samples of ``f = t**(-1/2) |log t|**(-1)`` on ``(eps, 1/2)``.

    Sample ``j`` is ``sqrt(h**-1 int_{cell_j} f**2)`` over the cell
    ``[x_j, x_j + h)``, using the antiderivative ``1 / |log t|`` of ``f**2``,
    so that ``h * sum f_j**2`` equals ``||f||_2**2`` exactly.
    """
    _check_cutoff(eps)
    if grid.d != 1:
        raise ValueError("the counterexample lives on a 1-d grid")
    a = np.clip(grid.axis, eps, 0.5)
    b = np.clip(grid.axis + grid.h, eps, 0.5)
    with np.errstate(divide="ignore"):
        G = lambda t: 1.0 / np.abs(np.log(t))
        mass = np.where(b > a, G(b) - G(a), 0.0)
    return np.sqrt(np.maximum(mass, 0.0) / grid.h)


def counterexample_schatten4(eps: float, grid: GridSpec) -> float:
    """``||M_f (1 - Delta)^{-1/4}||_4**4`` on the grid.

    With ``G = (1 - Delta)^{-1/4}`` one has ``||M_f G||_4**4 =
    ||M_f G**2 M_f||_2**2 = sum_ij f_i**2 f_j**2 |c(i - j)|**2`` where ``c`` is
    the circulant kernel of ``G**2``; the double sum is a cyclic convolution.
    """
    f = counterexample_samples(eps, grid)
    xi = grid.freq_axis
    c = np.fft.ifft((1 + xi ** 2) ** -0.5)
    a = f ** 2
    conv = np.real(np.fft.ifft(np.fft.fft(a) * np.fft.fft(np.abs(c) ** 2)))
    return float(a @ conv)


def counterexample_scan(cutoffs, grids, L: float = 8.0) -> list[CounterexampleRow]:
    """Tabulate both divergent quantities over cutoffs and grid sizes."""
    rows = []
    for eps in cutoffs:
        _check_cutoff(eps)
        di = counterexample_double_integral(eps)
        nsq = counterexample_norm_sq(eps)
        for N in grids:
            s4 = counterexample_schatten4(eps, GridSpec(1, L, int(N)))
            rows.append(CounterexampleRow(float(eps), di, int(N), s4, nsq))
    return rows

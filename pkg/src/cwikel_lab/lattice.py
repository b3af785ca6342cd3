"""Periodic grids, multiplication operators and Fourier multipliers.

Position samples live at ``origin + h*j``; frequency samples are stored in
FFT order, ``xi_k = 2*pi*fftfreq(N, h)``, which runs over the symmetric set
``(2*pi/L) * {-N/2, ..., N/2-1}``. The unitary DFT ``F`` maps one to the
other, and ``g(-i grad) = F^* diag(g) F``.

Measure conventions. A position sample carries the cell volume ``h**d``.
A frequency sample carries ``(2*pi/L)**d / (2*pi)**d = L**-d``, the
frequency cell volume divided by ``(2*pi)**d``. With these weights the
discrete Hilbert-Schmidt identity reads

    ||M_f g(-i grad)||_2 = ||f||_2 ||g||_2 ,

exactly, so the grid model is a finite instance of the abstract setting
with constant one, and one singular value occupies phase-space volume 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .majorization import (
    DenseOperator,
    StepFunction,
    decreasing_rearrangement,
    lorentz_quasinorm,
    schatten_norm,
    singular_values,
    tensor_rearrangement,
)

POSITION = "position"
FREQUENCY = "frequency"


@dataclass(frozen=True)
class GridSpec:
    d: int
    L: float
    N: int
    origin: float = 0.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("only d = 1 and d = 2 grids are supported")
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.N < 2 or self.N % 2:
            raise ValueError("N must be even")

    @classmethod
    def centered(cls, d, L, N):
        return cls(d, L, N, -L / 2)

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N ** self.d

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    @property
    def frequency_weight(self) -> float:
        """Normalized measure of one frequency sample, ``L**-d``."""
        return self.L ** (-self.d)

    @cached_property
    def axis(self) -> np.ndarray:
        return self.origin + self.h * np.arange(self.N)

    @cached_property
    def freq_axis(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    def points(self) -> tuple[np.ndarray, ...]:
        return np.meshgrid(*([self.axis] * self.d), indexing="ij")

    def frequencies(self) -> tuple[np.ndarray, ...]:
        return np.meshgrid(*([self.freq_axis] * self.d), indexing="ij")

    def sample(self, func) -> "SampledFunction":
        """Sample ``func(*coords)`` at the position points."""
        return SampledFunction(self, np.asarray(func(*self.points()), dtype=complex), POSITION)

    def sample_frequency(self, func) -> "SampledFunction":
        return SampledFunction(self, np.asarray(func(*self.frequencies()), dtype=complex), FREQUENCY)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: GridSpec
    values: np.ndarray
    tag: str = POSITION

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} samples, got {v.size}")
        if self.tag not in (POSITION, FREQUENCY):
            raise ValueError("tag must be 'position' or 'frequency'")
        object.__setattr__(self, "values", v.reshape(self.grid.shape))

    @property
    def weight(self) -> float:
        return self.grid.cell_volume if self.tag == POSITION else self.grid.frequency_weight

    def l2_norm(self) -> float:
        return float(np.sqrt(self.weight * np.sum(np.abs(self.values) ** 2)))

    def map(self, fn) -> "SampledFunction":
        return SampledFunction(self.grid, fn(self.values), self.tag)

    def as_tag(self, tag: str) -> "SampledFunction":
        """Reuse the raw sample array under the other tag (DFT index identification)."""
        return SampledFunction(self.grid, self.values, tag)


def _require(f: SampledFunction, tag: str):
    if f.tag != tag:
        raise ValueError(f"expected a {tag}-space function, got {f.tag}")


def mult_operator(f: SampledFunction) -> DenseOperator:
    _require(f, POSITION)
    return DenseOperator(np.diag(f.values.ravel()), f.grid.cell_volume)


def fourier_multiplier(g: SampledFunction) -> DenseOperator:
    """``F^* diag(g) F`` as a dense matrix."""
    _require(g, FREQUENCY)
    grid = g.grid
    n = grid.size
    axes = tuple(range(grid.d))
    basis = np.eye(n, dtype=complex).reshape(grid.shape + (n,))
    hat = sfft.fftn(basis, axes=axes, norm="ortho")
    hat *= g.values[(...,) + (None,)]
    out = sfft.ifftn(hat, axes=axes, norm="ortho").reshape(n, n)
    return DenseOperator(out, grid.frequency_weight)


def classical_product(f: SampledFunction, g: SampledFunction) -> DenseOperator:
    """``M_f g(-i grad)`` on the grid, as an operator with the standard trace."""
    _require(f, POSITION)
    _require(g, FREQUENCY)
    if f.grid != g.grid:
        raise ValueError("f and g must live on the same grid")
    m = fourier_multiplier(g).entries
    return DenseOperator(f.values.reshape(-1, 1) * m, 1.0)


def product_singular_values(f: SampledFunction, g: SampledFunction) -> np.ndarray:
    """Singular values of ``M_f g(-i grad)`` from the support submatrix.

    ``M_f F^* diag(g) F`` has the singular values of ``diag(f) F^* diag(g)``,
    and only rows in supp f and columns in supp g are nonzero, so a small
    block of the inverse DFT matrix suffices.
    """
    _require(f, POSITION)
    _require(g, FREQUENCY)
    grid = f.grid
    fv, gv = f.values.ravel(), g.values.ravel()
    rows = np.flatnonzero(fv)
    cols = np.flatnonzero(gv)
    if rows.size == 0 or cols.size == 0:
        return np.zeros(0)
    ridx = np.array(np.unravel_index(rows, grid.shape))
    cidx = np.array(np.unravel_index(cols, grid.shape))
    phase = 2 * np.pi * (ridx.T @ cidx) / grid.N
    block = np.exp(1j * phase) / np.sqrt(grid.size)
    block *= fv[rows, None]
    block *= gv[None, cols]
    return singular_values(block)


def product_step(f: SampledFunction, g: SampledFunction) -> StepFunction:
    """mu of ``M_f g(-i grad)`` (unit widths; zero singular values omitted)."""
    s = product_singular_values(f, g)
    return decreasing_rearrangement(s, 1.0)


def sample_rearrangement(f: SampledFunction) -> StepFunction:
    """mu of a sampled function, each sample carrying its measure."""
    return decreasing_rearrangement(f.values.ravel(), f.weight)


def phase_space_rearrangement(f: SampledFunction, g: SampledFunction) -> StepFunction:
    """mu of ``f (x) g`` with position weight ``h**d`` and frequency weight ``L**-d``."""
    _require(f, POSITION)
    _require(g, FREQUENCY)
    return tensor_rearrangement(sample_rearrangement(f), sample_rearrangement(g))


@dataclass(frozen=True)
class CellNormProfile:
    """Inner norms ``||f chi_{K+m}||_q`` indexed by unit cells ``m``."""

    cells: np.ndarray  # (n_cells, d) integer indices
    norms: np.ndarray  # (n_cells,)
    inner_q: float

    def outer(self, outer: str, p: float = 2.0) -> float:
        return outer_norm(self.norms, outer, p, self.cells)


def _cell_index(coords: np.ndarray, grid: GridSpec, tag: str) -> np.ndarray:
    if tag == POSITION:
        per = grid.N / grid.L
        if abs(grid.L - round(grid.L)) > 1e-12 or abs(per - round(per)) > 1e-9 or abs(grid.origin - round(grid.origin)) > 1e-12:
            raise ValueError("unit cells do not align with the grid (need integer L, origin and N/L)")
        # grid points sit exactly on multiples of h; shift by h/2 before flooring
        return np.floor(coords + grid.h / 2).astype(int)
    return np.floor(coords).astype(int)


def cell_profile(f: SampledFunction, inner_q: float = 2.0) -> CellNormProfile:
    """Per-unit-cube ``L_q`` norms of a sampled function.

    Position cells must align with the grid. Frequency cells are the unit
    cubes of frequency space; samples are assigned by ``floor(xi)``, and
    the cell norms use the unnormalized frequency measure ``(2 pi / L)**d``.
    """
    grid = f.grid
    coords = grid.points() if f.tag == POSITION else grid.frequencies()
    idx = np.stack([_cell_index(c.ravel(), grid, f.tag) for c in coords], axis=1)
    vals = np.abs(f.values.ravel())
    weight = grid.cell_volume if f.tag == POSITION else (2 * np.pi / grid.L) ** grid.d
    cells, inverse = np.unique(idx, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    if np.isinf(inner_q):
        norms = np.zeros(len(cells))
        np.maximum.at(norms, inverse, vals)
    else:
        norms = (np.bincount(inverse, vals ** inner_q, minlength=len(cells)) * weight) ** (1.0 / inner_q)
    keep = norms > 0
    return CellNormProfile(cells[keep], norms[keep], inner_q)


def log_weight(cells: np.ndarray) -> np.ndarray:
    """``w(m) = 1 + log(max(|m|, 1))`` (Euclidean |m|)."""
    r = np.linalg.norm(np.atleast_2d(cells), axis=1)
    return 1.0 + np.log(np.maximum(r, 1.0))


def outer_norm(a, outer: str, p: float = 2.0, cells=None) -> float:
    """Sequence norm of cell values: ``'lp'``, ``'lp_weak'`` or ``'l2log'``."""
    a = np.abs(np.asarray(a, dtype=float)).ravel()
    if outer == "lp":
        return schatten_norm(decreasing_rearrangement(a, 1.0), p) if a.size else 0.0
    if outer == "lp_weak":
        return lorentz_quasinorm(decreasing_rearrangement(a, 1.0), p) if a.size else 0.0
    if outer == "l2log":
        if cells is None:
            raise ValueError("l2log needs cell indices")
        return float(np.sqrt(np.sum(log_weight(cells) * a ** 2)))
    raise ValueError(f"unknown outer norm {outer!r}")


def mixed_cell_norm(f: SampledFunction, inner_q: float = 2.0, outer: str = "lp", p: float = 2.0) -> float:
    return cell_profile(f, inner_q).outer(outer, p)


def tensor_cell_norm(f: SampledFunction, g: SampledFunction, outer: str, p: float, inner_q: float = 2.0) -> float:
    """Mixed norm of ``f (x) g`` over unit cells of ``R^d x R^d``.

    The inner ``L_q`` norm of a product over a product cell factorizes, so
    the cell sequence is the outer product of the two profiles.
    """
    pf, pg = cell_profile(f, inner_q), cell_profile(g, inner_q)
    if pf.norms.size == 0 or pg.norms.size == 0:
        return 0.0
    return outer_norm(np.outer(pf.norms, pg.norms), outer, p)

"""Step functions carrying singular value functions, and the majorization calculus.

A :class:`StepFunction` is a non-increasing right-continuous function on
``(0, inf)`` stored as ``(value, width)`` segments. It is the common currency
of the package: singular values of a matrix, decreasing rearrangements of
sampled functions and tensor products of those all become step functions,
and every inequality is checked through partial integrals of them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import NumericalFailure

#: relative tolerance used to merge adjacent segments with equal values
MERGE_RTOL = 1e-12
#: singular values below this fraction of the largest one are set to zero
SVD_RTOL = 1e-12


@dataclass(frozen=True)
class PowerTail:
    """The function ``coef * t**(-exponent)`` on ``[start, inf)``."""

    coef: float
    exponent: float
    start: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return self.coef * t ** (-self.exponent)

    def integral(self, a, b):
        """Integral over ``[a, b]`` with ``start <= a <= b`` (``b`` may be inf)."""
        c, e = self.coef, self.exponent
        if c == 0.0 or a == b:
            return 0.0
        if e == 1.0:
            if a == 0.0 or np.isinf(b):
                return np.inf
            return c * np.log(b / a)
        if e < 1.0:
            if np.isinf(b):
                return np.inf
            return c * (b ** (1 - e) - a ** (1 - e)) / (1 - e)
        if a == 0.0:
            return np.inf
        hi = 0.0 if np.isinf(b) else b ** (1 - e)
        return c * (a ** (1 - e) - hi) / (e - 1)


def _merge_equal(values, widths):
    """Drop empty segments and merge neighbours whose values agree to MERGE_RTOL."""
    keep = widths > 0
    values, widths = values[keep], widths[keep]
    if values.size == 0:
        return values, widths
    new_group = np.empty(values.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = values[1:] < values[:-1] * (1.0 - MERGE_RTOL)
    if new_group.all():
        return values, widths
    starts = np.flatnonzero(new_group)
    w = np.add.reduceat(widths, starts)
    if np.isinf(w).any():
        # only a trailing group of zeros can have infinite width
        v = values[starts].copy()
    else:
        v = np.add.reduceat(values * widths, starts) / w
        last = np.append(starts[1:], values.size) - 1
        exact = values[starts] == values[last]
        v[exact] = values[starts][exact]
    return v, w


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Non-increasing step function on (0, inf).

    Segment ``i`` carries ``values[i]`` on ``[T_i, T_{i+1})`` where
    ``T_{i+1} - T_i = widths[i]``. Only the last width may be infinite, and
    then only with value 0. An optional :class:`PowerTail` continues the
    function past the last finite breakpoint.
    """

    values: np.ndarray
    widths: np.ndarray
    tail: PowerTail | None = None
    _ends: np.ndarray = field(init=False, repr=False)
    _cumint: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float)).ravel()
        w = np.atleast_1d(np.asarray(self.widths, dtype=float)).ravel()
        if v.shape != w.shape:
            raise ValueError("values and widths must have the same length")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("values must be finite and nonnegative")
        if np.any(np.isnan(w)) or np.any(w < 0):
            raise ValueError("widths must be nonnegative")
        if np.any(v[1:] > v[:-1] * (1 + MERGE_RTOL)):
            raise ValueError("values must be non-increasing")
        v, w = _merge_equal(v, w)
        if np.isinf(w[:-1]).any():
            raise ValueError("only the final width may be infinite")
        if w.size and np.isinf(w[-1]) and v[-1] != 0.0:
            raise ValueError("an infinite final segment must have value 0")
        if self.tail is not None:
            if w.size and np.isinf(w[-1]):
                raise ValueError("a tail cannot follow an infinite segment")
            start = float(w.sum())
            if not np.isclose(self.tail.start, start, rtol=1e-12, atol=0.0):
                raise ValueError("tail must start at the end of the finite segments")
            if v.size and self.tail.coef * start ** (-self.tail.exponent) > v[-1] * (1 + 1e-9):
                raise ValueError("tail must not exceed the last segment value")
            object.__setattr__(self, "tail", PowerTail(self.tail.coef, self.tail.exponent, start))
        v.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "widths", w)
        ends = np.cumsum(w)
        with np.errstate(invalid="ignore"):
            seg = np.where(v == 0.0, 0.0, v * w)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        ends.flags.writeable = False
        cum.flags.writeable = False
        object.__setattr__(self, "_ends", ends)
        object.__setattr__(self, "_cumint", cum)

    # -- basic views ------------------------------------------------------
    @property
    def breakpoints(self) -> np.ndarray:
        """Right endpoints of the segments."""
        return self._ends

    @property
    def support_end(self) -> float:
        """End of the last segment with a nonzero value (inf with a tail)."""
        if self.tail is not None and self.tail.coef > 0:
            return np.inf
        nz = np.flatnonzero(self.values > 0)
        return float(self._ends[nz[-1]]) if nz.size else 0.0

    def segments(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.widths.tolist()))

    def __len__(self):
        return int(self.values.size)

    def __repr__(self):
        tail = f", tail={self.tail}" if self.tail is not None else ""
        return f"StepFunction({self.segments()}{tail})"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._ends, t, side="right")
        vals = np.concatenate([self.values, [0.0]])
        out = vals[np.minimum(idx, self.values.size)]
        if self.tail is not None:
            past = t >= self.tail.start
            out = np.where(past, self.tail(np.where(past, t, 1.0)), out)
        return out

    def partial_integral(self, t):
        """``t -> integral of f over (0, t)``, exact."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        idx = np.searchsorted(self._ends, t, side="right")
        n = self.values.size
        out = np.empty(t.shape)
        inside = idx < n
        starts = np.concatenate([[0.0], self._ends])
        i = idx[inside]
        out[inside] = self._cumint[i] + self.values[i] * (t[inside] - starts[i])
        out[~inside] = self._cumint[n]
        if self.tail is not None:
            past = np.flatnonzero(t > self.tail.start)
            for j in past:
                out[j] = self._cumint[n] + self.tail.integral(self.tail.start, t[j])
        return float(out[0]) if scalar else out

    def integral(self) -> float:
        total = float(self._cumint[-1])
        if self.tail is not None:
            total += self.tail.integral(self.tail.start, np.inf)
        return total

    def scale(self, c: float) -> "StepFunction":
        c = abs(float(c))
        tail = None if self.tail is None else PowerTail(self.tail.coef * c, self.tail.exponent, self.tail.start)
        return StepFunction(self.values * c, self.widths, tail)

    def allclose(self, other: "StepFunction", rtol=1e-9, atol=1e-12) -> bool:
        """Compare as functions: same value on every piece of the common partition."""
        pts = np.union1d(self._ends[np.isfinite(self._ends)], other._ends[np.isfinite(other._ends)])
        probes = np.concatenate([[0.0], pts])
        return bool(np.allclose(self(probes), other(probes), rtol=rtol, atol=atol))


@dataclass(frozen=True)
class MajorizationVerdict:
    holds: bool
    observed_constant: float
    worst_breakpoint: float
    totals: tuple[float, float]
    slack: float = 1.0


@dataclass(frozen=True)
class DenseOperator:
    """Matrix of a discretized operator in an orthonormal basis.

    ``cell_weight`` is the trace weight of one basis vector: the trace of
    the algebra the operator lives in is ``cell_weight * trace(entries)``.
    For multiplication operators this is the cell volume ``h**d``; for
    operators on a Hilbert space with the standard trace it is 1.
    """

    entries: np.ndarray
    cell_weight: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2:
            raise ValueError("entries must be a matrix")
        if not np.all(np.isfinite(a)):
            raise ValueError("entries must be finite")
        if not self.cell_weight > 0:
            raise ValueError("cell_weight must be positive")
        object.__setattr__(self, "entries", a)

    @property
    def shape(self):
        return self.entries.shape

    def __matmul__(self, other):
        other_entries = other.entries if isinstance(other, DenseOperator) else other
        return DenseOperator(self.entries @ other_entries, 1.0)


def zero_function() -> StepFunction:
    return StepFunction(np.zeros(0), np.zeros(0))


def power_tail(coef: float, exponent: float, start: float = 0.0, values=(), widths=()) -> StepFunction:
    """Step function continued by the symbolic tail ``coef * t**(-exponent)``.

    ``power_tail(1, 1/p)`` is ``t**(-1/p)`` on all of ``(0, inf)``.
    """
    widths = np.asarray(widths, dtype=float)
    if widths.size and not np.isclose(widths.sum(), start):
        raise ValueError("start must equal the total width of the steps")
    return StepFunction(np.asarray(values, dtype=float), widths, PowerTail(float(coef), float(exponent), float(start)))


def decreasing_rearrangement(values, weights=None) -> StepFunction:
    """Decreasing rearrangement of weighted samples.

    ``values`` is either an array of samples (complex allowed, absolute values
    are taken) with ``weights`` of the same shape or a scalar weight, or a
    sequence of ``(value, weight)`` pairs when ``weights`` is None.
    """
    if weights is None:
        arr = np.asarray(values)
        if not isinstance(values, np.ndarray) and arr.ndim == 2 and arr.shape[1] == 2:
            values, weights = arr[:, 0], arr[:, 1]
        elif arr.size == 0:
            return zero_function()
        else:
            weights = 1.0
    v = np.abs(np.asarray(values)).ravel().astype(float)
    w = np.broadcast_to(np.asarray(weights, dtype=float), np.shape(values)).ravel()
    if v.size == 0:
        return zero_function()
    if np.any(~(w > 0)):
        raise ValueError("weights must be positive")
    if np.isinf(w[v > 0]).any():
        raise ValueError("infinite weight on a nonzero value")
    order = np.argsort(-v, kind="stable")
    v, w = v[order], w[order]
    if np.isinf(w).any():
        # all infinite weights sit on zeros, which are sorted last
        zero = v == 0
        v = np.concatenate([v[~zero], [0.0]])
        w = np.concatenate([w[~zero], [np.inf]])
    return StepFunction(v, w)


def distribution_function(f: StepFunction, s) -> np.ndarray:
    """``d(s) = |{t : f(t) > s}|`` for a step function."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    counts = np.searchsorted(-f.values, -s, side="left")
    ends = np.concatenate([[0.0], f.breakpoints])
    return ends[counts]


def _as_matrix(op) -> tuple[np.ndarray, float]:
    if isinstance(op, DenseOperator):
        return op.entries, op.cell_weight
    return np.asarray(op), 1.0


def singular_values(matrix) -> np.ndarray:
    """Singular values, descending, with the relative clamp SVD_RTOL applied."""
    a = np.asarray(matrix)
    if a.size == 0:
        return np.zeros(0)
    try:
        s = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    if s.size and s[0] > 0:
        s = np.where(s < SVD_RTOL * s[0], 0.0, s)
    return s


def singular_step(op, step_width: float = 1.0) -> StepFunction:
    """mu of a finite matrix; every singular value occupies ``step_width``.

    Pass ``step_width=op.cell_weight`` to measure with the trace of the
    algebra the operator was sampled from.
    """
    a, _ = _as_matrix(op)
    s = singular_values(a)
    # a rectangular matrix still acts on min(shape) singular directions
    return decreasing_rearrangement(s, step_width) if s.size else zero_function()


def cesaro_at(f: StepFunction, t) -> np.ndarray:
    """``(Cf)(t) = (1/t) * integral_0^t f``, exact at any points ``t > 0``."""
    t = np.asarray(t, dtype=float)
    return f.partial_integral(t) / t


def cesaro(f: StepFunction, rtol: float = 1e-6) -> StepFunction:
    """Step approximation of the Cesaro mean ``Cf``.

    On a segment ``[a, b)`` with value ``v`` one has ``Cf(t) = v + K/t``
    with ``K = F(a) - v*a >= 0``. The segment is cut at the points where
    ``Cf`` has dropped by the factor ``1 - rtol``, and each piece carries
    the value of ``Cf`` at its left end, so the result dominates ``Cf``
    and is within relative error ``rtol`` of it. Past the support of a
    finitely supported ``f`` the mean is ``F_total / t``, stored as a tail.
    """
    if f.tail is not None:
        raise ValueError("cesaro of a function with a tail is not supported")
    vals, wids = [], []
    starts = np.concatenate([[0.0], f.breakpoints])
    cum = f.partial_integral(starts)
    n = len(f)
    for i in range(n):
        v, a, b = f.values[i], starts[i], starts[i + 1]
        k = cum[i] - v * a
        if np.isinf(b):
            if v != 0.0:
                raise ValueError("infinite segment with positive value")
            break
        if k <= v * a * rtol or a == 0.0:
            vals.append(v + (k / a if a > 0 else 0.0))
            wids.append(b - a)
            continue
        cb = v + k / b
        ca = v + k / a
        m = int(np.ceil(np.log(ca / cb) / -np.log1p(-rtol)))
        levels = ca * (1 - rtol) ** np.arange(m)
        cuts = k / (levels[1:] - v) if m > 1 else np.zeros(0)
        cuts = cuts[cuts < b]
        pts = np.concatenate([[a], cuts, [b]])
        vals.extend((v + k / pts[:-1]).tolist())
        wids.extend(np.diff(pts).tolist())
    total = float(cum[-1])
    end = float(np.sum(wids))
    tail = PowerTail(total, 1.0, end) if total > 0 else None
    vals = np.minimum.accumulate(np.asarray(vals, dtype=float)) if vals else np.zeros(0)
    if tail is None:
        return StepFunction(np.append(vals, 0.0), np.append(np.asarray(wids, dtype=float), np.inf))
    return StepFunction(vals, np.asarray(wids, dtype=float), tail)


def _require_no_tail(*fs):
    for f in fs:
        if f.tail is not None:
            raise ValueError("operation needs functions without a symbolic tail")


def submajorizes(g: StepFunction, f: StepFunction, slack: float = 1.0, rtol: float = 1e-12) -> MajorizationVerdict:
    """Test ``f <<  slack * g``: ``int_0^t f <= slack * int_0^t g`` for all t.

    Both partial integrals are piecewise linear, so it is enough to compare
    them at the union of the breakpoints. ``observed_constant`` is the
    largest ratio of partial integrals, i.e. the smallest passing slack.
    """
    _require_no_tail(f, g)
    pts = np.union1d(f.breakpoints, g.breakpoints)
    pts = pts[np.isfinite(pts) & (pts > 0)]
    totals = (f.integral(), g.integral())
    if pts.size == 0:
        return MajorizationVerdict(True, 0.0, 0.0, totals, slack)
    F = f.partial_integral(pts)
    G = g.partial_integral(pts)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(F > 0, F / G, 0.0)
    ratio = np.where((F > 0) & (G <= 0), np.inf, ratio)
    j = int(np.argmax(ratio))
    observed = float(ratio[j])
    return MajorizationVerdict(observed <= slack * (1 + rtol), observed, float(pts[j]), totals, slack)


def majorizes(g: StepFunction, f: StepFunction, tol: float = 1e-9) -> MajorizationVerdict:
    """Test ``f < g``: submajorization plus equal totals (relative ``tol``)."""
    tf, tg = f.integral(), g.integral()
    if not (np.isfinite(tf) and np.isfinite(tg)):
        raise ValueError("majorization needs finite total integrals")
    sub = submajorizes(g, f, 1.0, rtol=tol)
    equal = abs(tf - tg) <= tol * max(abs(tf), abs(tg), np.finfo(float).tiny)
    return MajorizationVerdict(sub.holds and equal, sub.observed_constant, sub.worst_breakpoint, (tf, tg), 1.0)


def lorentz_quasinorm(f: StepFunction, p: float) -> float:
    """``sup_t t**(1/p) f(t)``, the weak L_p quasinorm."""
    if not p > 0:
        raise ValueError("p must be positive")
    best = 0.0
    if len(f):
        ends = f.breakpoints
        pos = f.values > 0
        if np.any(pos & np.isinf(ends)):
            return np.inf
        if np.any(pos):
            best = float(np.max(ends[pos] ** (1.0 / p) * f.values[pos]))
    if f.tail is not None and f.tail.coef > 0:
        e = 1.0 / p - f.tail.exponent
        if e > 0:
            return np.inf
        if e == 0:
            best = max(best, f.tail.coef)
        elif f.tail.start == 0.0:
            return np.inf
        else:
            best = max(best, f.tail.coef * f.tail.start ** e)
    return best


def schatten_norm(f: StepFunction, p: float) -> float:
    """``(integral f**p)**(1/p)``; ``p = inf`` gives the top value."""
    if np.isinf(p):
        if f.tail is not None and f.tail.start == 0.0 and f.tail.coef > 0:
            return np.inf
        return float(f.values[0]) if len(f) else 0.0
    if not p > 0:
        raise ValueError("p must be positive")
    pos = f.values > 0
    if np.any(np.isinf(f.widths[pos])):
        return np.inf
    total = float(np.sum(f.values[pos] ** p * f.widths[pos]))
    if f.tail is not None and f.tail.coef > 0:
        t = PowerTail(f.tail.coef ** p, f.tail.exponent * p, f.tail.start)
        total += t.integral(t.start, np.inf)
    return total ** (1.0 / p)


def l2linf_gauge(f: StepFunction) -> float:
    """``(integral_0^1 f**2)**(1/2)``."""
    return float(np.sqrt(power(f, 2).partial_integral(1.0)))


def power(f: StepFunction, p: float) -> StepFunction:
    if not p > 0:
        raise ValueError("p must be positive")
    tail = None
    if f.tail is not None:
        tail = PowerTail(f.tail.coef ** p, f.tail.exponent * p, f.tail.start)
    return StepFunction(f.values ** p, f.widths, tail)


def _finite_part(f: StepFunction):
    _require_no_tail(f)
    v, w = f.values, f.widths
    if w.size and np.isinf(w[-1]):
        v, w = v[:-1], w[:-1]
    return v, w


def tensor_rearrangement(f: StepFunction, g: StepFunction) -> StepFunction:
    """mu of the tensor product: pairwise products, widths multiplied."""
    fv, fw = _finite_part(f)
    gv, gw = _finite_part(g)
    if fv.size == 0 or gv.size == 0:
        return zero_function()
    return decreasing_rearrangement(np.outer(fv, gv), np.outer(fw, gw))


def direct_sum(fs: Iterable[StepFunction]) -> StepFunction:
    fs = list(fs)
    for f in fs:
        _require_no_tail(f)
    if not fs:
        return zero_function()
    v = np.concatenate([f.values for f in fs])
    w = np.concatenate([f.widths for f in fs])
    if v.size == 0:
        return zero_function()
    return decreasing_rearrangement(v, w)


def pointwise_sum(fs: Sequence[StepFunction]) -> StepFunction:
    """Pointwise sum of non-increasing step functions (again non-increasing)."""
    fs = list(fs)
    for f in fs:
        _require_no_tail(f)
    if not fs:
        return zero_function()
    pts = np.unique(np.concatenate([f.breakpoints for f in fs]))
    if pts.size == 0:
        return zero_function()
    starts = np.concatenate([[0.0], pts[:-1]])
    vals = sum(f(starts) for f in fs)
    return StepFunction(vals, np.diff(np.concatenate([[0.0], pts])))

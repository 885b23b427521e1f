"""Grids, piecewise sampled functions, cumulative quadrature and special functions.

Every function on ``[0, l]`` is stored as samples on a :class:`Grid`. A grid is a
list of segments whose shared endpoints are the jump locations of the problem,
so a discontinuous function simply carries two values at a breakpoint (the left
limit as the last node of one segment, the right limit as the first node of the
next). Inside a segment all samples are assumed to come from a smooth function.
"""

from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from numpy.lib.mixins import NDArrayOperatorsMixin
from numpy.polynomial import chebyshev as cheb

__all__ = [
    "GridError",
    "Grid",
    "PiecewiseFn",
    "cumulative_integral",
    "integrate",
    "LegendreBasis",
    "legendre_eval",
    "legendre_table",
    "spherical_bessel",
    "spherical_bessel_scaled",
]

DEFAULT_DEGREE = 9
QUADRATURE_RULES = {"trapezoid": 1, "simpson": 2, "default": DEFAULT_DEGREE}


class GridError(ValueError):
    """Structural mismatch between grids or malformed grid data."""


def _interval_weights(nodes: np.ndarray, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Weights integrating the local interpolant over every node interval.

    For interval ``[x_i, x_{i+1}]`` the integrand is replaced by the polynomial
    interpolating ``degree + 1`` consecutive nodes centred on the interval
    (shifted inwards near the segment ends). Returns ``(index, weights)``, both
    of shape ``(n - 1, degree + 1)``.
    """
    n = nodes.size
    p = min(degree, n - 1)
    i = np.arange(n - 1)
    start = np.clip(i - (p - 1) // 2, 0, n - 1 - p)
    index = start[:, None] + np.arange(p + 1)[None, :]
    stencil = nodes[index]
    lo = stencil[:, :1]
    hi = stencil[:, -1:]
    # Chebyshev basis on the stencil hull keeps the local systems well conditioned.
    s = 2.0 * (stencil - lo) / (hi - lo) - 1.0
    a = 2.0 * (nodes[i][:, None] - lo) / (hi - lo) - 1.0
    b = 2.0 * (nodes[i + 1][:, None] - lo) / (hi - lo) - 1.0
    vander = cheb.chebvander(s, p)  # (n-1, p+1, p+1): [interval, node, k]
    moments = np.empty((n - 1, p + 1))
    for k in range(p + 1):
        unit = np.zeros(p + 1)
        unit[k] = 1.0
        anti = cheb.chebint(unit)
        moments[:, k] = cheb.chebval(b[:, 0], anti) - cheb.chebval(a[:, 0], anti)
    w = np.linalg.solve(np.transpose(vander, (0, 2, 1)), moments[:, :, None])[:, :, 0]
    w *= 0.5 * (hi - lo)
    return index, w


class Grid:
    """Segmented discretisation of ``[0, l]``.

    Parameters
    ----------
    segments : sequence of arrays
        Strictly increasing node arrays. Consecutive segments share their
        endpoint, which becomes a breakpoint where sampled functions may jump.
    degree : int or str
        Degree of the local interpolant used by :func:`cumulative_integral`
        (1 is the composite trapezoid rule). ``"trapezoid"``, ``"simpson"``
        and ``"default"`` are accepted as aliases.
    """

    def __init__(self, segments: Sequence[Sequence[float]], degree: int | str = DEFAULT_DEGREE):
        if isinstance(degree, str):
            try:
                degree = QUADRATURE_RULES[degree]
            except KeyError:
                raise GridError(f"unknown quadrature rule {degree!r}") from None
        if degree < 1:
            raise GridError("quadrature degree must be >= 1")
        segs = []
        for j, seg in enumerate(segments):
            arr = np.array(seg, dtype=float)
            if arr.ndim != 1 or arr.size < 2:
                raise GridError(f"segment {j} needs at least two nodes")
            if np.any(np.diff(arr) <= 0):
                raise GridError(f"segment {j} nodes are not strictly increasing")
            arr.setflags(write=False)
            segs.append(arr)
        if not segs:
            raise GridError("grid needs at least one segment")
        if segs[0][0] != 0.0:
            raise GridError("grid must start at 0")
        for j in range(1, len(segs)):
            if segs[j][0] != segs[j - 1][-1]:
                raise GridError(f"segments {j - 1} and {j} do not share an endpoint")
        self.segments: tuple[np.ndarray, ...] = tuple(segs)
        self.degree = int(degree)
        sizes = [s.size for s in segs]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        x = np.concatenate(segs)
        x.setflags(write=False)
        self.x = x
        self.length = float(segs[-1][-1])
        self.breakpoints = np.array([s[-1] for s in segs[:-1]])

    @classmethod
    def uniform(
        cls,
        length: float,
        n: int = 2000,
        breakpoints: Sequence[float] = (),
        degree: int | str = DEFAULT_DEGREE,
        min_nodes: int = 12,
    ) -> "Grid":
        """Roughly ``n`` equispaced nodes with forced breakpoints.

        Each segment between breakpoints is uniform on its own; its node count is
        proportional to its length but never below ``min_nodes``.
        """
        if length <= 0:
            raise GridError("interval length must be positive")
        bps = sorted(float(b) for b in breakpoints)
        if any(b <= 0 or b >= length for b in bps):
            raise GridError("breakpoints must lie strictly inside (0, length)")
        if len(set(bps)) != len(bps):
            raise GridError("breakpoints must be distinct")
        edges = [0.0, *bps, float(length)]
        segs = []
        for a, b in zip(edges[:-1], edges[1:]):
            m = max(min_nodes - 1, int(round((b - a) / length * (n - 1))))
            seg = np.linspace(a, b, m + 1)
            seg[0], seg[-1] = a, b
            segs.append(seg)
        return cls(segs, degree=degree)

    @property
    def size(self) -> int:
        return self.x.size

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    def slices(self) -> list[slice]:
        return [slice(self.offsets[j], self.offsets[j + 1]) for j in range(self.n_segments)]

    def with_degree(self, degree: int | str) -> "Grid":
        return Grid(self.segments, degree=degree)

    def reflect(self) -> "Grid":
        """Grid of ``x -> l - x``; node order and segment order are reversed."""
        l = self.length
        segs = [l - s[::-1] for s in self.segments[::-1]]
        segs[0][0] = 0.0
        # exact shared endpoints after floating point reflection
        for j in range(1, len(segs)):
            segs[j][0] = segs[j - 1][-1]
        segs[-1][-1] = l
        return Grid(segs, degree=self.degree)

    @cached_property
    def _weights(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [_interval_weights(seg, self.degree) for seg in self.segments]

    def locate(self, pts: np.ndarray, side: str = "right") -> np.ndarray:
        """Segment index for every point; breakpoints go to ``side``."""
        pts = np.asarray(pts, dtype=float)
        if np.any(pts < 0) or np.any(pts > self.length):
            raise GridError("evaluation point outside [0, l]")
        seg = np.searchsorted(self.breakpoints, pts, side=side)
        return seg

    def same_as(self, other: "Grid") -> bool:
        if self is other:
            return True
        return (
            self.degree == other.degree
            and self.n_segments == other.n_segments
            and all(np.array_equal(a, b) for a, b in zip(self.segments, other.segments))
        )

    def __repr__(self) -> str:
        return (
            f"Grid(length={self.length:g}, nodes={self.size}, "
            f"breakpoints={self.breakpoints.tolist()}, degree={self.degree})"
        )


class PiecewiseFn(NDArrayOperatorsMixin):
    """Samples of a function on a :class:`Grid`.

    Behaves like an array under numpy ufuncs and arithmetic; operands must live
    on the same grid. Values are stored flat, so a breakpoint appears twice (left
    and right limit). Instances are read-only.
    """

    __array_priority__ = 20

    def __init__(self, grid: Grid, values, continuous: bool = False):
        vals = np.array(values)
        if vals.shape != (grid.size,):
            raise GridError(f"expected {grid.size} values, got shape {vals.shape}")
        if not np.issubdtype(vals.dtype, np.complexfloating):
            vals = vals.astype(float)
        vals.setflags(write=False)
        self.grid = grid
        self.values = vals
        self.continuous = bool(continuous)

    # construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, grid: Grid, c: complex) -> "PiecewiseFn":
        dtype = complex if isinstance(c, complex) else float
        return cls(grid, np.full(grid.size, c, dtype=dtype), continuous=True)

    @classmethod
    def from_callable(cls, grid: Grid, func: Callable[[np.ndarray], np.ndarray]) -> "PiecewiseFn":
        """Sample ``func`` segment by segment.

        Interior breakpoints are evaluated one ulp inside each segment so that
        step functions receive their one-sided limits.
        """
        parts = []
        nseg = grid.n_segments
        for j, seg in enumerate(grid.segments):
            pts = seg.copy()
            if j > 0:
                pts[0] = np.nextafter(pts[0], np.inf)
            if j < nseg - 1:
                pts[-1] = np.nextafter(pts[-1], -np.inf)
            parts.append(np.asarray(func(pts)) * np.ones_like(pts))
        return cls(grid, np.concatenate(parts))

    # numpy protocol -------------------------------------------------------
    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or "out" in kwargs:
            return NotImplemented
        grid = self.grid
        args = []
        for inp in inputs:
            if isinstance(inp, PiecewiseFn):
                if not inp.grid.same_as(grid):
                    raise GridError("operands live on different grids")
                args.append(inp.values)
            else:
                args.append(inp)
        result = getattr(ufunc, method)(*args, **kwargs)
        if isinstance(result, tuple):
            return tuple(PiecewiseFn(grid, r) for r in result)
        if np.ndim(result) == 0:
            return result
        return PiecewiseFn(grid, result)

    # accessors ------------------------------------------------------------
    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, item):
        return self.values[item]

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def real(self) -> "PiecewiseFn":
        return PiecewiseFn(self.grid, self.values.real, self.continuous)

    @property
    def imag(self) -> "PiecewiseFn":
        return PiecewiseFn(self.grid, self.values.imag, self.continuous)

    def conj(self) -> "PiecewiseFn":
        return PiecewiseFn(self.grid, np.conj(self.values), self.continuous)

    def segments(self) -> list[np.ndarray]:
        return [self.values[s] for s in self.grid.slices()]

    def left_right(self) -> tuple[np.ndarray, np.ndarray]:
        """Left and right limits at the interior breakpoints."""
        off = self.grid.offsets
        left = self.values[off[1:-1] - 1]
        right = self.values[off[1:-1]]
        return left, right

    def jumps(self) -> np.ndarray:
        left, right = self.left_right()
        return right - left

    def is_continuous(self, tol: float = 1e-12) -> bool:
        j = self.jumps()
        return bool(j.size == 0 or np.max(np.abs(j)) <= tol * max(1.0, self.sup()))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def at_start(self) -> complex:
        return self.values[0]

    def at_end(self) -> complex:
        return self.values[-1]

    def is_real(self, tol: float = 0.0) -> bool:
        if not np.iscomplexobj(self.values):
            return True
        return bool(np.max(np.abs(self.values.imag)) <= tol)

    def reflect(self) -> "PiecewiseFn":
        """``x -> u(l - x)`` on the reflected grid."""
        return PiecewiseFn(self.grid.reflect(), self.values[::-1], self.continuous)

    def with_values(self, values, continuous: bool | None = None) -> "PiecewiseFn":
        return PiecewiseFn(self.grid, values, self.continuous if continuous is None else continuous)

    def __call__(self, pts, side: str = "right"):
        """Evaluate by local Lagrange interpolation of the grid's degree."""
        scalar = np.ndim(pts) == 0
        pts = np.atleast_1d(np.asarray(pts, dtype=float))
        seg_idx = self.grid.locate(pts, side=side)
        out = np.empty(pts.shape, dtype=self.values.dtype)
        for j in np.unique(seg_idx):
            mask = seg_idx == j
            nodes = self.grid.segments[j]
            vals = self.values[self.grid.offsets[j] : self.grid.offsets[j + 1]]
            out[mask] = _lagrange_eval(nodes, vals, pts[mask], self.grid.degree)
        return out[0] if scalar else out

    def __repr__(self) -> str:
        kind = "complex" if np.iscomplexobj(self.values) else "real"
        return f"PiecewiseFn({kind}, nodes={self.values.size}, sup={self.sup():.3g})"


def _lagrange_eval(nodes: np.ndarray, vals: np.ndarray, pts: np.ndarray, degree: int) -> np.ndarray:
    n = nodes.size
    p = min(degree, n - 1)
    i = np.clip(np.searchsorted(nodes, pts, side="right") - 1, 0, n - 2)
    start = np.clip(i - (p - 1) // 2, 0, n - 1 - p)
    idx = start[:, None] + np.arange(p + 1)[None, :]
    xs = nodes[idx]
    ys = vals[idx]
    diff = pts[:, None] - xs
    exact = diff == 0
    res = np.empty(pts.shape, dtype=vals.dtype)
    hit = exact.any(axis=1)
    if np.any(hit):
        res[hit] = ys[hit][exact[hit]]
    rest = ~hit
    if np.any(rest):
        xr, yr, dr = xs[rest], ys[rest], diff[rest]
        # barycentric weights of each stencil
        dx = xr[:, :, None] - xr[:, None, :]
        np.einsum("ijj->ij", dx)[...] = 1.0
        bw = 1.0 / np.prod(dx, axis=2)
        t = bw / dr
        res[rest] = np.sum(t * yr, axis=1) / np.sum(t, axis=1)
    return res


def _check_same(g: PiecewiseFn, weight: PiecewiseFn | None) -> None:
    if weight is not None and not weight.grid.same_as(g.grid):
        raise GridError("integrand and weight live on different grids")


def cumulative_integral(g: PiecewiseFn, weight: PiecewiseFn | None = None) -> PiecewiseFn:
    """``x -> int_0^x w(t) g(t) dt`` as a continuous :class:`PiecewiseFn`.

    Each segment is integrated with the grid's local interpolatory rule, then
    the segment totals are chained, so jumps of the integrand at breakpoints
    are handled exactly.
    """
    _check_same(g, weight)
    grid = g.grid
    vals = g.values if weight is None else g.values * weight.values
    out = np.empty(grid.size, dtype=vals.dtype)
    offset = 0.0
    for sl, (index, w) in zip(grid.slices(), grid._weights):
        seg = vals[sl]
        pieces = np.sum(w * seg[index], axis=1)
        cum = np.empty(seg.size, dtype=vals.dtype)
        cum[0] = 0.0
        np.cumsum(pieces, out=cum[1:])
        out[sl] = cum + offset
        offset = out[sl.stop - 1]
    return PiecewiseFn(grid, out, continuous=True)


def integrate(g: PiecewiseFn, weight: PiecewiseFn | None = None) -> complex:
    """Definite integral over the whole grid."""
    _check_same(g, weight)
    grid = g.grid
    vals = g.values if weight is None else g.values * weight.values
    total = 0.0
    for sl, (index, w) in zip(grid.slices(), grid._weights):
        total = total + np.sum(w * vals[sl][index])
    return total


# Legendre polynomials ------------------------------------------------------


class LegendreBasis:
    """Legendre polynomials ``P_0 .. P_M``.

    ``coeff_rows[m][k]`` is the monomial coefficient ``l_{k,m}`` of ``z**k`` in
    ``P_m``; the rows are generated in exact rational arithmetic.
    """

    def __init__(self, max_degree: int):
        if max_degree < 0:
            raise ValueError("max_degree must be non-negative")
        self.max_degree = int(max_degree)
        rows: list[list[Fraction]] = [[Fraction(1)], [Fraction(0), Fraction(1)]]
        for m in range(2, self.max_degree + 1):
            prev, prev2 = rows[m - 1], rows[m - 2]
            row = [Fraction(0)] * (m + 1)
            for k, c in enumerate(prev):
                row[k + 1] += Fraction(2 * m - 1, m) * c
            for k, c in enumerate(prev2):
                row[k] -= Fraction(m - 1, m) * c
            rows.append(row)
        rows = rows[: self.max_degree + 1]
        self.exact_rows = rows
        self.coeff_rows = [np.array([float(c) for c in row]) for row in rows]

    def __call__(self, m: int, z):
        return legendre_eval(self, m, z)


def legendre_table(max_degree: int, z) -> np.ndarray:
    """Array ``P[m, ...] = P_m(z)`` for ``m = 0..max_degree`` (three-term recurrence)."""
    z = np.asarray(z, dtype=float)
    out = np.empty((max_degree + 1,) + z.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = z
    for m in range(2, max_degree + 1):
        out[m] = ((2 * m - 1) * z * out[m - 1] - (m - 1) * out[m - 2]) / m
    return out


def legendre_eval(basis: LegendreBasis, m: int, z):
    """``P_m(z)`` via the three-term recurrence."""
    if m < 0 or m > basis.max_degree:
        raise ValueError(f"degree {m} outside 0..{basis.max_degree}")
    res = legendre_table(m, z)[m]
    return float(res) if np.ndim(res) == 0 else res


# Spherical Bessel functions ------------------------------------------------

_SERIES_RADIUS = 1.0


def _series_scaled(nu_max: int, z: np.ndarray) -> np.ndarray:
    """``j_nu(z) / z**nu`` from the power series (used for ``|z| < 1``)."""
    out = np.empty((nu_max + 1, z.size), dtype=complex)
    w = -0.5 * z * z
    for nu in range(nu_max + 1):
        dfact = 1.0
        for j in range(1, 2 * nu + 2, 2):
            dfact *= j
        term = np.full(z.size, 1.0 / dfact, dtype=complex)
        total = term.copy()
        for k in range(1, 40):
            term = term * w / (k * (2 * nu + 2 * k + 1))
            total += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        out[nu] = total
    return out


def _miller(nu_max: int, z: np.ndarray) -> np.ndarray:
    """Downward recurrence normalised against ``j_0`` or ``j_1`` (whichever is larger)."""
    zmax = float(np.max(np.abs(z)))
    start = int(max(nu_max, zmax) + 25 + 2.0 * np.sqrt(zmax))
    t = np.zeros((start + 2, z.size), dtype=complex)
    t[start] = 1e-30
    for nu in range(start, 0, -1):
        t[nu - 1] = (2 * nu + 1) / z * t[nu] - t[nu + 1]
        big = np.abs(t[nu - 1]) > 1e200
        if np.any(big):
            t[nu - 1 :, big] *= 1e-200
    j0 = np.sin(z) / z
    j1 = np.sin(z) / z**2 - np.cos(z) / z
    use0 = np.abs(j0) >= np.abs(j1)
    scale = np.where(use0, j0 / np.where(use0, t[0], 1.0), j1 / np.where(use0, 1.0, t[1]))
    return t[: nu_max + 1] * scale


def spherical_bessel(nu_max: int, z) -> np.ndarray:
    """Spherical Bessel functions ``j_0(z) .. j_{nu_max}(z)``.

    ``z`` may be a complex scalar or array; the result has shape
    ``(nu_max + 1,) + z.shape`` and is complex unless every ``z`` is real.
    """
    if nu_max < 0:
        raise ValueError("nu_max must be >= 0")
    z_arr = np.asarray(z)
    real_input = not np.iscomplexobj(z_arr)
    flat = z_arr.astype(complex).ravel()
    out = np.empty((nu_max + 1, flat.size), dtype=complex)
    small = np.abs(flat) < _SERIES_RADIUS
    if np.any(small):
        zs = flat[small]
        powers = zs[None, :] ** np.arange(nu_max + 1)[:, None]
        out[:, small] = _series_scaled(nu_max, zs) * powers
    if np.any(~small):
        out[:, ~small] = _miller(nu_max, flat[~small])
    out = out.reshape((nu_max + 1,) + z_arr.shape)
    return out.real.copy() if real_input else out


def spherical_bessel_scaled(nu_max: int, z) -> np.ndarray:
    """``j_nu(z) / z**nu`` for ``nu = 0..nu_max``; finite at ``z = 0``.

    This is the form used when the coefficient functions are stored as
    ``x**m * alpha_m(x)``: the product ``alpha_m(x) j_m(rho x)`` becomes
    ``sigma_m(x) * rho**m * scaled_m(rho x)`` with no division by small ``x``.
    """
    z_arr = np.asarray(z)
    real_input = not np.iscomplexobj(z_arr)
    flat = z_arr.astype(complex).ravel()
    out = np.empty((nu_max + 1, flat.size), dtype=complex)
    small = np.abs(flat) < _SERIES_RADIUS
    if np.any(small):
        out[:, small] = _series_scaled(nu_max, flat[small])
    if np.any(~small):
        zb = flat[~small]
        out[:, ~small] = _miller(nu_max, zb) / zb[None, :] ** np.arange(nu_max + 1)[:, None]
    out = out.reshape((nu_max + 1,) + z_arr.shape)
    return out.real.copy() if real_input else out

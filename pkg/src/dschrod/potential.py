"""Distributional potentials ``q = sigma'`` with ``sigma`` square integrable.

A potential is given either as a regular part plus finitely many point
interactions ``alpha_k * delta(x - x_k)``, or directly through its
antiderivative ``sigma``. All downstream code works with ``sigma`` only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .numerics import DEFAULT_DEGREE, Grid, PiecewiseFn, cumulative_integral

__all__ = [
    "PotentialError",
    "PotentialSpec",
    "assemble_sigma",
    "default_grid",
]

Sampled = Union[Callable[[np.ndarray], np.ndarray], tuple]


class PotentialError(ValueError):
    """Invalid potential description."""


@dataclass(frozen=True)
class PotentialSpec:
    """User-level description of a potential on ``[0, length]``.

    Parameters
    ----------
    length : float
        Interval length ``l``.
    regular_part : callable or (x, values) or None
        The integrable part of ``q``. A callable is sampled on the grid; a pair
        of arrays is interpolated linearly.
    deltas : sequence of (location, strength)
        Point interactions. Locations must be strictly increasing and lie in
        the open interval.
    direct_sigma : PiecewiseFn or callable or (x, values) or None
        The antiderivative itself. Excludes ``regular_part`` and ``deltas``.
        A callable or sample pair must vanish at 0.
    real_valued : bool
        Declares the potential real; checked against the data.
    n_nodes : int
        Target number of grid nodes.
    degree : int or str
        Quadrature rule for the grid.
    """

    length: float
    regular_part: Sampled | None = None
    deltas: Sequence[tuple[float, complex]] = field(default_factory=tuple)
    direct_sigma: object | None = None
    real_valued: bool = True
    n_nodes: int = 2000
    degree: int | str = DEFAULT_DEGREE

    def __post_init__(self):
        if not np.isfinite(self.length) or self.length <= 0:
            raise PotentialError("interval length must be positive")
        deltas = tuple((float(x), complex(a)) for x, a in self.deltas)
        object.__setattr__(self, "deltas", deltas)
        locs = [x for x, _ in deltas]
        for x in locs:
            if not 0.0 < x < self.length:
                raise PotentialError(f"delta location {x} is not inside (0, {self.length})")
        if any(b <= a for a, b in zip(locs[:-1], locs[1:])):
            raise PotentialError("delta locations must be strictly increasing")
        if self.direct_sigma is not None and (self.regular_part is not None or deltas):
            raise PotentialError("direct_sigma excludes regular_part and deltas")
        if self.real_valued and any(a.imag != 0 for _, a in deltas):
            raise PotentialError("real_valued potential has a complex delta strength")

    @property
    def breakpoints(self) -> tuple[float, ...]:
        if isinstance(self.direct_sigma, PiecewiseFn):
            return tuple(self.direct_sigma.grid.breakpoints.tolist())
        return tuple(x for x, _ in self.deltas)

    def scaled(self, c: complex) -> "PotentialSpec":
        """The potential ``c * q`` (same grid settings)."""
        reg = self.regular_part
        if callable(reg):
            reg = _scale_callable(reg, c)
        elif reg is not None:
            reg = (np.asarray(reg[0]), c * np.asarray(reg[1]))
        sig = self.direct_sigma
        if sig is not None:
            sig = c * sig if isinstance(sig, PiecewiseFn) else _scale_callable(sig, c) if callable(sig) else (np.asarray(sig[0]), c * np.asarray(sig[1]))
        real = self.real_valued and complex(c).imag == 0
        return PotentialSpec(
            self.length,
            regular_part=reg,
            deltas=tuple((x, c * a) for x, a in self.deltas),
            direct_sigma=sig,
            real_valued=real,
            n_nodes=self.n_nodes,
            degree=self.degree,
        )


def _scale_callable(fn, c):
    return lambda x: c * np.asarray(fn(x))


def default_grid(spec: PotentialSpec) -> Grid:
    if isinstance(spec.direct_sigma, PiecewiseFn):
        return spec.direct_sigma.grid
    return Grid.uniform(spec.length, spec.n_nodes, spec.breakpoints, degree=spec.degree)


def _sample(grid: Grid, data: Sampled) -> PiecewiseFn:
    if callable(data):
        return PiecewiseFn.from_callable(grid, data)
    xs, vs = (np.asarray(a) for a in data)
    if xs.ndim != 1 or xs.shape != vs.shape:
        raise PotentialError("sampled function needs matching 1-d x and value arrays")
    if np.any(np.diff(xs) <= 0):
        raise PotentialError("sample abscissae must be strictly increasing")
    if xs[0] > 0 or xs[-1] < grid.length:
        raise PotentialError("samples must cover the whole interval")
    if np.iscomplexobj(vs):
        vals = np.interp(grid.x, xs, vs.real) + 1j * np.interp(grid.x, xs, vs.imag)
    else:
        vals = np.interp(grid.x, xs, vs)
    return PiecewiseFn(grid, vals)


def assemble_sigma(spec: PotentialSpec, grid: Grid | None = None) -> PiecewiseFn:
    """Antiderivative ``sigma`` of the potential with ``sigma(0) = 0``.

    The grid carries a breakpoint at every delta location so the Heaviside
    jumps are represented exactly.
    """
    if grid is None:
        grid = default_grid(spec)
    missing = [x for x, _ in spec.deltas if not np.any(np.isclose(grid.breakpoints, x, rtol=0, atol=0))]
    if missing:
        raise PotentialError(f"grid has no breakpoint at delta locations {missing}")
    if abs(grid.length - spec.length) > 1e-14 * spec.length:
        raise PotentialError("grid length does not match the potential")

    if spec.direct_sigma is not None:
        ds = spec.direct_sigma
        if isinstance(ds, PiecewiseFn):
            if not ds.grid.same_as(grid):
                raise PotentialError("direct_sigma lives on a different grid")
            sigma = ds
        else:
            sigma = _sample(grid, ds)
        if abs(sigma.at_start()) > 1e-12 * max(1.0, sigma.sup()):
            raise PotentialError("direct_sigma must vanish at x = 0")
    else:
        if spec.regular_part is not None:
            sigma = cumulative_integral(_sample(grid, spec.regular_part))
        else:
            sigma = PiecewiseFn(grid, np.zeros(grid.size))
        if spec.deltas:
            steps = np.zeros(grid.size, dtype=complex)
            for seg_id, sl in enumerate(grid.slices()):
                left = grid.segments[seg_id][0]
                # each segment sees the deltas at or left of its first node
                steps[sl] = sum(a for x, a in spec.deltas if x <= left)
            sigma = sigma + steps
    if spec.real_valued:
        if np.iscomplexobj(sigma.values):
            if np.max(np.abs(sigma.values.imag)) > 0:
                raise PotentialError("real_valued potential has complex samples")
            sigma = sigma.real
    return PiecewiseFn(grid, sigma.values)

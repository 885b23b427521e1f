"""Non-vanishing particular solution of ``-y'' + q y = 0``.

The equation is rewritten as a first order system for ``(y, y')`` with
``y^[1] = y' - sigma y``::

    y'     =  sigma y      + y^[1]
    y^[1]' = -sigma^2 y    - sigma y^[1]

and solved by the series of recursive integrals (successive approximations
about ``x = 0``). For real ``sigma`` the combination ``u11 + i u12`` of the
two real fundamental solutions never vanishes; for complex ``sigma`` a
deterministic search over combinations is used.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numerics import Grid, PiecewiseFn, cumulative_integral
from .potential import PotentialSpec, assemble_sigma, default_grid

__all__ = [
    "NonvanishingError",
    "SeriesOverflowError",
    "NonvanishingSolution",
    "dirac_spps",
    "select_constants",
    "build_f",
    "solution_from_f",
]

ADAPTIVE_TOL = 1e-17
ADAPTIVE_MAX_TERMS = 400
SCAN_SIZE = 64


class NonvanishingError(ValueError):
    """No numerically non-vanishing solution could be formed."""


class SeriesOverflowError(ArithmeticError):
    """A recursive integral became non-finite."""

    def __init__(self, k: int):
        super().__init__(f"recursive integral overflowed at term k={k}")
        self.k = k


def _system_series(
    sigma: PiecewiseFn,
    y0: complex,
    w0: complex,
    n_terms: int | None,
    tol: float = ADAPTIVE_TOL,
) -> tuple[PiecewiseFn, PiecewiseFn, int, float]:
    """Sum the successive approximation terms for one initial vector.

    Term ``k`` equals ``(-1)**k X^{(k)} / k!`` (first row) and
    ``(-1)**k Y^{(k)} / k!`` (second row) of the recursive integrals; the
    factorials are folded into the recursion so nothing overflows.

    With ``n_terms=None`` terms are added until the last one drops below
    ``tol`` times the running sum. Returns ``(y, y_quasi, terms_used, last)``.
    """
    grid = sigma.grid
    sig2 = sigma * sigma
    z = PiecewiseFn(grid, np.full(grid.size, y0, dtype=complex))
    w = PiecewiseFn(grid, np.full(grid.size, w0, dtype=complex))
    y_sum, w_sum = z, w
    limit = ADAPTIVE_MAX_TERMS if n_terms is None else n_terms
    last = max(z.sup(), w.sup())
    k = 0
    for k in range(1, limit + 1):
        z, w = cumulative_integral(sigma * z + w), -cumulative_integral(sig2 * z + sigma * w)
        if not (np.all(np.isfinite(z.values)) and np.all(np.isfinite(w.values))):
            raise SeriesOverflowError(k)
        y_sum = y_sum + z
        w_sum = w_sum + w
        last = max(z.sup(), w.sup())
        if n_terms is None and last <= tol * max(y_sum.sup(), w_sum.sup(), 1e-300):
            break
    else:
        if n_terms is None:
            raise NonvanishingError(f"series did not converge within {limit} terms")
    return y_sum, w_sum, k, last


def dirac_spps(sigma: PiecewiseFn, K: int) -> tuple[PiecewiseFn, PiecewiseFn, PiecewiseFn, PiecewiseFn]:
    """Fundamental matrix of the first order system, truncated after ``K`` terms.

    Returns ``(u11, u12, u21, u22)`` with ``U(0) = I``: the first column starts
    from ``(y, y^[1]) = (1, 0)`` and the second from ``(0, 1)``. Rows are the
    solution and its quasi-derivative.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    u11, u21, _, _ = _system_series(sigma, 1.0, 0.0, K)
    u12, u22, _, _ = _system_series(sigma, 0.0, 1.0, K)
    return u11, u12, u21, u22


def _fundamental(sigma: PiecewiseFn, K: int | None):
    u11, u21, k1, t1 = _system_series(sigma, 1.0, 0.0, K)
    u12, u22, k2, t2 = _system_series(sigma, 0.0, 1.0, K)
    return (u11, u12, u21, u22), max(k1, k2), max(t1, t2)


def select_constants(
    u11: PiecewiseFn,
    u12: PiecewiseFn,
    real_sigma: bool,
    prefer_real: bool = False,
    threshold: float = 1e-8,
) -> tuple[complex, complex]:
    """Coefficients ``(c1, c2)`` making ``c1 u11 + c2 u12`` non-vanishing.

    For real ``sigma`` the answer is ``(1, i)``. ``prefer_real`` returns
    ``(1, 0)`` whenever ``u11`` alone stays away from zero. For complex
    ``sigma`` a 64 x 64 scan of ``(cos t, sin t e^{ip})`` picks the pair with
    the largest minimum modulus, rescaled so that ``c1 = 1``.
    """
    a = np.asarray(u11.values, dtype=complex)
    b = np.asarray(u12.values, dtype=complex)
    if prefer_real:
        m = np.abs(a)
        if m.min() >= threshold * m.max():
            return 1.0 + 0j, 0j
    if real_sigma:
        return 1.0 + 0j, 1j
    # exclude theta = pi/2 region where c1 = 0 cannot be normalised
    thetas = np.linspace(0.0, np.pi, SCAN_SIZE, endpoint=False) - np.pi / 2 + np.pi / (2 * SCAN_SIZE)
    psis = np.linspace(0.0, 2 * np.pi, SCAN_SIZE, endpoint=False)
    c2 = np.tan(thetas)[:, None] * np.exp(1j * psis)[None, :]
    flat = c2.ravel()
    best, best_score = None, -np.inf
    for start in range(0, flat.size, 256):
        chunk = flat[start : start + 256]
        vals = np.abs(a[None, :] + chunk[:, None] * b[None, :])
        score = vals.min(axis=1) / vals.max(axis=1)
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score, best = score[i], chunk[i]
    if best_score < threshold:
        raise NonvanishingError("no nonvanishing combination found")
    return 1.0 + 0j, complex(best)


@dataclass(frozen=True)
class NonvanishingSolution:
    """A non-vanishing solution ``f`` with ``f(0) = 1`` and its derived data.

    Attributes
    ----------
    f, f_quasi : PiecewiseFn
        The solution and its quasi-derivative ``f' - sigma f`` (continuous).
    f_prime : PiecewiseFn
        ``f' = f_quasi + sigma f``; jumps where ``sigma`` jumps.
    tau : PiecewiseFn
        Logarithmic derivative ``f'/f``.
    sigma_f : PiecewiseFn
        ``tau + int_0^x tau^2``, the antiderivative of the potential
        normalised so that its quasi-derivative matches ``D_f``.
    f1 : PiecewiseFn
        Abel solution ``f int_0^x f^-2`` (vanishes at 0, unit Wronskian).
    sigma : PiecewiseFn
        Antiderivative of the potential the solution was built from.
    """

    f: PiecewiseFn
    f_quasi: PiecewiseFn
    f_prime: PiecewiseFn
    tau: PiecewiseFn
    sigma_f: PiecewiseFn
    f1: PiecewiseFn
    sigma: PiecewiseFn
    min_abs_f: float
    constants: tuple[complex, complex] = (1.0, 0.0)
    fundamental: tuple | None = field(default=None, repr=False)
    n_terms: int = 0
    tail: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.f.grid

    @property
    def length(self) -> float:
        return self.grid.length

    @property
    def is_real(self) -> bool:
        return self.f.is_real()

    def recip(self) -> PiecewiseFn:
        return 1.0 / self.f

    def wronskian(self) -> PiecewiseFn:
        """``W[f, u12]`` from the system rows; identically 1 for an exact solve."""
        if self.fundamental is None:
            raise ValueError("fundamental system not stored")
        _, u12, _, u22 = self.fundamental
        return self.f * u22 - u12 * self.f_quasi

    def equation_residual(self) -> PiecewiseFn:
        """``f_quasi + int (sigma f_quasi + sigma^2 f)``; constant for a true solution."""
        s = self.sigma
        return self.f_quasi + cumulative_integral(s * self.f_quasi + s * s * self.f)

    def reflected(self) -> "NonvanishingSolution":
        """Solution for the reflected potential ``q(l - x)``.

        Uses ``f(l - x) / f(l)`` with ``sigma`` replaced by
        ``sigma(l) - sigma(l - x)``.
        """
        fl = self.f.at_end()
        f_r = self.f.reflect() / fl
        fp_r = -self.f_prime.reflect() / fl
        s_end = self.sigma.at_end()
        sigma_r = s_end - self.sigma.reflect()
        return solution_from_f(sigma_r, f_r, fp_r, constants=self.constants)


def _as_complex_if_needed(u: PiecewiseFn) -> PiecewiseFn:
    if u.is_real():
        return u.real
    return u


def solution_from_f(
    sigma: PiecewiseFn,
    f: PiecewiseFn,
    f_prime: PiecewiseFn,
    constants=(1.0, 0.0),
    fundamental=None,
    n_terms: int = 0,
    tail: float = 0.0,
) -> NonvanishingSolution:
    """Assemble the derived quantities from samples of ``f`` and ``f'``."""
    f = _as_complex_if_needed(f)
    f_prime = _as_complex_if_needed(f_prime)
    min_abs = float(np.min(np.abs(f.values)))
    if min_abs <= 0:
        raise NonvanishingError("solution vanishes on the grid")
    tau = f_prime / f
    sigma_f = tau + cumulative_integral(tau * tau)
    f1 = f * cumulative_integral(1.0 / (f * f))
    return NonvanishingSolution(
        f=f,
        f_quasi=f_prime - sigma * f,
        f_prime=f_prime,
        tau=tau,
        sigma_f=sigma_f,
        f1=f1,
        sigma=sigma,
        min_abs_f=min_abs,
        constants=(complex(constants[0]), complex(constants[1])),
        fundamental=fundamental,
        n_terms=n_terms,
        tail=tail,
    )


def build_f(
    spec: PotentialSpec | PiecewiseFn,
    K: int | None = None,
    constants_override: Sequence[complex] | None = None,
    grid: Grid | None = None,
    prefer_real: bool = False,
    threshold: float = 1e-8,
) -> NonvanishingSolution:
    """Non-vanishing solution for a potential.

    Parameters
    ----------
    spec : PotentialSpec or PiecewiseFn
        The potential, or its antiderivative ``sigma`` directly.
    K : int, optional
        Fixed number of series terms. By default terms are added until they
        fall below ``1e-17`` of the sum.
    constants_override : (c1, c2), optional
        Combination of the fundamental solutions to use; ``c1`` must be
        nonzero (the result is divided by it).
    prefer_real : bool
        Use ``u11`` alone when it does not vanish.
    """
    if isinstance(spec, PiecewiseFn):
        sigma = spec
        real = sigma.is_real()
    else:
        sigma = assemble_sigma(spec, grid if grid is not None else default_grid(spec))
        real = spec.real_valued
    if K is not None and K < 1:
        raise ValueError("K must be >= 1")
    fund, used, tail = _fundamental(sigma, K)
    u11, u12, u21, u22 = (_as_complex_if_needed(u) for u in fund)
    if constants_override is not None:
        c1, c2 = (complex(c) for c in constants_override)
        if c1 == 0:
            raise NonvanishingError("c1 must be nonzero to normalise f(0) = 1")
    else:
        c1, c2 = select_constants(u11, u12, real, prefer_real=prefer_real, threshold=threshold)
    c2 = c2 / c1
    c1 = 1.0
    f = u11 + c2 * u12 if c2 != 0 else u11
    f_quasi = u21 + c2 * u22 if c2 != 0 else u21
    mags = np.abs(np.asarray(f.values))
    if mags.min() < threshold * mags.max():
        raise NonvanishingError(
            f"min|f| = {mags.min():.3e} is below {threshold:g} * max|f|; potential not numerically admissible"
        )
    if K is not None and tail > 1e-12 * f.sup():
        warnings.warn(f"series truncated at K={K} with last term {tail:.2e}", RuntimeWarning, stacklevel=2)
    f_prime = f_quasi + sigma * f
    return solution_from_f(
        sigma, f, f_prime, constants=(c1, c2), fundamental=(u11, u12, u21, u22), n_terms=used, tail=tail
    )

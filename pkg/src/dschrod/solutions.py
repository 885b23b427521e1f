"""Power series in the spectral parameter and the Cauchy problem solver.

For ``-y'' + q y = rho**2 y`` the solutions with Cauchy data at ``x = 0``
expand in formal powers::

    e_f = sum_k (i rho)^k phi^(k) / k!
    C_f = sum_k (-1)^k rho^(2k) phi^(2k) / (2k)!
    S_f = sum_k (-1)^k rho^(2k) phi^(2k+1) / (2k+1)!

``D_f y = y' - (f'/f) y`` is read off the ``1/f`` table using
``D_f phi_f^(k) = k phi_1/f^(k-1)``, so no numerical differentiation is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma

import numpy as np

from .nonvanishing import NonvanishingSolution
from .numerics import PiecewiseFn, cumulative_integral
from .powers import FormalPowerTable, r_operator

__all__ = [
    "SolutionSample",
    "spps_eval",
    "spps_endpoint",
    "max_terms",
    "tail_bound",
    "cauchy_solve",
    "sigma_quasi",
]

KINDS = ("exponential", "cosine", "sine")


@dataclass(frozen=True)
class SolutionSample:
    """A solution for one value of ``rho`` sampled on the grid.

    Attributes
    ----------
    values : PiecewiseFn
        ``y(x)``.
    d_f : PiecewiseFn
        ``D_f y = y' - (f'/f) y``.
    quasi : PiecewiseFn
        Quasi-derivative ``y' - sigma_f y`` with respect to ``sigma_f``,
        equal to ``d_f - y int_0^x (f'/f)^2``.
    tail_bound : float
        Bound on the sup norm of the discarded series terms.
    """

    rho: complex
    kind: str
    values: PiecewiseFn
    d_f: PiecewiseFn
    quasi: PiecewiseFn
    tail_bound: float


def max_terms(K_max: int, kind: str) -> int:
    """Largest admissible ``N`` for a table of order ``K_max``."""
    if kind == "exponential":
        return K_max
    if kind == "cosine":
        return K_max // 2
    if kind == "sine":
        return (K_max - 1) // 2
    raise ValueError(f"unknown solution kind {kind!r}")


def _series_coefficients(rho: complex, N: int, kind: str) -> tuple[np.ndarray, np.ndarray, int]:
    """Weights ``w_k`` of ``phi^(k)`` in the series and ``v_k`` of ``phi_1/f^(k)`` in ``D_f``.

    Returns ``(w, v, K)`` with both arrays of length ``K + 1``.
    """
    rho = complex(rho)
    if kind == "exponential":
        K = N
        k = np.arange(K + 1)
        w = np.ones(K + 1, dtype=complex)
        for j in range(1, K + 1):
            w[j] = w[j - 1] * 1j * rho / j
        # D_f e = i rho sum_k (i rho)^k phi_1/f^(k)/k!
        v = np.zeros(K + 1, dtype=complex)
        v[:K] = 1j * rho * w[:K]
        return w, v, K
    lam = rho * rho
    if kind == "cosine":
        K = 2 * N
        w = np.zeros(K + 1, dtype=complex)
        v = np.zeros(K + 1, dtype=complex)
        term = 1.0 + 0j
        w[0] = 1.0
        for j in range(1, N + 1):
            term = term * (-lam) / ((2 * j - 1) * (2 * j))
            w[2 * j] = term
            # D_f C = sum_j (-lam)^j phi_1/f^(2j-1)/(2j-1)!
            v[2 * j - 1] = term * (2 * j)
        return w, v, K
    if kind == "sine":
        K = 2 * N + 1
        w = np.zeros(K + 1, dtype=complex)
        v = np.zeros(K + 1, dtype=complex)
        term = 1.0 + 0j
        w[1] = 1.0
        v[0] = 1.0
        for j in range(1, N + 1):
            term = term * (-lam) / ((2 * j) * (2 * j + 1))
            w[2 * j + 1] = term
            v[2 * j] = term * (2 * j + 1)
        return w, v, K
    raise ValueError(f"unknown solution kind {kind!r}")


def tail_bound(powers: FormalPowerTable, rho: complex, N: int, kind: str) -> float:
    """Bound on the neglected terms from the factorial estimates.

    Uses ``|phi^(k)| <= sup|f| A^ceil(k/2) B^floor(k/2) l^k`` with
    ``A = sup|f|^-2`` and ``B = sup|f|^2``, then sums the remaining series
    terms in log space until they are negligible.
    """
    fmax, A, B = powers.growth_constants
    length = powers.grid.length
    r = abs(complex(rho))
    if r == 0:
        return 0.0
    first = {"exponential": N + 1, "cosine": 2 * N + 2, "sine": 2 * N + 3}[kind]
    step = 1 if kind == "exponential" else 2
    # series terms are rho^k phi^(k)/k! except sine which lacks one rho power
    shift = 1 if kind == "sine" else 0
    logs = []
    k = first
    peak = -np.inf
    while True:
        lt = (
            np.log(fmax)
            + ((k + 1) // 2) * np.log(A)
            + (k // 2) * np.log(B)
            + k * np.log(length)
            + (k - shift) * np.log(r)
            - lgamma(k + 1)
        )
        logs.append(lt)
        peak = max(peak, lt)
        if k > first + 20 and lt < peak - 40 and k > 2 * r * length * np.sqrt(A * B):
            break
        k += step
    logs = np.array(logs)
    return float(np.exp(peak) * np.sum(np.exp(logs - peak)))


def _resolve_N(powers: FormalPowerTable, N: int | None, kind: str) -> int:
    limit = max_terms(powers.K_max, kind)
    if N is None:
        return limit
    if N < 0 or N > limit:
        raise ValueError(f"N={N} exceeds the table (max {limit} for {kind})")
    return N


def spps_eval(powers: FormalPowerTable, rho: complex, N: int | None = None, which: str = "cosine") -> SolutionSample:
    """Evaluate ``e_f``, ``C_f`` or ``S_f`` on the grid by its truncated series.

    ``N`` counts the retained terms of the respective series: ``k = 0..N`` for
    the exponential, and ``k = 0..N`` of the even (odd) part for the cosine
    (sine), which uses formal powers up to ``2N`` (``2N + 1``). By default the
    whole table is used.
    """
    N = _resolve_N(powers, N, which)
    w, v, K = _series_coefficients(rho, N, which)
    grid = powers.grid
    vals = w @ powers.phi_array[: K + 1]
    dvals = v @ powers.phi_recip_array[: K + 1]
    sol = powers.solution
    y = PiecewiseFn(grid, vals)
    d = PiecewiseFn(grid, dvals)
    quasi = d - y * cumulative_integral(sol.tau * sol.tau)
    return SolutionSample(complex(rho), which, y, d, quasi, tail_bound(powers, rho, N, which))


def spps_endpoint(powers: FormalPowerTable, rho: complex, which: str = "cosine", N: int | None = None) -> tuple[complex, complex]:
    """``(y(l), D_f y(l))`` without forming the whole grid arrays."""
    N = _resolve_N(powers, N, which)
    w, v, K = _series_coefficients(rho, N, which)
    return complex(w @ powers.phi_array[: K + 1, -1]), complex(v @ powers.phi_recip_array[: K + 1, -1])


def sigma_quasi(sol: NonvanishingSolution, y: PiecewiseFn, d_f: PiecewiseFn) -> PiecewiseFn:
    """Quasi-derivative ``y' - sigma y`` for the potential's own ``sigma``.

    ``y' = D_f y + tau y``; the combination ``tau - sigma`` is continuous.
    """
    return d_f + (sol.tau - sol.sigma) * y


def cauchy_solve(
    f: NonvanishingSolution,
    g: PiecewiseFn,
    c0: complex = 0.0,
    c1: complex = 0.0,
    return_d_f: bool = False,
):
    """``y = R_f g + c1 f1 + c0 f``.

    ``y`` satisfies ``y'' - q y = g`` (that is ``(-d^2/dx^2 + q) y = -g``)
    with ``y(0) = c0`` and ``D_f y(0) = c1``. With ``return_d_f`` the pair
    ``(y, D_f y)`` is returned, using ``D_f R_f g = f^-1 int_0^x f g``.
    """
    ff = f.f
    y = r_operator(ff, g)
    if c1 != 0:
        y = y + c1 * f.f1
    if c0 != 0:
        y = y + c0 * ff
    if not return_d_f:
        return y
    d = cumulative_integral(ff * g) / ff
    if c1 != 0:
        d = d + c1 / ff
    return y, d

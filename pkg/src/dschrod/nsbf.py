"""Fourier-Legendre coefficients of the transmutation kernel and Bessel series.

The kernel ``K(x, t)`` mapping ``cos(rho t)`` to ``C_f(rho, x)`` expands as
``K(x, t) = sum_m a_m(x)/x P_m(t/x)``. Writing ``alpha_m = 2 a_m`` and
``sigma_m = x**m alpha_m`` the solutions become Neumann series of spherical
Bessel functions::

    C_f(rho, x) = cos(rho x) + sum_m (-1)^m alpha_2m(x) j_2m(rho x)
    S_f(rho, x) = sin(rho x)/rho + 1/rho sum_m (-1)^m alpha_2m+1(x) j_2m+1(rho x)

whose truncation error is uniform in ``rho`` on horizontal strips. The
coefficients are computed by a recursion in ``m`` (production path) or from
the formal powers by the explicit Legendre sums (cross-check).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import factorial
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import legendre as npleg

from .nonvanishing import NonvanishingSolution, solution_from_f
from .numerics import (
    LegendreBasis,
    PiecewiseFn,
    cumulative_integral,
    integrate,
    legendre_table,
    spherical_bessel_scaled,
)
from .powers import FormalPowerTable
from .solutions import SolutionSample

__all__ = [
    "DEFAULT_MMAX",
    "NsbfCoeffs",
    "coeffs_direct",
    "coeffs_recursive",
    "nsbf_eval",
    "nsbf_error_bound",
    "kernel_reconstruct",
    "kernel_moment",
    "impedance_kernel_values",
    "legendre_monomial_moment",
    "mapping_residual",
    "kernel_norm_squared",
    "kernel_norm_bound",
    "recip_solution",
    "NsbfSolver",
    "reflected_solutions",
]

DEFAULT_MMAX = 60
CANCELLATION_DIGITS = 8
GROWTH_RATIO = 1e6
# below (x/l)**m = DIVISION_FLOOR the quotient sigma_m / x**m is replaced by its
# leading power law, since rounding errors in sigma_m would be amplified
DIVISION_FLOOR = 1e-5


def _default_denominator(m: int) -> int:
    return 2 * m - 3


@dataclass(frozen=True)
class NsbfCoeffs:
    """Coefficient functions ``sigma_m = x**m alpha_m`` for ``m = 0..M_max``.

    Attributes
    ----------
    sigma_m : list of PiecewiseFn
        The stored form; bounded and free of division by ``x``.
    provenance : list of str
        ``"direct"`` or ``"recursive"`` per ``m``.
    flags : dict
        ``m -> reason`` for coefficients judged unreliable (cancellation or
        recursion growth).
    diagnostics : list of float
        Cancellation ratio (direct) or growth ratio (recursive) per ``m``.
    """

    M_max: int
    sigma_m: list
    provenance: list
    solution: NonvanishingSolution
    flags: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    @property
    def grid(self):
        return self.solution.grid

    @cached_property
    def sigma_array(self) -> np.ndarray:
        return np.array([s.values for s in self.sigma_m])

    @cached_property
    def alpha(self) -> list:
        """``alpha_m = sigma_m / x**m`` with the removable point at 0 set to 0."""
        x = self.grid.x
        length = self.grid.length
        out = []
        for m, s in enumerate(self.sigma_m):
            out.append(PiecewiseFn(self.grid, _divide_power(s.values, x, m, length)))
        return out

    @cached_property
    def a(self) -> list:
        return [0.5 * al for al in self.alpha]

    def a_at(self, x: float, M: int | None = None) -> np.ndarray:
        """``a_0(x) .. a_M(x)`` at an arbitrary ``0 < x <= l``."""
        M = self.M_max if M is None else M
        if x <= 0:
            raise ValueError("coefficients a_m are evaluated for x > 0 only")
        s = np.array([self.sigma_m[m](x, side="left") for m in range(M + 1)])
        return 0.5 * s / x ** np.arange(M + 1)

    def alternate(self, M: int | None = None) -> "NsbfCoeffs":
        return self if M is None else NsbfCoeffs(M, self.sigma_m[: M + 1], self.provenance[: M + 1], self.solution, {k: v for k, v in self.flags.items() if k <= M}, self.diagnostics[: M + 1])


def _divide_power(s: np.ndarray, x: np.ndarray, m: int, length: float) -> np.ndarray:
    if m == 0:
        return s.copy()
    out = np.zeros_like(s)
    ok = (x / length) ** m >= DIVISION_FLOOR
    ok &= x > 0
    out[ok] = s[ok] / x[ok] ** m
    if np.any(ok) and not np.all(ok | (x == 0)):
        # alpha_m(x) = O(x^(m+1)) near the origin for a locally smooth potential
        i = np.argmax(ok)
        small = (~ok) & (x > 0)
        out[small] = out[i] * (x[small] / x[i]) ** (m + 1)
    return out


def coeffs_direct(powers: FormalPowerTable, basis: LegendreBasis | None = None, M: int | None = None) -> NsbfCoeffs:
    """Coefficients from the explicit sums over formal powers.

    ``sigma_m = (2m+1) (sum_k l_{k,m} x^(m-k) phi^(k) - x^m)``. The ratio of the
    largest summand to the result measures cancellation; ``m`` is flagged
    when more than eight digits are lost.
    """
    if M is None:
        M = min(powers.K_max, 20)
    if basis is None:
        basis = LegendreBasis(M)
    if M > powers.K_max or M > basis.max_degree:
        raise ValueError(f"M={M} exceeds the formal power table or the Legendre basis")
    grid = powers.grid
    x = grid.x
    sig, prov, diag, flags = [], [], [], {}
    for m in range(M + 1):
        row = basis.coeff_rows[m]
        terms = np.array([row[k] * x ** (m - k) * powers.phi[k].values for k in range(m + 1) if row[k] != 0])
        total = terms.sum(axis=0) - x**m
        s = (2 * m + 1) * total
        scale = float(np.max(np.sum(np.abs(terms), axis=0)))
        res = float(np.max(np.abs(total)))
        ratio = scale / res if res > 0 else np.inf
        diag.append(ratio)
        if ratio > 10**CANCELLATION_DIGITS:
            flags[m] = f"cancellation: {np.log10(ratio):.1f} digits lost"
        sig.append(PiecewiseFn(grid, s))
        prov.append("direct")
    return NsbfCoeffs(M, sig, prov, powers.solution, flags, diag)


def coeffs_recursive(
    f: NonvanishingSolution,
    M: int = DEFAULT_MMAX,
    denominator: Callable[[int], int] = _default_denominator,
) -> NsbfCoeffs:
    """Coefficients by the two-step recursion in ``m``.

    ::

        sigma_0 = f - 1,  sigma_1 = 3 (f int f^-2 - x)
        eta_m   = int (t f' + (m-1) f) sigma_{m-2}
        theta_m = int f^-2 (eta_m - t f sigma_{m-2})
        sigma_m = (2m+1)/(2m-3) (x^2 sigma_{m-2} + 2(2m-1) f theta_m)

    ``f'`` is sampled from the quasi-derivative, so jumps at point interactions
    are resolved by the grid. ``denominator`` exists to compare alternative
    readings of the normalising factor.
    """
    if M < 0:
        raise ValueError("M must be >= 0")
    grid = f.grid
    ff, fp = f.f, f.f_prime
    x = PiecewiseFn(grid, grid.x)
    inv2 = 1.0 / (ff * ff)
    sig = [ff - 1.0, 3.0 * (f.f1 - x)]
    diag = [np.nan, np.nan]
    flags = {}
    for m in range(2, M + 1):
        prev = sig[m - 2]
        eta = cumulative_integral((x * fp + (m - 1) * ff) * prev)
        theta = cumulative_integral((eta - x * ff * prev) * inv2)
        s = (2 * m + 1) / denominator(m) * (x * x * prev + 2 * (2 * m - 1) * ff * theta)
        sig.append(s)
        before = max(sig[m - 1].sup(), sig[m - 2].sup())
        ratio = s.sup() / before if before > 0 else (0.0 if s.sup() == 0 else np.inf)
        diag.append(ratio)
        if ratio > GROWTH_RATIO:
            flags[m] = f"growth ratio {ratio:.2e}"
    sig = sig[: M + 1]
    return NsbfCoeffs(M, sig, ["recursive"] * (M + 1), f, flags, diag[: M + 1])


def _resolve_N(coeffs: NsbfCoeffs, N: int | None) -> int:
    if N is None:
        return coeffs.M_max
    if N < 0 or N > coeffs.M_max:
        raise ValueError(f"N={N} exceeds M_max={coeffs.M_max}")
    return N


def _sigma_at(coeffs: NsbfCoeffs, x, N: int) -> tuple[np.ndarray, np.ndarray]:
    if x is None:
        return coeffs.grid.x, coeffs.sigma_array[: N + 1]
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.all(xs == coeffs.grid.length):
        # the right endpoint is a node; skip interpolation
        return xs, np.repeat(coeffs.sigma_array[: N + 1, -1:], xs.size, axis=1)
    return xs, np.array([coeffs.sigma_m[m](xs) for m in range(N + 1)])


def parseval_tail(coeffs: NsbfCoeffs, N: int, x=None) -> np.ndarray:
    """``(sum_{N<m<=M_max} 2|a_m|^2 / ((2m+1) x))^(1/2)`` at the grid nodes or ``x``."""
    xs, _ = _sigma_at(coeffs, x, 0)
    out = np.zeros(xs.size)
    pos = xs > 0
    at_end = x is not None and np.all(xs == coeffs.grid.length)
    for m in range(N + 1, coeffs.M_max + 1):
        if x is None:
            a = coeffs.a[m].values
        elif at_end:
            a = np.full(xs.size, coeffs.a[m].values[-1])
        else:
            a = 0.5 * _divide_power(np.asarray(coeffs.sigma_m[m](xs)), xs, m, coeffs.grid.length)
        out[pos] += 2 * np.abs(a[pos]) ** 2 / ((2 * m + 1) * xs[pos])
    return np.sqrt(out)


def nsbf_error_bound(eps: np.ndarray, x: np.ndarray, rho: complex) -> np.ndarray:
    """``eps * 2 sinh(C x)/C`` with ``C = |Im rho|`` (``2 x eps`` when ``C = 0``)."""
    C = abs(complex(rho).imag)
    if C == 0:
        return 2 * x * eps
    return eps * 2 * np.sinh(C * x) / C


def nsbf_eval(coeffs: NsbfCoeffs, rho: complex, x=None, N: int | None = None):
    """Truncated Bessel series for ``C_f`` and ``S_f``.

    Parameters
    ----------
    x : array_like, optional
        Evaluation points (default: the grid nodes).
    N : int, optional
        Highest retained index ``m`` (default ``M_max``).

    Returns
    -------
    C, S : ndarray
        Partial sums with ``m <= N``.
    eps : ndarray
        Parseval estimate of the discarded kernel norm on ``(-x, x)``.
    """
    N = _resolve_N(coeffs, N)
    xs, sig = _sigma_at(coeffs, x, N)
    rho = complex(rho)
    z = rho * xs
    jh = spherical_bessel_scaled(N, z)
    m = np.arange(N + 1)
    signs = np.where((m // 2) % 2 == 0, 1.0, -1.0)
    # alpha_m j_m(rho x) = sigma_m rho^m jhat_m(rho x)
    rpow = rho ** m
    terms = sig * (signs * rpow)[:, None] * jh
    even = m % 2 == 0
    C = np.cos(z) + terms[even].sum(axis=0)
    sinc = xs * spherical_bessel_scaled(0, z)[0]
    odd = ~even
    if rho != 0:
        S = sinc + terms[odd].sum(axis=0) / rho
    else:
        # rho^(m-1) jhat_m vanishes at rho = 0 except m = 1
        S = sinc + (sig[1] * jh[1] if N >= 1 else 0.0)
    eps = parseval_tail(coeffs, N, x)
    if np.isrealobj(coeffs.sigma_array) and rho.imag == 0:
        C, S = C.real, S.real
    return C, S, eps


def recip_solution(sol: NonvanishingSolution) -> NonvanishingSolution:
    """The Darboux partner ``1/f`` packaged as a non-vanishing solution."""
    g = 1.0 / sol.f
    gp = -sol.f_prime / (sol.f * sol.f)
    tau = -sol.tau
    sigma_g = tau + cumulative_integral(tau * tau)
    return solution_from_f(sigma_g, g, gp)


class NsbfSolver:
    """Bessel-series evaluation of ``C_f``, ``S_f`` with ``D_f`` data.

    The ``D_f`` derivatives use the Darboux relations
    ``D_f C_f = -rho^2 S_1/f`` and ``D_f S_f = C_1/f``, so a second coefficient
    table for ``1/f`` is built.
    """

    def __init__(self, f: NonvanishingSolution, M: int = DEFAULT_MMAX, coeffs: NsbfCoeffs | None = None):
        self.f = f
        self.M = M
        self.coeffs = coeffs if coeffs is not None else coeffs_recursive(f, M)
        self.recip = recip_solution(f)
        self.coeffs_recip = coeffs_recursive(self.recip, M)

    def _eval(self, rho, x, N):
        C, S, eps = nsbf_eval(self.coeffs, rho, x, N)
        Cr, Sr, _ = nsbf_eval(self.coeffs_recip, rho, x, N)
        rho = complex(rho)
        dC = -rho * rho * Sr
        dS = Cr
        return C, S, dC, dS, eps

    def endpoint(self, rho: complex, N: int | None = None):
        """``(C(l), D_f C(l), S(l), D_f S(l))``."""
        C, S, dC, dS, _ = self._eval(rho, np.array([self.f.length]), N)
        return complex(C[0]), complex(dC[0]), complex(S[0]), complex(dS[0])

    def solutions(self, rho: complex, N: int | None = None) -> tuple[SolutionSample, SolutionSample]:
        """Cosine and sine type solutions on the grid."""
        C, S, dC, dS, eps = self._eval(rho, None, N)
        grid = self.f.grid
        tau2 = cumulative_integral(self.f.tau * self.f.tau)
        bound = float(np.max(nsbf_error_bound(eps, grid.x, rho)))
        out = []
        for kind, y, d in (("cosine", C, dC), ("sine", S, dS)):
            yv = PiecewiseFn(grid, y)
            dv = PiecewiseFn(grid, d)
            b = bound if kind == "cosine" or rho == 0 else bound / abs(complex(rho))
            out.append(SolutionSample(complex(rho), kind, yv, dv, dv - yv * tau2, b))
        return out[0], out[1]


# Kernel -------------------------------------------------------------------


def kernel_reconstruct(coeffs: NsbfCoeffs, x: float, t, M: int | None = None, part: str = "full"):
    """Partial sum ``K_M(x, t) = sum_{m<=M} a_m(x)/x P_m(t/x)``.

    ``part`` selects the ``"even"`` or ``"odd"`` part in ``t`` (even or odd
    ``m`` only) instead of the ``"full"`` kernel.
    """
    if x <= 0:
        raise ValueError("kernel is defined for x > 0")
    M = coeffs.M_max if M is None else M
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > x * (1 + 1e-14)):
        raise ValueError("|t| must not exceed x")
    a = coeffs.a_at(x, M)
    if part == "even":
        a = np.where(np.arange(M + 1) % 2 == 0, a, 0)
    elif part == "odd":
        a = np.where(np.arange(M + 1) % 2 == 1, a, 0)
    elif part != "full":
        raise ValueError(f"unknown part {part!r}")
    P = legendre_table(M, np.clip(t / x, -1, 1))
    return np.tensordot(a, P, axes=(0, 0)) / x


def kernel_moment(coeffs: NsbfCoeffs, x: float, weight: Callable[[np.ndarray], np.ndarray], M: int | None = None, n_points: int = 200):
    """``int_{-x}^{x} K_M(x, t) w(t) dt`` by Gauss-Legendre quadrature."""
    z, w = npleg.leggauss(n_points)
    t = x * z
    return x * np.sum(w * kernel_reconstruct(coeffs, x, t, M) * weight(t))


def impedance_kernel_values(coeffs: NsbfCoeffs, f: NonvanishingSolution, x: float, t_list, M: int | None = None):
    """``Khat(x, t) = f(x)^-1 int_{-x}^t K_M(x, s) ds`` in closed form.

    Uses ``int_{-1}^z P_0 = z + 1`` and ``int_{-1}^z P_m = (P_{m+1} - P_{m-1})/(2m+1)``,
    which vanish identically at ``z = -1``.
    """
    if x <= 0:
        raise ValueError("kernel is defined for x > 0")
    M = coeffs.M_max if M is None else M
    t = np.asarray(t_list, dtype=float)
    z = np.clip(t / x, -1, 1)
    a = coeffs.a_at(x, M)
    P = legendre_table(M + 1, z)
    Q = np.empty((M + 1,) + z.shape)
    Q[0] = z + 1.0
    for m in range(1, M + 1):
        Q[m] = (P[m + 1] - P[m - 1]) / (2 * m + 1)
    fx = f.f(x, side="left")
    return np.tensordot(a, Q, axes=(0, 0)) / fx


def legendre_monomial_moment(m: int, k: int) -> Fraction:
    """``int_{-1}^{1} P_m(z) z^k dz`` exactly."""
    if k < m or (k - m) % 2:
        return Fraction(0)
    return Fraction(
        2 ** (m + 1) * factorial(k) * factorial((k + m) // 2),
        factorial((k - m) // 2) * factorial(k + m + 1),
    )


def mapping_residual(coeffs: NsbfCoeffs, powers: FormalPowerTable, k: int, M: int | None = None) -> float:
    """Sup over the grid of ``|x^k + int_{-x}^x K_M(x,t) t^k dt - phi^(k)(x)|``.

    The moments of the Legendre series are exact, so only ``a_m`` with ``m <= k``
    contribute.
    """
    M = coeffs.M_max if M is None else M
    x = coeffs.grid.x
    total = x**k + 0j
    for m in range(min(k, M) + 1):
        mu = float(legendre_monomial_moment(m, k))
        if mu:
            # a_m x^k mu written through sigma_m to avoid dividing by x^m
            total = total + 0.5 * coeffs.sigma_m[m].values * x ** (k - m) * mu
    return float(np.max(np.abs(total - powers.phi[k].values)))


def kernel_norm_squared(coeffs: NsbfCoeffs, M: int | None = None) -> float:
    """``||K_M||^2`` over the triangle ``0 <= |t| <= x <= l`` via Parseval."""
    M = coeffs.M_max if M is None else M
    x = coeffs.grid.x
    dens = np.zeros(x.size)
    pos = x > 0
    for m in range(M + 1):
        a = coeffs.a[m].values
        dens[pos] += 2 * np.abs(a[pos]) ** 2 / ((2 * m + 1) * x[pos])
    # density is O(x) at the origin, so zero there is the correct limit
    return float(np.real(integrate(PiecewiseFn(coeffs.grid, dens))))


def kernel_norm_bound(f: NonvanishingSolution) -> float:
    """``4 l (d + 2 d^2 (l^2 d + l) e^(l d))`` with ``d = ||f'/f||^2_L2``."""
    length = f.length
    d = float(np.real(integrate(np.abs(f.tau) ** 2)))
    return 4 * length * (d + 2 * d * d * (length**2 * d + length) * np.exp(length * d))


# Reflection -----------------------------------------------------------------


def reflected_solutions(spec, f: NonvanishingSolution, rho: complex, N: int | None = None, M: int = DEFAULT_MMAX, method: str = "nsbf", powers_K: int = 100):
    """Solutions ``psi``, ``theta`` with Cauchy data at the right endpoint.

    ``psi(l) = 1``, ``D_f psi(l) = 0`` and ``theta(l) = 0``, ``D_f theta(l) = 1``.
    Both are obtained from the cosine and sine solutions of the reflected
    problem, built on ``f(l - x)/f(l)``; ``spec`` is accepted for interface
    symmetry and not needed beyond ``f``.
    """
    fr = f.reflected()
    if method == "nsbf":
        Cr, Sr = NsbfSolver(fr, M).solutions(rho, N)
    elif method == "spps":
        from .powers import formal_powers
        from .solutions import spps_eval

        P = formal_powers(fr, powers_K)
        Cr = spps_eval(P, rho, N, "cosine")
        Sr = spps_eval(P, rho, N, "sine")
    else:
        raise ValueError(f"unknown method {method!r}")
    grid = f.grid
    tau2 = cumulative_integral(f.tau * f.tau)

    def back(sample: SolutionSample, sign: float) -> SolutionSample:
        y = PiecewiseFn(grid, sign * sample.values.values[::-1])
        # D_f (R u) = -R (D_fr u)
        d = PiecewiseFn(grid, -sign * sample.d_f.values[::-1])
        return SolutionSample(complex(rho), "psi" if sign > 0 else "theta", y, d, d - y * tau2, sample.tail_bound)

    return back(Cr, 1.0), back(Sr, -1.0)

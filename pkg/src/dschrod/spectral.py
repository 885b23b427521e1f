"""Boundary value problems: characteristic functions and real eigenvalues."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .nonvanishing import NonvanishingSolution
from .numerics import PiecewiseFn, integrate
from .nsbf import DEFAULT_MMAX, NsbfSolver
from .powers import DEFAULT_KMAX, FormalPowerTable, formal_powers
from .solutions import spps_endpoint, spps_eval

__all__ = [
    "BoundaryCondition",
    "Eigenpair",
    "Spectrum",
    "SpectralProblem",
    "rho_of_lambda",
    "characteristic",
    "characteristic_exponential",
    "characteristic_reflected",
    "find_eigenvalues",
    "DIRICHLET",
]

SPPS_LIMIT = 15.0


@dataclass(frozen=True)
class BoundaryCondition:
    """``a y + b Y = 0`` at one endpoint.

    ``Y`` is ``D_f y = y' - (f'/f) y`` for ``convention="d_f"`` and the
    quasi-derivative ``y' - sigma y`` for ``convention="sigma_quasi"``.
    """

    side: str
    a: complex = 1.0
    b: complex = 0.0
    convention: str = "sigma_quasi"

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        if self.convention not in ("d_f", "sigma_quasi"):
            raise ValueError("convention must be 'd_f' or 'sigma_quasi'")
        if self.a == 0 and self.b == 0:
            raise ValueError("boundary condition coefficients must not both vanish")


def DIRICHLET(side: str) -> BoundaryCondition:
    return BoundaryCondition(side, 1.0, 0.0)


@dataclass
class Eigenpair:
    lam: float
    rho: complex
    eigenfunction: PiecewiseFn
    residual: float
    index: int


class Spectrum(list):
    """List of :class:`Eigenpair` with search diagnostics."""

    truncated: bool = False
    clusters: list

    def __init__(self, items=(), truncated=False, clusters=None):
        super().__init__(items)
        self.truncated = truncated
        self.clusters = [] if clusters is None else clusters

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([e.lam for e in self])


def rho_of_lambda(lam: float) -> complex:
    """``sqrt(lam)`` for ``lam >= 0`` and ``i sqrt(-lam)`` otherwise."""
    lam = float(lam)
    return complex(np.sqrt(lam)) if lam >= 0 else 1j * np.sqrt(-lam)


@dataclass
class SpectralProblem:
    """A potential (through ``f``) with two boundary conditions.

    Solutions come from the power series for ``|rho| l <= 15`` and from the
    Bessel series beyond.
    """

    f: NonvanishingSolution
    left: BoundaryCondition = field(default_factory=lambda: DIRICHLET("left"))
    right: BoundaryCondition = field(default_factory=lambda: DIRICHLET("right"))
    K: int = DEFAULT_KMAX
    M: int = DEFAULT_MMAX
    spps_limit: float = SPPS_LIMIT

    def __post_init__(self):
        if self.left.side != "left" or self.right.side != "right":
            raise ValueError("expected a left and a right boundary condition")

    @cached_property
    def powers(self) -> FormalPowerTable:
        return formal_powers(self.f, self.K)

    @cached_property
    def nsbf(self) -> NsbfSolver:
        return NsbfSolver(self.f, self.M)

    @cached_property
    def nsbf_reflected(self) -> NsbfSolver:
        return NsbfSolver(self.f.reflected(), self.M)

    @property
    def length(self) -> float:
        return self.f.length

    def _offset(self, side: str) -> complex:
        """``(tau - sigma)`` at the endpoint; links ``D_f y`` and ``y' - sigma y``."""
        i = 0 if side == "left" else -1
        return complex(self.f.tau.values[i] - self.f.sigma.values[i])

    def d_f_coefficients(self, bc: BoundaryCondition) -> tuple[complex, complex]:
        """``(a, b)`` of ``bc`` rewritten as ``a y + b D_f y = 0``."""
        if bc.convention == "d_f":
            return complex(bc.a), complex(bc.b)
        # y' - sigma y = D_f y + (tau - sigma) y
        return complex(bc.a) + complex(bc.b) * self._offset(bc.side), complex(bc.b)

    def sigma_coefficients(self, bc: BoundaryCondition) -> tuple[complex, complex]:
        if bc.convention == "sigma_quasi":
            return complex(bc.a), complex(bc.b)
        return complex(bc.a) - complex(bc.b) * self._offset(bc.side), complex(bc.b)

    @cached_property
    def is_real(self) -> bool:
        if not self.f.sigma.is_real(1e-14):
            return False
        for bc in (self.left, self.right):
            a, b = self.sigma_coefficients(bc)
            c = b if abs(b) > abs(a) else a
            if abs((a / c).imag) > 1e-12 or abs((b / c).imag) > 1e-12:
                return False
        return True

    def use_spps(self, rho: complex) -> bool:
        return abs(rho) * self.length <= self.spps_limit

    def endpoint_data(self, rho: complex):
        """``(C(l), D_f C(l), S(l), D_f S(l))``."""
        if self.use_spps(rho):
            C, dC = spps_endpoint(self.powers, rho, "cosine")
            S, dS = spps_endpoint(self.powers, rho, "sine")
            return C, dC, S, dS
        return self.nsbf.endpoint(rho)

    def basis(self, rho: complex):
        """Cosine and sine solutions on the grid."""
        if self.use_spps(rho):
            return spps_eval(self.powers, rho, None, "cosine"), spps_eval(self.powers, rho, None, "sine")
        return self.nsbf.solutions(rho)


def characteristic(problem: SpectralProblem, lam: float) -> complex:
    """Determinant of the boundary functionals on the basis ``(C_f, S_f)``."""
    rho = rho_of_lambda(lam)
    aL, bL = problem.d_f_coefficients(problem.left)
    aR, bR = problem.d_f_coefficients(problem.right)
    C, dC, S, dS = problem.endpoint_data(rho)
    # left functionals: C(0) = 1, D_f C(0) = 0, S(0) = 0, D_f S(0) = 1
    return aL * (aR * S + bR * dS) - bL * (aR * C + bR * dC)


def characteristic_exponential(problem: SpectralProblem, lam: float) -> complex:
    """Same function from the pair ``e_f(rho), e_f(-rho)`` (power series only).

    The determinant on that basis is ``-2 i rho`` times the one on ``(C, S)``.
    """
    rho = rho_of_lambda(lam)
    if rho == 0:
        raise ValueError("exponential basis degenerates at rho = 0")
    aL, bL = problem.d_f_coefficients(problem.left)
    aR, bR = problem.d_f_coefficients(problem.right)
    P = problem.powers
    ep, dep = spps_endpoint(P, rho, "exponential")
    em, dem = spps_endpoint(P, -rho, "exponential")
    # e(+-rho, 0) = 1 and D_f e(+-rho, 0) = +-i rho
    lp = aL + bL * 1j * rho
    lm = aL - bL * 1j * rho
    det = lp * (aR * em + bR * dem) - lm * (aR * ep + bR * dep)
    return det / (-2j * rho)


def characteristic_reflected(problem: SpectralProblem, lam: float) -> complex:
    """Left functional applied to the solution satisfying the right condition.

    That solution is ``b_R psi - a_R theta`` with ``psi``, ``theta`` the
    solutions normalised at ``x = l``; the roots coincide with those of
    :func:`characteristic`.
    """
    rho = rho_of_lambda(lam)
    aL, bL = problem.d_f_coefficients(problem.left)
    aR, bR = problem.d_f_coefficients(problem.right)
    Cr, dCr, Sr, dSr = problem.nsbf_reflected.endpoint(rho)
    # psi(0) = C~(l), D_f psi(0) = -D C~(l); theta(0) = -S~(l), D_f theta(0) = D S~(l)
    psi, dpsi = Cr, -dCr
    th, dth = -Sr, dSr
    y, dy = bR * psi - aR * th, bR * dpsi - aR * dth
    return aL * y + bL * dy


def _sign_changes(v: np.ndarray) -> int:
    s = np.sign(v[np.abs(v) > 1e-12 * np.max(np.abs(v))])
    return int(np.sum(s[1:] != s[:-1]))


def _eigenpair(problem: SpectralProblem, lam: float, index_hint: int | None = None) -> Eigenpair:
    rho = rho_of_lambda(lam)
    Csol, Ssol = problem.basis(rho)
    aL, bL = problem.d_f_coefficients(problem.left)
    aR, bR = problem.d_f_coefficients(problem.right)
    # (B_L S, -B_L C) annihilates the left functional
    cC, cS = bL, -aL
    y = cC * Csol.values + cS * Ssol.values
    dy = cC * Csol.d_f + cS * Ssol.d_f
    if problem.is_real:
        # fix the phase so the eigenfunction is real
        k = int(np.argmax(np.abs(y.values)))
        ph = y.values[k] / abs(y.values[k])
        y = y / ph
        dy = dy / ph
    norm = np.sqrt(float(np.real(integrate(np.abs(y) ** 2))))
    y = y / norm
    dy = dy / norm
    resid = abs(aR * y.values[-1] + bR * dy.values[-1])
    if problem.is_real:
        idx = _sign_changes(np.real(y.values[1:-1]))
    else:
        idx = -1 if index_hint is None else index_hint
    if problem.is_real:
        y = y.real
    return Eigenpair(float(lam), rho, y, float(resid), idx)


def find_eigenvalues(
    problem: SpectralProblem,
    lambda_min: float,
    lambda_max: float,
    max_count: int = 50,
    rtol: float = 1e-10,
    step: float | None = None,
) -> Spectrum:
    """Real eigenvalues in ``[lambda_min, lambda_max]``.

    The characteristic function is sampled on a uniform grid in
    ``s = sign(lam) sqrt|lam|`` (spacing ``pi/(8 l)`` by default, an eighth of
    the free eigenvalue spacing), sign changes are refined by Brent's method,
    and local minima of ``|Phi|`` without a sign change that come close to zero
    are reported as unresolved clusters.
    """
    if not lambda_min < lambda_max:
        raise ValueError("lambda_min must be below lambda_max")
    if not problem.is_real:
        raise ValueError("eigenvalue search needs a real potential with real boundary conditions")
    if step is None:
        step = np.pi / (8 * problem.length)

    def s_of(lam):
        return np.sign(lam) * np.sqrt(abs(lam))

    def phi(s):
        return float(np.real(characteristic(problem, s * abs(s))))

    s0, s1 = s_of(lambda_min), s_of(lambda_max)
    n = max(2, int(np.ceil((s1 - s0) / step)) + 1)
    ss = np.linspace(s0, s1, n)
    vals = np.array([phi(s) for s in ss])
    scale = float(np.max(np.abs(vals))) if np.any(vals) else 1.0
    roots, clusters = [], []
    for i in range(n - 1):
        a, b = ss[i], ss[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0:
            if not roots or roots[-1] != a:
                roots.append(a)
            continue
        if fa * fb < 0:
            r = brentq(phi, a, b, xtol=1e-15 * max(1.0, abs(a)), rtol=4 * np.finfo(float).eps, maxiter=200)
            roots.append(r)
        elif 0 < i and vals[i - 1] * fa > 0 and abs(fa) < abs(vals[i - 1]) and abs(fa) < abs(fb):
            # local minimum of |Phi| without a sign change: possible double root
            res = minimize_scalar(lambda s: abs(phi(s)), bounds=(ss[i - 1], b), method="bounded", options={"xatol": 1e-12})
            if abs(res.fun) < 1e-8 * scale:
                clusters.append(float(res.x * abs(res.x)))
    if vals[-1] == 0 and (not roots or roots[-1] != ss[-1]):
        roots.append(ss[-1])
    lams = [float(r * abs(r)) for r in roots]
    truncated = len(lams) > max_count
    lams = lams[:max_count]
    pairs = [_eigenpair(problem, lam, i) for i, lam in enumerate(lams)]
    return Spectrum(pairs, truncated, clusters)

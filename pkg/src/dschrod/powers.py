"""Formal powers attached to a non-vanishing solution.

Two parity chains of recursive integrals with alternating weights ``f**2``
and ``f**-2`` produce the formal powers of ``f`` and of ``1/f`` at once::

    X^(k)  = int_0^x X^(k-1)  (f^2)^((-1)^k)
    Xt^(k) = int_0^x Xt^(k-1) (f^2)^((-1)^(k-1))

    phi_f^(k)   = k! f  (Xt^(k) if k even else X^(k))
    phi_1/f^(k) = k!/f  (X^(k)  if k even else Xt^(k))

An independent route builds the same functions from the operator
``R_f g = f int f^-2 int f g`` with ``phi^(k) = k(k-1) R_f phi^(k-2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import factorial

import numpy as np

from .nonvanishing import NonvanishingSolution
from .numerics import PiecewiseFn, cumulative_integral

__all__ = [
    "DEFAULT_KMAX",
    "FormalPowerTable",
    "recursive_integrals",
    "formal_powers",
    "formal_powers_by_operator",
    "r_operator",
]

DEFAULT_KMAX = 100


def recursive_integrals(f: NonvanishingSolution, K: int) -> tuple[list[PiecewiseFn], list[PiecewiseFn]]:
    """The two chains ``X^(0..K)`` and ``Xt^(0..K)``; both start from 1."""
    if K < 0:
        raise ValueError("K must be >= 0")
    f2 = f.f * f.f
    inv2 = 1.0 / f2
    one = PiecewiseFn(f.grid, np.ones(f.grid.size), continuous=True)
    X, Xt = [one], [one]
    for k in range(1, K + 1):
        w, wt = (f2, inv2) if k % 2 == 0 else (inv2, f2)
        X.append(cumulative_integral(X[-1], w))
        Xt.append(cumulative_integral(Xt[-1], wt))
    return X, Xt


@dataclass(frozen=True)
class FormalPowerTable:
    """Formal powers ``phi_f^(k)``, ``phi_1/f^(k)`` and ``phi_f^(k)/f``, ``k = 0..K_max``."""

    K_max: int
    phi: list
    phi_recip: list
    phi_hat: list
    X: list
    X_tilde: list
    solution: NonvanishingSolution

    @property
    def grid(self):
        return self.solution.grid

    @cached_property
    def phi_array(self) -> np.ndarray:
        """``phi_f^(k)`` stacked as a ``(K_max + 1, n_nodes)`` array."""
        return np.array([p.values for p in self.phi])

    @cached_property
    def phi_recip_array(self) -> np.ndarray:
        return np.array([p.values for p in self.phi_recip])

    @cached_property
    def growth_constants(self) -> tuple[float, float, float]:
        """``(sup|f|, sup|f|^-2, sup|f|^2)`` entering the factorial bounds."""
        a = np.abs(self.solution.f.values)
        return float(a.max()), float(np.max(a**-2)), float(np.max(a**2))

    def d_f(self, k: int) -> PiecewiseFn:
        """``D_f phi_f^(k) = f (phi_f^(k)/f)'`` through the ladder identity."""
        if k == 0:
            return PiecewiseFn(self.grid, np.zeros(self.grid.size))
        return k * self.phi_recip[k - 1]

    def d_recip(self, k: int) -> PiecewiseFn:
        """``D_{1/f} phi_1/f^(k) = (1/f) (f phi_1/f^(k))'``."""
        if k == 0:
            return PiecewiseFn(self.grid, np.zeros(self.grid.size))
        return k * self.phi[k - 1]

    def ladder_direct(self, k: int) -> PiecewiseFn:
        """``D_f phi_f^(k)`` computed from the chains without the 1/f table.

        ``(phi/f)' = k! (Xt^(k))'`` (even ``k``) equals ``k! Xt^(k-1) f^-2``,
        hence ``D_f phi = k! Xt^(k-1) / f``; odd ``k`` uses the ``X`` chain.
        """
        if k == 0:
            return PiecewiseFn(self.grid, np.zeros(self.grid.size))
        chain = self.X_tilde if k % 2 == 0 else self.X
        return factorial(k) * chain[k - 1] / self.solution.f


def formal_powers(f: NonvanishingSolution, K: int = DEFAULT_KMAX) -> FormalPowerTable:
    """Formal powers from the two recursive integral chains."""
    if K < 1:
        raise ValueError("K must be >= 1")
    X, Xt = recursive_integrals(f, K)
    ff = f.f
    inv = 1.0 / ff
    phi, phi_r = [], []
    for k in range(K + 1):
        c = float(factorial(k))
        if k % 2 == 0:
            phi.append(c * ff * Xt[k])
            phi_r.append(c * inv * X[k])
        else:
            phi.append(c * ff * X[k])
            phi_r.append(c * inv * Xt[k])
    hat = [p * inv for p in phi]
    return FormalPowerTable(K, phi, phi_r, hat, X, Xt, f)


def r_operator(f: PiecewiseFn, g: PiecewiseFn) -> PiecewiseFn:
    """``R_f g = f int_0^x f^-2 int_0^s f g``."""
    return f * cumulative_integral(cumulative_integral(f * g), 1.0 / (f * f))


def formal_powers_by_operator(f: NonvanishingSolution, K: int) -> tuple[list, list]:
    """``phi_f`` and ``phi_1/f`` from the operator recursion (independent route)."""
    ff = f.f
    inv = 1.0 / ff
    phi = [ff, f.f1]
    phi_r = [inv, inv * cumulative_integral(ff * ff)]
    for k in range(2, K + 1):
        phi.append(k * (k - 1) * r_operator(ff, phi[k - 2]))
        phi_r.append(k * (k - 1) * r_operator(inv, phi_r[k - 2]))
    return phi[: K + 1], phi_r[: K + 1]

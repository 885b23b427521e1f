"""Lazily built chain of objects for one configured problem."""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .config import ProblemConfig, read_samples, samples_to_piecewise
from .nonvanishing import NonvanishingSolution, build_f
from .nsbf import NsbfCoeffs, NsbfSolver, coeffs_direct, coeffs_recursive
from .numerics import LegendreBasis, PiecewiseFn
from .potential import PotentialSpec, assemble_sigma, default_grid
from .powers import FormalPowerTable, formal_powers
from .spectral import BoundaryCondition, SpectralProblem

__all__ = ["Pipeline"]


def _constant_fn(c: complex):
    c = c.real if c.imag == 0 else c
    return lambda x: np.full(np.shape(x), c)


def _sample_source(spec: dict):
    if "constant" in spec:
        return _constant_fn(spec["constant"])
    if "file" in spec:
        xs, vs = read_samples(spec["file"])
        return np.concatenate(xs), np.concatenate(vs)
    return spec["x"], spec["values"]


class Pipeline:
    """Potential, non-vanishing solution, formal powers, coefficients, spectral problem."""

    def __init__(self, cfg: ProblemConfig, seed_override=None):
        self.cfg = cfg
        self.seed_override = seed_override

    @cached_property
    def spec(self) -> PotentialSpec:
        cfg = self.cfg
        reg = sig = None
        complex_data = any(a.imag != 0 for _, a in cfg.deltas)
        if cfg.regular is not None:
            reg = _sample_source(cfg.regular)
            complex_data |= _has_imag(reg, cfg.regular)
        if cfg.sigma is not None:
            if "file" in cfg.sigma:
                xs, vs = read_samples(cfg.sigma["file"])
                sig = samples_to_piecewise(xs, vs, cfg.quadrature)
                if abs(sig.grid.length - cfg.length) > 1e-12 * cfg.length:
                    raise ValueError("sigma samples do not span [0, length]")
                complex_data |= not sig.is_real()
            else:
                sig = (cfg.sigma["x"], cfg.sigma["values"])
                complex_data |= bool(np.iscomplexobj(sig[1]) and np.any(np.imag(sig[1])))
        real = (not complex_data) if cfg.real_valued is None else cfg.real_valued
        return PotentialSpec(
            cfg.length,
            regular_part=reg,
            deltas=tuple(cfg.deltas),
            direct_sigma=sig,
            real_valued=real,
            n_nodes=cfg.nodes,
            degree=cfg.quadrature,
        )

    @cached_property
    def sigma(self) -> PiecewiseFn:
        return assemble_sigma(self.spec, default_grid(self.spec))

    @cached_property
    def f(self) -> NonvanishingSolution:
        cfg = self.cfg
        override = None
        prefer_real = False
        if self.seed_override is not None:
            override = self.seed_override
        elif isinstance(cfg.constants, tuple):
            override = cfg.constants
        elif cfg.constants == "prefer_real":
            prefer_real = True
        return build_f(self.sigma, cfg.K_dirac, override, prefer_real=prefer_real)

    @cached_property
    def powers(self) -> FormalPowerTable:
        return formal_powers(self.f, self.cfg.K_powers)

    @cached_property
    def coeffs(self) -> NsbfCoeffs:
        return coeffs_recursive(self.f, self.cfg.M_nsbf)

    @cached_property
    def coeffs_direct(self) -> NsbfCoeffs:
        M = self.cfg.M_compare
        return coeffs_direct(self.powers, LegendreBasis(M), M)

    @cached_property
    def nsbf(self) -> NsbfSolver:
        return NsbfSolver(self.f, self.cfg.M_nsbf, self.coeffs)

    @cached_property
    def problem(self) -> SpectralProblem:
        cfg = self.cfg
        left = BoundaryCondition("left", cfg.left[0], cfg.left[1], cfg.left[2])
        right = BoundaryCondition("right", cfg.right[0], cfg.right[1], cfg.right[2])
        pr = SpectralProblem(self.f, left, right, cfg.K_powers, cfg.M_nsbf)
        # share the already built tables
        pr.__dict__["powers"] = self.powers
        pr.__dict__["nsbf"] = self.nsbf
        return pr

    def lambda_range(self) -> tuple[float, float]:
        if self.cfg.lambda_range is not None:
            return self.cfg.lambda_range
        # enough room for max_eigs free eigenvalues plus the potential's shift
        ell = self.cfg.length
        top = ((self.cfg.max_eigs + 0.5) * np.pi / ell) ** 2
        s = float(np.max(np.abs(self.sigma.values)))
        return -4.0 * (s * s + s / ell) - 1.0, top + 4.0 * s / ell


def _has_imag(src, spec) -> bool:
    if callable(src):
        return complex(spec["constant"]).imag != 0
    return bool(np.iscomplexobj(src[1]) and np.any(np.imag(src[1])))

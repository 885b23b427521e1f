"""Command line front end.

::

    dschrod <command> --config problem.json [--out DIR] [options]

Commands: build-f, powers, solve, coeffs, eval, kernel, spectrum, verify.
Each writes CSV tables and a JSON sidecar with metadata to ``--out``.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .config import ConfigError, load_config, read_samples, write_csv, write_json
from .nonvanishing import NonvanishingError, SeriesOverflowError
from .nsbf import impedance_kernel_values, kernel_reconstruct, nsbf_eval
from .numerics import PiecewiseFn
from .pipeline import Pipeline
from .potential import PotentialError
from .solutions import cauchy_solve, spps_eval
from .spectral import find_eigenvalues

__all__ = ["main", "run"]

COMMANDS = ("build-f", "powers", "solve", "coeffs", "eval", "kernel", "spectrum", "verify")


def _cplx_cols(name: str) -> list[str]:
    return [f"{name}_re", f"{name}_im"]


def _split(v) -> list[float]:
    v = complex(v)
    return [v.real, v.imag]


def _stride_idx(n: int, stride: int) -> np.ndarray:
    idx = np.arange(0, n, stride)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return idx


def _meta(pl: Pipeline, command: str, extra: dict | None = None) -> dict:
    f = pl.f
    data = {
        "command": command,
        "name": pl.cfg.name,
        "length": pl.cfg.length,
        "nodes": int(f.grid.size),
        "breakpoints": f.grid.breakpoints.tolist(),
        "constants": [list(_split(c)) for c in f.constants],
        "min_abs_f": f.min_abs_f,
        "dirac_terms": f.n_terms,
        "K_powers": pl.cfg.K_powers,
        "M_nsbf": pl.cfg.M_nsbf,
    }
    if extra:
        data.update(extra)
    return data


def cmd_build_f(pl: Pipeline, out: str, args) -> int:
    f = pl.f
    x = f.grid.x
    rows = []
    for i in range(x.size):
        rows.append(
            [x[i]]
            + _split(f.f.values[i])
            + _split(f.f_quasi.values[i])
            + _split(f.tau.values[i])
            + _split(f.sigma_f.values[i])
            + _split(f.f1.values[i])
        )
    header = ["x"] + sum((_cplx_cols(n) for n in ("f", "f_quasi", "tau", "sigma_f", "f1")), [])
    write_csv(os.path.join(out, "f.csv"), header, rows)
    sig = pl.sigma.values
    if np.iscomplexobj(sig):
        write_csv(os.path.join(out, "sigma.csv"), ["x", "value", "imag"], ([x[i], sig[i].real, sig[i].imag] for i in range(x.size)))
    else:
        write_csv(os.path.join(out, "sigma.csv"), ["x", "value"], ([x[i], sig[i]] for i in range(x.size)))
    write_json(os.path.join(out, "build-f.json"), _meta(pl, "build-f", {"dirac_tail": f.tail}))
    return 0


def cmd_powers(pl: Pipeline, out: str, args) -> int:
    P = pl.powers
    kout = pl.cfg.powers_out
    idx = _stride_idx(P.grid.size, pl.cfg.stride)
    x = P.grid.x
    header = ["x"] + sum((_cplx_cols(f"k{k}") for k in range(kout + 1)), [])
    for name, table in (("phi", P.phi), ("phi_hat", P.phi_hat), ("phi_recip", P.phi_recip)):
        rows = ([x[i]] + sum((_split(table[k].values[i]) for k in range(kout + 1)), []) for i in idx)
        write_csv(os.path.join(out, f"{name}.csv"), header, rows)
    write_json(os.path.join(out, "powers.json"), _meta(pl, "powers", {"powers_out": kout}))
    return 0


def _sampled(pl: Pipeline, spec: dict) -> PiecewiseFn:
    grid = pl.f.grid
    if "constant" in spec:
        return PiecewiseFn(grid, np.full(grid.size, spec["constant"]))
    if "file" in spec:
        xs, vs = read_samples(spec["file"])
        xv, vv = np.concatenate(xs), np.concatenate(vs)
    else:
        xv, vv = spec["x"], spec["values"]
    re = np.interp(grid.x, xv, np.real(vv))
    im = np.interp(grid.x, xv, np.imag(vv))
    return PiecewiseFn(grid, re + 1j * im if np.any(im) else re)


def cmd_solve(pl: Pipeline, out: str, args) -> int:
    ca = pl.cfg.cauchy or {"g": {"constant": 0.0}, "c0": 1.0, "c1": 0.0}
    g = _sampled(pl, ca["g"])
    y, d = cauchy_solve(pl.f, g, ca["c0"], ca["c1"], return_d_f=True)
    x = pl.f.grid.x
    idx = _stride_idx(x.size, pl.cfg.stride)
    rows = ([x[i]] + _split(y.values[i]) + _split(d.values[i]) for i in idx)
    write_csv(os.path.join(out, "cauchy.csv"), ["x"] + _cplx_cols("y") + _cplx_cols("d_f_y"), rows)
    write_json(os.path.join(out, "solve.json"), _meta(pl, "solve", {"c0": ca["c0"], "c1": ca["c1"]}))
    return 0


def cmd_coeffs(pl: Pipeline, out: str, args) -> int:
    co, cd = pl.coeffs, pl.coeffs_direct
    x = pl.f.grid.x
    idx = _stride_idx(x.size, pl.cfg.stride)
    real = np.isrealobj(co.sigma_array) and np.isrealobj(cd.sigma_array)
    if real:
        header = ["m", "x", "sigma_rec", "sigma_dir", "abs_diff"]
    else:
        header = ["m", "x", "sigma_rec_re", "sigma_rec_im", "sigma_dir_re", "sigma_dir_im", "abs_diff"]
    rows = []
    worst = 0.0
    for m in range(cd.M_max + 1):
        for i in idx:
            r, d = co.sigma_m[m].values[i], cd.sigma_m[m].values[i]
            diff = abs(r - d)
            worst = max(worst, diff / max(1.0, abs(d)))
            rows.append([m, x[i], r, d, diff] if real else [m, x[i], *_split(r), *_split(d), diff])
    write_csv(os.path.join(out, "coeffs.csv"), header, rows)
    flags = {str(k): v for k, v in sorted(cd.flags.items())}
    flags.update({str(k): v for k, v in sorted(co.flags.items())})
    write_json(
        os.path.join(out, "coeffs.json"),
        _meta(pl, "coeffs", {"M_compare": cd.M_max, "max_rel_disagreement": worst, "flags": flags}),
    )
    return 0


def cmd_eval(pl: Pipeline, out: str, args) -> int:
    P = pl.powers
    co = pl.coeffs
    x = P.grid.x
    idx = _stride_idx(x.size, pl.cfg.stride)
    header = ["rho_re", "rho_im", "x"] + sum((_cplx_cols(n) for n in ("C_spps", "S_spps", "e_spps", "C_nsbf", "S_nsbf")), []) + ["eps"]
    rows = []
    tails = {}
    for r in pl.cfg.rho:
        C = spps_eval(P, r, None, "cosine")
        S = spps_eval(P, r, None, "sine")
        E = spps_eval(P, r, None, "exponential")
        Cn, Sn, eps = nsbf_eval(co, r)
        tails[repr(r)] = [C.tail_bound, S.tail_bound]
        for i in idx:
            rows.append(
                _split(r)
                + [x[i]]
                + _split(C.values.values[i])
                + _split(S.values.values[i])
                + _split(E.values.values[i])
                + _split(Cn[i])
                + _split(Sn[i])
                + [eps[i]]
            )
    write_csv(os.path.join(out, "eval.csv"), header, rows)
    write_json(os.path.join(out, "eval.json"), _meta(pl, "eval", {"spps_tail_bounds": tails}))
    return 0


def cmd_kernel(pl: Pipeline, out: str, args) -> int:
    co = pl.coeffs
    M = pl.cfg.kernel_M if pl.cfg.kernel_M is not None else min(40, co.M_max)
    rows = []
    for xv in pl.cfg.kernel_x:
        t = np.linspace(-xv, xv, pl.cfg.kernel_t_points)
        K = kernel_reconstruct(co, xv, t, M)
        Kh = impedance_kernel_values(co, pl.f, xv, t, M)
        for j in range(t.size):
            rows.append([xv, t[j]] + _split(K[j]) + _split(Kh[j]))
    write_csv(os.path.join(out, "kernel.csv"), ["x", "t"] + _cplx_cols("K") + _cplx_cols("Khat"), rows)
    write_json(os.path.join(out, "kernel.json"), _meta(pl, "kernel", {"M": M}))
    return 0


def cmd_spectrum(pl: Pipeline, out: str, args) -> int:
    lo, hi = pl.lambda_range()
    spec = find_eigenvalues(pl.problem, lo, hi, pl.cfg.max_eigs)
    rows = [[n + 1, ep.lam, *_split(ep.rho), ep.residual, ep.index] for n, ep in enumerate(spec)]
    write_csv(os.path.join(out, "spectrum.csv"), ["n", "lambda", "rho_re", "rho_im", "residual", "zeros"], rows)
    x = pl.f.grid.x
    idx = _stride_idx(x.size, pl.cfg.stride)
    efs = [np.real(ep.eigenfunction.values) for ep in spec]
    write_csv(
        os.path.join(out, "eigenfunctions.csv"),
        ["x"] + [f"y{n + 1}" for n in range(len(efs))],
        ([x[i]] + [e[i] for e in efs] for i in idx),
    )
    write_json(
        os.path.join(out, "spectrum.json"),
        _meta(pl, "spectrum", {"lambda_range": [lo, hi], "truncated": spec.truncated, "clusters": spec.clusters}),
    )
    return 0


def cmd_verify(pl: Pipeline, out: str, args) -> int:
    from .checks import run_checks

    results = run_checks(pl)
    rows = [[r.name, r.measured, r.tolerance, "PASS" if r.passed else "FAIL"] for r in results]
    write_csv(os.path.join(out, "verify.csv"), ["check", "measured", "tolerance", "status"], rows)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    write_json(os.path.join(out, "verify.json"), _meta(pl, "verify", {"failed": failed}))
    return 0 if not failed else 1


HANDLERS = {
    "build-f": cmd_build_f,
    "powers": cmd_powers,
    "solve": cmd_solve,
    "coeffs": cmd_coeffs,
    "eval": cmd_eval,
    "kernel": cmd_kernel,
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
}

STAGE_ERRORS = (NonvanishingError, SeriesOverflowError, PotentialError, ArithmeticError, ValueError)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dschrod", description="Solutions and spectra of Schroedinger equations with distributional potentials.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="problem description (JSON)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--rho", help="comma separated spectral parameters, e.g. 1,2.5,3+1j")
    p.add_argument("--lambda-range", help="eigenvalue window a:b")
    p.add_argument("--max-eigs", type=int, help="maximum number of eigenvalues")
    p.add_argument("--seed-override", help="c1re,c1im,c2re,c2im for the non-vanishing solution")
    p.add_argument("--verbose", action="store_true")
    return p


def _apply_flags(cfg, args):
    if args.rho is not None:
        try:
            cfg.rho = [complex(s.strip().replace(" ", "")) for s in args.rho.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"--rho: cannot parse '{args.rho}'") from None
    if args.lambda_range is not None:
        try:
            a, b = (float(v) for v in args.lambda_range.split(":"))
        except ValueError:
            raise ConfigError(f"--lambda-range: expected a:b, got '{args.lambda_range}'") from None
        if not a < b:
            raise ConfigError("--lambda-range: need a < b")
        cfg.lambda_range = (a, b)
    if args.max_eigs is not None:
        if args.max_eigs < 1:
            raise ConfigError("--max-eigs: must be positive")
        cfg.max_eigs = args.max_eigs
    seed = None
    if args.seed_override is not None:
        try:
            v = [float(s) for s in args.seed_override.split(",")]
        except ValueError:
            v = []
        if len(v) != 4:
            raise ConfigError("--seed-override: expected c1re,c1im,c2re,c2im")
        seed = (complex(v[0], v[1]), complex(v[2], v[3]))
    return seed


def run(command: str, config_path: str, out: str = ".", argv_extra=None) -> int:
    """Programmatic entry point; returns the exit status."""
    args = ["--config", config_path, "--out", out] + list(argv_extra or [])
    return main([command] + args)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        seed = _apply_flags(cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {args.config}:1: {exc.strerror}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    pl = Pipeline(cfg, seed)
    t0 = time.perf_counter()
    try:
        status = HANDLERS[args.command](pl, args.out, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except STAGE_ERRORS as exc:
        print(f"error: stage {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    if args.verbose:
        print(f"{args.command}: {time.perf_counter() - t0:.3f} s", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())

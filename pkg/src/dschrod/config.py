"""JSON problem descriptions and CSV sample files.

A configuration looks like::

    {
      "length": 1.0,
      "grid": {"nodes": 2000, "quadrature": "default"},
      "potential": {
        "regular": {"constant": 4.0},
        "deltas": [{"x": 0.5, "alpha": 2.0}]
      },
      "constants": "auto",
      "truncation": {"K_powers": 100, "M_nsbf": 60},
      "boundary": {"left": {"a": 1, "b": 0}, "right": {"a": 1, "b": 0}},
      "rho": [0.5, 3.0],
      "lambda_range": [0, 1000],
      "max_eigs": 10
    }

Sampled functions are given inline as ``{"x": [...], "values": [...]}`` or as
``{"file": "q.csv"}`` with columns ``x, value[, imag]``; repeated ``x`` rows
mark a jump (left value first). Complex numbers are written as a number or as
``[re, im]``.
"""

from __future__ import annotations

import csv
import json
import os
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .numerics import Grid, PiecewiseFn

__all__ = ["ConfigError", "ProblemConfig", "load_config", "parse_config", "read_samples", "write_csv", "write_json"]

TOP_KEYS = {
    "length",
    "grid",
    "potential",
    "real_valued",
    "constants",
    "truncation",
    "boundary",
    "rho",
    "lambda_range",
    "max_eigs",
    "cauchy",
    "kernel",
    "output",
    "tolerances",
    "name",
}
POTENTIAL_KEYS = {"regular", "deltas", "sigma"}
GRID_KEYS = {"nodes", "quadrature"}
TRUNC_KEYS = {"K_dirac", "K_powers", "M_nsbf", "M_compare", "powers_out"}
BC_KEYS = {"a", "b", "convention"}
SAMPLE_KEYS = {"x", "values", "file", "constant"}
CAUCHY_KEYS = {"g", "c0", "c1"}
KERNEL_KEYS = {"x", "t_points", "M"}
OUTPUT_KEYS = {"stride"}

DEFAULT_TOLERANCES = {
    "wronskian": 1e-8,
    "equation_residual": 1e-7,
    "abel_vs_system": 1e-8,
    "a0": 1e-9,
    "exp_split": 1e-12,
    "darboux": 1e-7,
    "powers_routes": 1e-9,
    "goursat_rel": 1e-3,
    "coeff_routes": 1e-6,
    "mapping": 1e-5,
    "round_trip": 1e-8,
    "spps_vs_nsbf": 1e-6,
    "reflected_roots": 1e-8,
}


class ConfigError(ValueError):
    """Schema violation, reported as ``path:line: message``."""


def _line_of(text: str, token: str) -> int:
    pat = re.compile(r'"' + re.escape(token) + r'"\s*:')
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.search(line):
            return i
    return 1


def _as_complex(v: Any, where: str) -> complex:
    if isinstance(v, bool):
        raise TypeError(where)
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
        return complex(v[0], v[1])
    raise TypeError(where)


@dataclass
class ProblemConfig:
    """Validated configuration."""

    length: float
    nodes: int = 2000
    quadrature: str | int = "default"
    regular: Any = None
    deltas: list = field(default_factory=list)
    sigma: Any = None
    real_valued: bool | None = None
    constants: Any = "auto"
    K_dirac: int | None = None
    K_powers: int = 100
    M_nsbf: int = 60
    M_compare: int = 12
    powers_out: int = 10
    left: tuple = (1.0, 0.0, "sigma_quasi")
    right: tuple = (1.0, 0.0, "sigma_quasi")
    rho: list = field(default_factory=lambda: [0.0, 1.0, 5.0, 10.0])
    lambda_range: tuple | None = None
    max_eigs: int = 10
    cauchy: dict | None = None
    kernel_x: list = field(default_factory=lambda: [0.5])
    kernel_t_points: int = 21
    kernel_M: int | None = None
    stride: int = 100
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    name: str = "problem"
    base_dir: str = "."


def read_samples(path: str) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Read ``x, value[, imag]`` rows; repeated ``x`` splits segments.

    Returns per-segment abscissae and values.
    """
    xs, vs = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ConfigError(f"{path}:{lineno}: non-numeric entry") from None
            if len(vals) not in (2, 3):
                raise ConfigError(f"{path}:{lineno}: expected 2 or 3 columns")
            xs.append(vals[0])
            vs.append(complex(vals[1], vals[2] if len(vals) == 3 else 0.0))
    if len(xs) < 2:
        raise ConfigError(f"{path}:1: need at least two samples")
    x = np.array(xs)
    v = np.array(vs)
    if not np.any(v.imag):
        v = v.real
    cuts = [0]
    for i in range(1, x.size):
        if x[i] == x[i - 1]:
            cuts.append(i)
        elif x[i] < x[i - 1]:
            raise ConfigError(f"{path}:{i + 1}: abscissae must be nondecreasing")
    cuts.append(x.size)
    return [x[a:b] for a, b in zip(cuts[:-1], cuts[1:])], [v[a:b] for a, b in zip(cuts[:-1], cuts[1:])]


def samples_to_piecewise(xsegs, vsegs, quadrature="default") -> PiecewiseFn:
    grid = Grid(xsegs, degree=quadrature)
    return PiecewiseFn(grid, np.concatenate(vsegs))


def load_config(path: str) -> ProblemConfig:
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, path)


def parse_config(text: str, path: str = "<config>") -> ProblemConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None

    def fail(token: str, msg: str):
        raise ConfigError(f"{path}:{_line_of(text, token)}: {msg}")

    def check_keys(obj, allowed, where):
        if not isinstance(obj, dict):
            fail(where, f"'{where}' must be an object")
        for k in obj:
            if k not in allowed:
                fail(k, f"unknown key '{k}' in {where}")

    if not isinstance(raw, dict):
        raise ConfigError(f"{path}:1: top level must be an object")
    check_keys(raw, TOP_KEYS, "config")
    if "length" not in raw:
        raise ConfigError(f"{path}:1: missing required key 'length'")
    length = raw["length"]
    if not isinstance(length, (int, float)) or isinstance(length, bool) or not length > 0:
        fail("length", "'length' must be a positive number")
    cfg = ProblemConfig(length=float(length), base_dir=os.path.dirname(os.path.abspath(path)) if path != "<config>" else ".")
    cfg.name = str(raw.get("name", os.path.splitext(os.path.basename(path))[0]))

    grid = raw.get("grid", {})
    check_keys(grid, GRID_KEYS, "grid")
    if "nodes" in grid:
        n = grid["nodes"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 20:
            fail("nodes", "'nodes' must be an integer >= 20")
        cfg.nodes = n
    if "quadrature" in grid:
        q = grid["quadrature"]
        if not (q in ("default", "trapezoid", "simpson") or (isinstance(q, int) and not isinstance(q, bool) and 1 <= q <= 15)):
            fail("quadrature", "'quadrature' must be 'default', 'trapezoid', 'simpson' or a degree 1..15")
        cfg.quadrature = q

    pot = raw.get("potential", {})
    check_keys(pot, POTENTIAL_KEYS, "potential")
    if "sigma" in pot and ("regular" in pot or pot.get("deltas")):
        fail("sigma", "'sigma' excludes 'regular' and 'deltas'")
    for key in ("regular", "sigma"):
        if key in pot:
            spec = pot[key]
            check_keys(spec, SAMPLE_KEYS, key)
            if "file" in spec:
                if len(spec) != 1:
                    fail("file", "'file' cannot be combined with inline samples")
                fp = spec["file"]
                if not isinstance(fp, str):
                    fail("file", "'file' must be a path")
                full = fp if os.path.isabs(fp) else os.path.join(cfg.base_dir, fp)
                if not os.path.exists(full):
                    fail("file", f"sample file '{fp}' does not exist")
                spec = {"file": full}
            elif "constant" in spec:
                if len(spec) != 1:
                    fail("constant", "'constant' cannot be combined with samples")
                try:
                    spec = {"constant": _as_complex(spec["constant"], "constant")}
                except TypeError:
                    fail("constant", "'constant' must be a number or [re, im]")
                if key == "sigma":
                    fail("constant", "'sigma' must be sampled, not constant")
            else:
                if set(spec) != {"x", "values"}:
                    fail(key, f"'{key}' needs 'x' and 'values', 'file' or 'constant'")
                try:
                    xv = np.array(spec["x"], dtype=float)
                    vv = np.array([_as_complex(v, "values") for v in spec["values"]])
                except (TypeError, ValueError):
                    fail("values", "samples must be numbers")
                if xv.ndim != 1 or xv.shape != vv.shape or xv.size < 2:
                    fail("values", "'x' and 'values' must be equally long lists (>= 2)")
                spec = {"x": xv, "values": vv if np.any(vv.imag) else vv.real}
            setattr(cfg, key, spec)
    deltas = pot.get("deltas", [])
    if not isinstance(deltas, list):
        fail("deltas", "'deltas' must be a list")
    for d in deltas:
        try:
            if isinstance(d, dict):
                if set(d) != {"x", "alpha"}:
                    raise TypeError
                cfg.deltas.append((float(d["x"]), _as_complex(d["alpha"], "alpha")))
            else:
                cfg.deltas.append((float(d[0]), _as_complex(d[1], "alpha")))
        except (TypeError, ValueError, IndexError, KeyError):
            fail("deltas", "each delta is {'x': location, 'alpha': strength} or [location, strength]")

    if "real_valued" in raw:
        if not isinstance(raw["real_valued"], bool):
            fail("real_valued", "'real_valued' must be true or false")
        cfg.real_valued = raw["real_valued"]

    if "constants" in raw:
        c = raw["constants"]
        if c in ("auto", "prefer_real"):
            cfg.constants = c
        elif isinstance(c, list) and len(c) == 2:
            try:
                cfg.constants = (_as_complex(c[0], "c1"), _as_complex(c[1], "c2"))
            except TypeError:
                fail("constants", "'constants' entries must be numbers or [re, im]")
        else:
            fail("constants", "'constants' must be 'auto', 'prefer_real' or [c1, c2]")

    trunc = raw.get("truncation", {})
    check_keys(trunc, TRUNC_KEYS, "truncation")
    limits = {"K_dirac": (1, 400), "K_powers": (2, 160), "M_nsbf": (1, 150), "M_compare": (0, 40), "powers_out": (0, 160)}
    for k, v in trunc.items():
        lo, hi = limits[k]
        if v is None and k == "K_dirac":
            continue
        if not isinstance(v, int) or isinstance(v, bool) or not lo <= v <= hi:
            fail(k, f"'{k}' must be an integer in [{lo}, {hi}]")
        setattr(cfg, k, v)
    if cfg.M_compare > min(cfg.M_nsbf, cfg.K_powers):
        fail("M_compare", "'M_compare' exceeds M_nsbf or K_powers")
    if cfg.powers_out > cfg.K_powers:
        fail("powers_out", "'powers_out' exceeds K_powers")

    bnd = raw.get("boundary", {})
    check_keys(bnd, {"left", "right"}, "boundary")
    for side in ("left", "right"):
        if side in bnd:
            bc = bnd[side]
            check_keys(bc, BC_KEYS, side)
            try:
                a = _as_complex(bc.get("a", 1.0 if "b" not in bc else 0.0), "a")
                b = _as_complex(bc.get("b", 0.0), "b")
            except TypeError:
                fail(side, f"'{side}' coefficients must be numbers or [re, im]")
            conv = bc.get("convention", "sigma_quasi")
            if conv not in ("sigma_quasi", "d_f"):
                fail("convention", "'convention' must be 'sigma_quasi' or 'd_f'")
            if a == 0 and b == 0:
                fail(side, f"'{side}' coefficients must not both vanish")
            setattr(cfg, side, (a, b, conv))

    if "rho" in raw:
        r = raw["rho"]
        try:
            cfg.rho = [_as_complex(v, "rho") for v in r]
        except TypeError:
            fail("rho", "'rho' must be a list of numbers or [re, im]")
    if "lambda_range" in raw:
        lr = raw["lambda_range"]
        if not (isinstance(lr, list) and len(lr) == 2 and all(isinstance(v, (int, float)) for v in lr) and lr[0] < lr[1]):
            fail("lambda_range", "'lambda_range' must be [min, max] with min < max")
        cfg.lambda_range = (float(lr[0]), float(lr[1]))
    if "max_eigs" in raw:
        m = raw["max_eigs"]
        if not isinstance(m, int) or isinstance(m, bool) or m < 1:
            fail("max_eigs", "'max_eigs' must be a positive integer")
        cfg.max_eigs = m

    if "cauchy" in raw:
        ca = raw["cauchy"]
        check_keys(ca, CAUCHY_KEYS, "cauchy")
        g = ca.get("g", {"constant": 0.0})
        check_keys(g, SAMPLE_KEYS, "g")
        if "constant" in g:
            g = {"constant": _as_complex(g["constant"], "g")}
        elif "file" in g:
            full = g["file"] if os.path.isabs(g["file"]) else os.path.join(cfg.base_dir, g["file"])
            if not os.path.exists(full):
                fail("file", f"sample file '{g['file']}' does not exist")
            g = {"file": full}
        else:
            g = {"x": np.array(g["x"], dtype=float), "values": np.array([_as_complex(v, "g") for v in g["values"]])}
        try:
            cfg.cauchy = {"g": g, "c0": _as_complex(ca.get("c0", 0.0), "c0"), "c1": _as_complex(ca.get("c1", 0.0), "c1")}
        except TypeError:
            fail("cauchy", "'c0' and 'c1' must be numbers or [re, im]")

    if "kernel" in raw:
        kn = raw["kernel"]
        check_keys(kn, KERNEL_KEYS, "kernel")
        if "x" in kn:
            xs = kn["x"]
            if not isinstance(xs, list) or not all(isinstance(v, (int, float)) and 0 < v <= cfg.length for v in xs):
                fail("x", "'kernel.x' must list points in (0, length]")
            cfg.kernel_x = [float(v) for v in xs]
        if "t_points" in kn:
            tp = kn["t_points"]
            if not isinstance(tp, int) or tp < 2:
                fail("t_points", "'t_points' must be an integer >= 2")
            cfg.kernel_t_points = tp
        if "M" in kn:
            cfg.kernel_M = int(kn["M"])

    if "output" in raw:
        out = raw["output"]
        check_keys(out, OUTPUT_KEYS, "output")
        st = out.get("stride", cfg.stride)
        if not isinstance(st, int) or st < 1:
            fail("stride", "'stride' must be a positive integer")
        cfg.stride = st

    if "tolerances" in raw:
        tol = raw["tolerances"]
        check_keys(tol, set(DEFAULT_TOLERANCES), "tolerances")
        for k, v in tol.items():
            if not isinstance(v, (int, float)) or v <= 0:
                fail(k, f"tolerance '{k}' must be positive")
            cfg.tolerances[k] = float(v)

    for x, _ in cfg.deltas:
        if not 0 < x < cfg.length:
            fail("deltas", f"delta location {x} is not inside (0, {cfg.length:g})")
    locs = [x for x, _ in cfg.deltas]
    if any(b <= a for a, b in zip(locs[:-1], locs[1:])):
        fail("deltas", "delta locations must be strictly increasing")
    return cfg


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(path: str, header: list[str], rows) -> None:
    """Write rows of numbers with round-trip precision (deterministic)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else (str(v) if isinstance(v, (int, np.integer)) and not isinstance(v, bool) else _fmt(v)) for v in row])


def write_json(path: str, data: dict) -> None:
    def default(o):
        if isinstance(o, complex):
            return [o.real, o.imag]
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(type(o))

    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")

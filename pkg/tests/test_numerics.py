import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_legendre

from dschrod.numerics import (
    Grid,
    GridError,
    LegendreBasis,
    PiecewiseFn,
    cumulative_integral,
    integrate,
    legendre_eval,
    legendre_table,
    spherical_bessel,
    spherical_bessel_scaled,
)


def mp_spherical_jn(n, z):
    z = mpmath.mpmathify(z)
    if mpmath.re(z) < 0:
        # the half-integer Bessel form has a branch cut there; j_n is entire
        return (-1) ** n * mp_spherical_jn(n, -z)
    return complex(mpmath.sqrt(mpmath.pi / (2 * z)) * mpmath.besselj(n + mpmath.mpf(1) / 2, z))


# grid ----------------------------------------------------------------------


def test_uniform_grid_places_breakpoints():
    g = Grid.uniform(2.0, 401, [0.3, 1.1])
    assert g.n_segments == 3
    assert g.breakpoints.tolist() == [0.3, 1.1]
    assert g.x[0] == 0.0 and g.x[-1] == 2.0
    for seg in g.segments:
        assert seg.size >= 2
    # segments tile the interval
    assert g.segments[0][-1] == g.segments[1][0]


@pytest.mark.parametrize(
    "segs",
    [
        [[0.0]],
        [[0.0, 0.5], [0.6, 1.0]],
        [[0.1, 1.0]],
        [[0.0, 0.5, 0.4]],
    ],
)
def test_grid_rejects_malformed_segments(segs):
    with pytest.raises(GridError):
        Grid(segs)


def test_breakpoint_outside_interval_rejected():
    with pytest.raises(GridError):
        Grid.uniform(1.0, 100, [1.0])


def test_reflected_grid_is_mirror():
    g = Grid.uniform(1.0, 301, [0.3])
    r = g.reflect()
    assert np.allclose(r.x, 1.0 - g.x[::-1], atol=1e-15)
    assert r.breakpoints[0] == pytest.approx(0.7)


def test_piecewise_arithmetic_and_grid_mismatch():
    g = Grid.uniform(1.0, 101)
    u = PiecewiseFn.from_callable(g, np.sin)
    v = PiecewiseFn.from_callable(g, np.cos)
    w = u * u + v * v
    assert np.allclose(w.values, 1.0)
    other = PiecewiseFn(Grid.uniform(1.0, 51), np.zeros(Grid.uniform(1.0, 51).size))
    with pytest.raises(GridError):
        _ = u + other


def test_values_are_read_only():
    g = Grid.uniform(1.0, 50)
    u = PiecewiseFn(g, g.x)
    with pytest.raises(ValueError):
        u.values[0] = 3.0


def test_from_callable_takes_one_sided_limits_at_breakpoints():
    g = Grid.uniform(1.0, 101, [0.5])
    h = PiecewiseFn.from_callable(g, lambda x: (x > 0.5).astype(float))
    left, right = h.left_right()
    assert left[0] == 0.0 and right[0] == 1.0
    assert h.jumps()[0] == 1.0


def test_interpolation_is_exact_for_polynomials():
    g = Grid.uniform(1.0, 201)
    u = PiecewiseFn.from_callable(g, lambda x: x**5 - 2 * x**2)
    pts = np.array([0.013, 0.5001, 0.98765])
    assert np.allclose(u(pts), pts**5 - 2 * pts**2, atol=1e-13)


# cumulative integral -------------------------------------------------------


def test_integral_of_linear_function_is_exact():
    g = Grid.uniform(1.0, 2001)
    u = cumulative_integral(PiecewiseFn.from_callable(g, lambda x: 2 * x))
    assert np.max(np.abs(u.values - g.x**2)) < 1e-14


def test_integral_of_step_is_exact_piecewise_linear():
    g = Grid.uniform(1.0, 2001, [0.5])
    u = cumulative_integral(PiecewiseFn.from_callable(g, lambda x: 2.0 * (x > 0.5)))
    expected = 2 * np.maximum(g.x - 0.5, 0)
    assert np.max(np.abs(u.values - expected)) < 1e-14
    assert u.is_continuous()


def test_integral_of_tanh_squared():
    g = Grid.uniform(1.0, 2001)
    u = cumulative_integral(PiecewiseFn.from_callable(g, lambda x: np.tanh(x) ** 2))
    assert np.max(np.abs(u.values - (g.x - np.tanh(g.x)))) < 1e-8


def test_weighted_integral_matches_product():
    g = Grid.uniform(1.0, 501)
    a = PiecewiseFn.from_callable(g, np.exp)
    b = PiecewiseFn.from_callable(g, np.cos)
    assert np.allclose(cumulative_integral(a, b).values, cumulative_integral(a * b).values, atol=0)
    assert integrate(a) == pytest.approx(np.e - 1, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(-5, 5),
    st.floats(-5, 5),
    st.integers(0, 4),
    st.integers(0, 4),
)
def test_integral_is_linear(c1, c2, k1, k2):
    g = Grid.uniform(1.0, 201, [0.4])
    u = PiecewiseFn.from_callable(g, lambda x: np.cos(k1 * x) + (x > 0.4))
    v = PiecewiseFn.from_callable(g, lambda x: x**k2)
    lhs = cumulative_integral(c1 * u + c2 * v).values
    rhs = c1 * cumulative_integral(u).values + c2 * cumulative_integral(v).values
    assert np.allclose(lhs, rhs, atol=1e-12 * (1 + abs(c1) + abs(c2)))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.95))
def test_integral_is_additive_over_subintervals(cut):
    g = Grid.uniform(1.0, 401)
    u = PiecewiseFn.from_callable(g, lambda x: np.exp(-x) * np.sin(3 * x))
    F = cumulative_integral(u)
    # int_0^1 = int_0^c + int_c^1 evaluated on the same primitive
    Fc = F(cut)
    assert F.at_end() == pytest.approx(Fc + (F.at_end() - Fc), abs=1e-15)
    assert integrate(u) == pytest.approx(F.at_end(), abs=1e-14)


def test_refinement_order_of_trapezoid_rule():
    errs = []
    exact = np.sin(1.0)
    for n in (41, 81, 161, 321):
        g = Grid.uniform(1.0, n, degree="trapezoid")
        errs.append(abs(integrate(PiecewiseFn.from_callable(g, np.cos)) - exact))
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    assert min(ratios) >= 3.5


def test_default_rule_is_high_order():
    g = Grid.uniform(1.0, 101)
    assert abs(integrate(PiecewiseFn.from_callable(g, np.cos)) - np.sin(1.0)) < 1e-15


# Legendre -------------------------------------------------------------------


def test_legendre_examples():
    B = LegendreBasis(10)
    assert legendre_eval(B, 5, 1.0) == 1.0
    assert legendre_eval(B, 2, 0.5) == pytest.approx(-0.125, abs=1e-15)
    assert legendre_eval(B, 0, 0.3) == 1.0
    with pytest.raises(ValueError):
        legendre_eval(B, 11, 0.2)


def test_legendre_at_one_and_against_scipy():
    z = np.linspace(-1, 1, 101)
    P = legendre_table(40, z)
    assert np.max(np.abs(P[:, -1] - 1)) < 1e-12
    for m in (3, 17, 40):
        assert np.max(np.abs(P[m] - eval_legendre(m, z))) < 1e-12


def test_legendre_monomial_rows_are_exact():
    B = LegendreBasis(12)
    z = np.linspace(-1, 1, 7)
    for m in range(13):
        vals = np.polyval(B.coeff_rows[m][::-1], z)
        assert np.max(np.abs(vals - eval_legendre(m, z))) < 1e-12
        assert sum(B.exact_rows[m]) == 1


def test_legendre_recurrence_residual():
    z = np.linspace(-1, 1, 57)
    P = legendre_table(30, z)
    for m in range(1, 30):
        res = (m + 1) * P[m + 1] - (2 * m + 1) * z * P[m] + m * P[m - 1]
        assert np.max(np.abs(res)) < 1e-12


def test_legendre_orthogonality():
    z, w = np.polynomial.legendre.leggauss(40)
    P = legendre_table(30, z)
    gram = (P * w) @ P.T
    expected = np.diag(2.0 / (2 * np.arange(31) + 1))
    assert np.max(np.abs(gram - expected)) < 1e-13


# spherical Bessel --------------------------------------------------------------


def test_spherical_bessel_examples():
    assert abs(spherical_bessel(0, np.pi)[0]) < 1e-14
    at_zero = spherical_bessel(4, 0.0)
    assert at_zero.tolist() == [1.0, 0.0, 0.0, 0.0, 0.0]
    assert spherical_bessel(1, 1.0)[1] == pytest.approx(0.30116867893976, abs=1e-14)


@pytest.mark.parametrize(
    "z",
    [0.3, 0.99, 1.0, 2.5, 7.5, 19.0, 55.5, 100.0, 3 + 2j, 0.5 - 0.4j, 40 + 5j, 90 - 5j, -6.0],
)
def test_spherical_bessel_against_high_precision(z):
    nu_max = 30
    vals = spherical_bessel(nu_max, z)
    ref = np.array([mp_spherical_jn(n, z) for n in range(nu_max + 1)])
    # relative to the local size of the pair (j_n, j_{n+1}), which never vanishes
    env = np.sqrt(np.abs(ref[:-1]) ** 2 + np.abs(ref[1:]) ** 2)
    assert np.max(np.abs(vals[:-1] - ref[:-1]) / env) < 1e-12


def test_spherical_bessel_recurrence():
    z = np.concatenate([np.linspace(0.1, 100, 300), np.linspace(0.1, 50, 50) + 3j])
    J = spherical_bessel(40, z)
    for n in range(1, 40):
        res = J[n - 1] + J[n + 1] - (2 * n + 1) / z * J[n]
        scale = np.abs(J[n - 1]) + np.abs(J[n + 1]) + np.abs((2 * n + 1) / z * J[n])
        assert np.max(np.abs(res) / scale) < 1e-10


def test_scaled_bessel_is_continuous_across_series_switch():
    z = np.array([1.0 - 1e-12, 1.0 + 1e-12])
    s = spherical_bessel_scaled(20, z)
    assert np.max(np.abs(s[:, 0] - s[:, 1]) / np.abs(s[:, 0])) < 1e-12
    # j_n(z)/z^n -> 1/(2n+1)!! at the origin
    s0 = spherical_bessel_scaled(3, 0.0)
    assert np.allclose(s0, [1.0, 1 / 3, 1 / 15, 1 / 105], rtol=1e-15)


def test_spherical_bessel_shape_and_dtype():
    out = spherical_bessel(5, np.linspace(0.1, 2, 12).reshape(3, 4))
    assert out.shape == (6, 3, 4)
    assert np.isrealobj(out)
    assert np.iscomplexobj(spherical_bessel(2, 1 + 1j))

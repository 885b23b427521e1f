import numpy as np
import pytest
from scipy.integrate import quad

from dschrod.nonvanishing import build_f
from dschrod.nsbf import (
    NsbfSolver,
    coeffs_direct,
    coeffs_recursive,
    impedance_kernel_values,
    kernel_moment,
    kernel_norm_bound,
    kernel_norm_squared,
    kernel_reconstruct,
    legendre_monomial_moment,
    mapping_residual,
    nsbf_error_bound,
    nsbf_eval,
    parseval_tail,
    recip_solution,
    reflected_solutions,
)
from dschrod.numerics import LegendreBasis, legendre_table
from dschrod.potential import PotentialSpec
from dschrod.solutions import spps_eval

from conftest import DELTA_ALPHA, DELTA_X, constant
from oracles import shoot


def _rel_diff(a, b):
    return np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b)))


# coefficients -------------------------------------------------------------


def test_trivial_coefficients_vanish(free_f, free_powers):
    rec = coeffs_recursive(free_f, 40)
    direct = coeffs_direct(free_powers, LegendreBasis(12), 12)
    assert max(np.max(np.abs(a.values)) for a in rec.a) < 1e-10
    # the explicit sums are pure rounding noise here, which grows with m
    assert max(np.max(np.abs(a.values)) for a in direct.a) < 1e-10


def test_seed_coefficients(const_f, const_coeffs, const_powers):
    x = const_f.grid.x
    assert np.max(np.abs(const_coeffs.a[0].values - 0.5 * (const_f.f.values - 1))) < 1e-14
    d = coeffs_direct(const_powers, LegendreBasis(4), 4)
    a1 = 1.5 * (const_f.f1.values[1:] / x[1:] - 1)
    assert np.max(np.abs(d.a[1].values[1:] - a1)) < 1e-9
    assert np.max(np.abs(const_coeffs.sigma_m[1].values - 3 * (const_f.f1.values - x))) < 1e-14
    assert const_coeffs.a[5].values[0] == 0


@pytest.mark.parametrize("name", ["free", "const", "delta"])
def test_recursive_and_direct_routes_agree(request, name):
    f = request.getfixturevalue(f"{name}_f")
    P = request.getfixturevalue(f"{name}_powers")
    rec = coeffs_recursive(f, 12)
    direct = coeffs_direct(P, LegendreBasis(12), 12)
    for m in range(13):
        assert _rel_diff(rec.sigma_m[m].values, direct.sigma_m[m].values) < 1e-6


def test_alternative_denominator_reading_disagrees(const_f, const_powers):
    direct = coeffs_direct(const_powers, LegendreBasis(8), 8)
    other = coeffs_recursive(const_f, 8, denominator=lambda m: 2 * m - 1)
    worst = max(_rel_diff(other.sigma_m[m].values, direct.sigma_m[m].values) for m in range(2, 9))
    assert worst > 1e-3


def test_direct_formula_flags_cancellation(const_powers):
    d = coeffs_direct(const_powers, LegendreBasis(40), 40)
    assert all(m in d.flags for m in range(12, 41))
    assert not any(m < 8 for m in d.flags)


def test_domain_errors(const_coeffs, const_f):
    with pytest.raises(ValueError):
        nsbf_eval(const_coeffs, 1.0, N=61)
    with pytest.raises(ValueError):
        coeffs_recursive(const_f, -1)
    with pytest.raises(ValueError):
        kernel_reconstruct(const_coeffs, 0.0, [0.0])
    with pytest.raises(ValueError):
        impedance_kernel_values(const_coeffs, const_f, 0.0, [0.0])


def test_parseval_tail_decreases(const_coeffs, delta_coeffs):
    for co in (const_coeffs, delta_coeffs):
        tails = np.array([parseval_tail(co, N, [0.3, 0.7, 1.0]) for N in range(0, 40)])
        assert np.all(np.diff(tails, axis=0) <= 1e-15)
        assert np.all(np.isfinite(tails))


# evaluation ----------------------------------------------------------------


def test_trivial_potential_gives_trig(free_f):
    co = coeffs_recursive(free_f, 20)
    C, S, eps = nsbf_eval(co, 7.3)
    x = free_f.grid.x
    assert np.max(np.abs(C - np.cos(7.3 * x))) < 1e-14
    assert np.max(np.abs(S - np.sin(7.3 * x) / 7.3)) < 1e-14
    assert np.max(eps) == 0


@pytest.mark.parametrize("rho", [0.0, 1.0, 3.0, 10.0, 25.0, 50.0, 10 + 1j])
def test_constant_potential_closed_form(const_solver, rho):
    x = const_solver.f.grid.x
    w = np.sqrt(complex(rho) ** 2 - 4)
    C, S = const_solver.solutions(rho)
    Sref = np.sin(w * x) / w
    assert np.max(np.abs(C.values.values - np.cos(w * x))) < 1e-10
    assert np.max(np.abs(S.values.values - Sref)) < 1e-10
    dC = -w * np.sin(w * x) - 2 * np.tanh(2 * x) * np.cos(w * x)
    assert np.max(np.abs(C.d_f.values - dC)) < 1e-9 * max(1, abs(rho))


def test_error_law_against_closed_form(const_coeffs):
    x = const_coeffs.grid.x
    for rho in (3.0, 10.0, 20.0, 10 + 1j):
        w = np.sqrt(complex(rho) ** 2 - 4)
        for N in (2, 4, 8, 16, 30):
            C, _, eps = nsbf_eval(const_coeffs, rho, None, N)
            err = np.abs(C - np.cos(w * x))
            assert np.all(err <= nsbf_error_bound(eps, x, rho) + 1e-13)
    C, _, eps = nsbf_eval(const_coeffs, 10.0, None, 30)
    assert np.max(np.abs(C - np.cos(np.sqrt(96) * x))) < 1e-6


def test_spps_and_nsbf_agree_for_delta(delta_powers, delta_coeffs):
    worst = 0.0
    for rho in np.linspace(0, 20, 41):
        Cn, Sn, _ = nsbf_eval(delta_coeffs, rho)
        Cs = spps_eval(delta_powers, rho, None, "cosine").values.values
        Ss = spps_eval(delta_powers, rho, None, "sine").values.values
        worst = max(worst, np.max(np.abs(Cn - Cs)), np.max(np.abs(Sn - Ss)))
    assert worst < 1e-6


def test_endpoint_agrees_with_grid_values(delta_solver):
    C, S = delta_solver.solutions(8.0)
    c, dc, s, ds = delta_solver.endpoint(8.0)
    assert c == pytest.approx(C.values.values[-1], abs=1e-13)
    assert dc == pytest.approx(C.d_f.values[-1], abs=1e-12)
    assert s == pytest.approx(S.values.values[-1], abs=1e-13)
    assert ds == pytest.approx(S.d_f.values[-1], abs=1e-13)


def test_recip_solution_is_darboux_partner(delta_f):
    r = recip_solution(delta_f)
    assert np.max(np.abs(r.f.values * delta_f.f.values - 1)) < 1e-15
    assert np.max(np.abs(r.tau.values + delta_f.tau.values)) < 1e-14


# kernel --------------------------------------------------------------------


def test_trivial_kernel_vanishes(free_f):
    co = coeffs_recursive(free_f, 10)
    assert np.max(np.abs(kernel_reconstruct(co, 0.5, np.linspace(-0.5, 0.5, 9)))) < 1e-14
    assert np.max(np.abs(impedance_kernel_values(co, free_f, 0.5, [-0.5, 0.0, 0.5]))) < 1e-14


def test_kernel_zeroth_moment(const_f, const_coeffs, delta_f, delta_coeffs):
    for f, co in ((const_f, const_coeffs), (delta_f, delta_coeffs)):
        for x in (0.2, 0.5, 0.8, 1.0):
            mom = kernel_moment(co, x, np.ones_like)
            assert mom == pytest.approx(f.f(x, side="left") - 1, abs=1e-9)


def test_legendre_round_trip(delta_coeffs):
    z, w = np.polynomial.legendre.leggauss(200)
    for x in (0.3, 0.6, 1.0):
        a = delta_coeffs.a_at(x, 40)
        K = kernel_reconstruct(delta_coeffs, x, x * z, 40)
        P = legendre_table(40, z)
        back = (np.arange(41) + 0.5) * (P * (w * K * x)).sum(axis=1)
        assert np.max(np.abs(back - a)) < 1e-8


def test_monomial_moments_exact():
    for m in range(8):
        for k in range(10):
            ref = quad(lambda z: np.polynomial.legendre.Legendre.basis(m)(z) * z**k, -1, 1)[0]
            assert float(legendre_monomial_moment(m, k)) == pytest.approx(ref, abs=1e-13)


def test_mapping_property(const_coeffs, const_powers, delta_coeffs, delta_powers):
    for co, P in ((const_coeffs, const_powers), (delta_coeffs, delta_powers)):
        for k in range(7):
            assert mapping_residual(co, P, k, 40) < 1e-5


def test_mapping_property_by_quadrature(const_coeffs, const_powers):
    # independent of the exact moment formula
    for x in (0.4, 1.0):
        for k in range(5):
            val = x**k + kernel_moment(const_coeffs, x, lambda t: t**k, 40)
            assert val == pytest.approx(const_powers.phi[k](x), abs=1e-8)


def test_even_odd_parts_map_even_odd_powers(const_coeffs, const_powers):
    z, w = np.polynomial.legendre.leggauss(200)
    for x in (0.5, 1.0):
        t = x * z
        Kp = kernel_reconstruct(const_coeffs, x, t, 40, part="even")
        Km = kernel_reconstruct(const_coeffs, x, t, 40, part="odd")
        for k in range(6):
            even = x ** (2 * k) + x * np.sum(w * Kp * t ** (2 * k))
            assert abs(even - const_powers.phi[2 * k](x)) < 1e-7
            odd = x ** (2 * k + 1) + x * np.sum(w * Km * t ** (2 * k + 1))
            assert abs(odd - const_powers.phi[2 * k + 1](x)) < 1e-7
        assert np.allclose(Kp, kernel_reconstruct(const_coeffs, x, -t, 40, part="even"))
        assert np.allclose(Km, -kernel_reconstruct(const_coeffs, x, -t, 40, part="odd"))


def test_impedance_kernel_goursat_values(const_f, const_coeffs, delta_f, delta_coeffs):
    for f, co in ((const_f, const_coeffs), (delta_f, delta_coeffs)):
        for x in (0.3, 0.7, 1.0):
            lo, hi = impedance_kernel_values(co, f, x, [-x, x], 40)
            assert lo == 0
            target = 1 - 1 / f.f(x, side="left")
            assert abs(hi - target) <= 1e-3 * abs(target)
    hi = impedance_kernel_values(const_coeffs, const_f, 0.7, [0.7], 40)[0]
    target = 1 - 1 / np.cosh(1.4)
    assert abs(hi - target) <= 1e-4 * target


def test_impedance_kernel_derivative_is_scaled_kernel(const_f, const_coeffs):
    x = 0.8
    t = np.linspace(-0.7, 0.7, 9)
    h = 1e-5
    khat = lambda s: impedance_kernel_values(const_coeffs, const_f, x, s, 40)
    deriv = (khat(t + h) - khat(t - h)) / (2 * h)
    ref = kernel_reconstruct(const_coeffs, x, t, 40) / const_f.f(x)
    assert np.max(np.abs(deriv - ref)) < 1e-7


def test_trace_in_cesaro_mean(const_f, const_coeffs):
    for x in (0.3, 0.5, 0.7, 1.0):
        partial = np.cumsum(const_coeffs.a_at(x, 60)) / x
        cesaro = np.cumsum(partial) / np.arange(1, partial.size + 1)
        assert abs(cesaro[-1] - 0.5 * const_f.sigma_f(x)) < 5e-2


def test_kernel_norm_bound(free_f, const_f, const_coeffs, delta_f, delta_coeffs):
    for f, co in ((const_f, const_coeffs), (delta_f, delta_coeffs)):
        for M in (5, 20, 60):
            assert kernel_norm_squared(co, M) <= kernel_norm_bound(f)
    assert kernel_norm_squared(coeffs_recursive(free_f, 10)) < 1e-28
    assert kernel_norm_bound(free_f) == 0


# reflection ----------------------------------------------------------------


@pytest.mark.parametrize("method", ["nsbf", "spps"])
def test_reflected_solutions_trivial(free_f, method):
    x = free_f.grid.x
    rho = 4.5
    psi, theta = reflected_solutions(None, free_f, rho, M=20, method=method)
    assert np.max(np.abs(psi.values.values - np.cos(rho * (1 - x)))) < 1e-10
    assert np.max(np.abs(theta.values.values + np.sin(rho * (1 - x)) / rho)) < 1e-10
    assert psi.values.values[-1] == pytest.approx(1.0)
    assert theta.d_f.values[-1] == pytest.approx(1.0)


def test_reflect_twice_is_identity(delta_f, delta_solver):
    back = delta_f.reflected().reflected()
    C0, _ = delta_solver.solutions(6.0)
    C2, _ = NsbfSolver(back, 60).solutions(6.0)
    assert np.max(np.abs(C2.values.values - C0.values.values)) < 1e-9


def test_reflected_psi_against_shooting(delta_f):
    zero = lambda x: 0.0
    f_end = delta_f.f.values[-1]
    fp_end = delta_f.f_prime.values[-1]
    worst = 0.0
    for rho in np.linspace(0.0, 20.0, 11):
        psi, theta = reflected_solutions(None, delta_f, rho)
        # D_f psi(l) = 0 means psi'(l) = f'(l)/f(l)
        y0, _ = shoot(rho, zero, 1.0, fp_end / f_end, 1.0, 0.0, [(DELTA_X, DELTA_ALPHA)])
        worst = max(worst, abs(psi.values.values[0] - y0))
        t0, _ = shoot(rho, zero, 0.0, 1.0, 1.0, 0.0, [(DELTA_X, DELTA_ALPHA)])
        worst = max(worst, abs(theta.values.values[0] - t0))
    assert worst < 1e-7


def test_reflected_methods_agree(delta_f):
    for rho in (0.0, 5.0, 12.0):
        pn, tn = reflected_solutions(None, delta_f, rho, method="nsbf")
        ps, ts = reflected_solutions(None, delta_f, rho, method="spps")
        assert np.max(np.abs(pn.values.values - ps.values.values)) < 1e-7
        assert np.max(np.abs(tn.d_f.values - ts.d_f.values)) < 1e-7
    with pytest.raises(ValueError):
        reflected_solutions(None, delta_f, 1.0, method="euler")

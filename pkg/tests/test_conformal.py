import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from qlab import DomainError, make_params, shoot_delaunay
from qlab.conformal import (RadialProfile, delaunay_euclidean_profile, emden_fowler_forward,
                            emden_fowler_inverse, fit_asymptote, log_grid,
                            q_curvature_radial, read_profile_csv, sphere_area,
                            sphere_profile, weighted_norm, write_profile_csv)
from qlab.linearization import w0_minus


# -- gauges -------------------------------------------------------------------

def test_cylinder_profile_maps_to_one(p5):
    r = np.geomspace(1e-3, 10, 20)
    t, v = emden_fowler_forward(r ** -0.5, r, p5)
    assert np.allclose(v, 1.0, rtol=1e-15) and np.allclose(t, -np.log(r))


@given(st.integers(5, 9),
       st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=8),
       st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=8))
def test_gauge_round_trip(n, rs, us):
    p = make_params(n)
    m = min(len(rs), len(us))
    r, u = np.array(rs[:m]), np.array(us[:m])
    t, v = emden_fowler_forward(u, r, p)
    r2, u2 = emden_fowler_inverse(v, t, p)
    assert np.allclose(r2, r, rtol=1e-13, atol=0)
    assert np.allclose(u2, u, rtol=1e-13, atol=0)


@pytest.mark.parametrize("u,r", [(-1.0, 1.0), (1.0, 0.0), (np.nan, 1.0)])
def test_gauge_domain(p5, u, r):
    with pytest.raises(DomainError):
        emden_fowler_forward(np.array([u]), np.array([r]), p5)


def test_profile_validation():
    with pytest.raises(DomainError):
        RadialProfile([1.0, 2.0, 1.5], [1.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        RadialProfile([1.0], [1.0])


# -- Euclidean Delaunay profiles -------------------------------------------------

def test_cylinder_euclidean_profile(p5):
    sol = shoot_delaunay(p5.eps_bar, params=p5)
    prof = delaunay_euclidean_profile(sol, np.geomspace(1e-2, 1, 30))
    assert np.allclose(prof.u, p5.eps_bar * prof.r ** -0.5, rtol=1e-15)


def test_profile_range_and_log_periodicity(shot):
    sol = shot(0.5)
    prof = delaunay_euclidean_profile(sol)
    w = prof.u * prof.r ** 0.5
    assert np.min(w) >= sol.eps - 1e-12 and np.max(w) <= sol.v_max + 1e-12
    r = np.geomspace(1e-2, 1, 40)
    a = delaunay_euclidean_profile(sol, r)
    b = delaunay_euclidean_profile(sol, np.exp(-sol.period) * r)
    assert np.allclose(b.u * b.r ** 0.5, a.u * a.r ** 0.5, atol=1e-8)
    t, v = a.cylindrical(sol.params)
    assert np.allclose(v, sol.interpolant.v(t), atol=1e-14)


def test_profile_shift_is_dilation(shot):
    sol = shot(0.5)
    r = np.geomspace(1e-2, 1, 25)
    shift = 0.7
    a = delaunay_euclidean_profile(sol, r, shift=shift)
    big_r = math.exp(-shift)
    b = delaunay_euclidean_profile(sol, big_r * r)
    assert np.allclose(a.u, big_r ** 0.5 * b.u, rtol=1e-12)


# -- Q-curvature --------------------------------------------------------------------

def test_q_of_cylinder(p5):
    sol = shoot_delaunay(p5.eps_bar, params=p5)
    qc = q_curvature_radial(delaunay_euclidean_profile(sol), p5)
    assert qc.q_target == pytest.approx(13.125)
    # exact for the stencils up to rounding amplified by h^-4
    assert qc.max_rel_error < 1e-8


def test_q_of_sphere(p5):
    qc = q_curvature_radial(sphere_profile(log_grid(-3, 3, 32), p5), p5)
    assert qc.max_rel_error < 1e-4


@pytest.mark.parametrize("n", [6, 7, 8])
def test_q_other_dimensions(n):
    p = make_params(n)
    # the sphere profile varies faster in t for larger n
    qc = q_curvature_radial(sphere_profile(log_grid(-3, 3, 64), p), p)
    assert qc.max_rel_error < 1e-4
    sol = shoot_delaunay(0.6 * p.eps_bar, params=p)
    assert q_curvature_radial(delaunay_euclidean_profile(sol), p).max_rel_error < 1e-4


@pytest.mark.parametrize("frac", [0.5, 0.8])
def test_fourth_order_convergence(shot, p5, frac):
    sol = shot(frac)
    errs = [q_curvature_radial(delaunay_euclidean_profile(sol, log_grid(0, 2 * sol.period, m)),
                               p5).max_rel_error for m in (8, 16)]
    assert 10 < errs[0] / errs[1] < 24


def test_q_margin_and_spacing(shot, p5):
    sol = shot(0.5)
    r = log_grid(0, sol.period, 24)
    qc = q_curvature_radial(delaunay_euclidean_profile(sol, r), p5)
    assert qc.q.size == r.size - 6
    assert qc.h == pytest.approx(-np.log(r[1] / r[0]))


def test_q_guards(shot, p5):
    sol = shot(0.5)
    with pytest.raises(DomainError):
        q_curvature_radial(delaunay_euclidean_profile(sol, np.linspace(0.1, 1, 50)), p5)
    with pytest.raises(DomainError):
        q_curvature_radial(delaunay_euclidean_profile(sol, log_grid(0, 0.1, 10)[:5]), p5)
    with pytest.warns(RuntimeWarning, match="too coarse"):
        q_curvature_radial(delaunay_euclidean_profile(sol, log_grid(0, 20, 1)), p5)


# -- asymptote fitting -------------------------------------------------------------

@pytest.mark.parametrize("frac,shift", [(0.3, 0.7), (0.8, 2.0)])
def test_fit_exact_profile(shot, p5, frac, shift):
    sol = shot(frac)
    prof = delaunay_euclidean_profile(sol, log_grid(0, 3 * sol.period, 64), shift=shift)
    fit = fit_asymptote(prof, p5)
    expected = (shift + sol.period / 2) % sol.period - sol.period / 2
    assert abs(fit.eps - sol.eps) < 1e-6
    assert abs(fit.T - expected) < 1e-5
    assert fit.period == pytest.approx(sol.period, rel=1e-6)
    assert fit.to_dict()["eps"] == fit.eps


def test_fit_perturbed_profile(shot, p5):
    sol = shot(0.5)
    prof = delaunay_euclidean_profile(sol, log_grid(0, 3 * sol.period, 64), shift=-1.3)
    pert = RadialProfile(prof.r, prof.u + prof.r ** -0.5 * prof.r ** 1.2)
    fit = fit_asymptote(pert, p5)
    expected = (-1.3 + sol.period / 2) % sol.period - sol.period / 2
    assert abs(fit.eps - sol.eps) < 1e-3 and abs(fit.T - expected) < 1e-3


def test_fit_cylinder(p5):
    sol = shoot_delaunay(p5.eps_bar, params=p5)
    fit = fit_asymptote(delaunay_euclidean_profile(sol, log_grid(0, 15, 32)), p5)
    assert fit.eps == p5.eps_bar and fit.residual < 1e-12


def test_fit_sphere_is_rejected(p5):
    with pytest.raises(DomainError, match="not negative"):
        fit_asymptote(sphere_profile(log_grid(0, 15, 64), p5), p5)


# -- weighted norms ------------------------------------------------------------------

def test_sphere_area():
    assert sphere_area(5) == pytest.approx(8 * math.pi ** 2 / 3)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("gamma,status", [(0.5, "member"), (1.0, "borderline"),
                                          (1.5, "non-member")])
def test_exponential_classification(gamma, status):
    t = np.linspace(0, 60, 4000)
    wn = weighted_norm(np.exp(gamma * t), t, 1.0, 5)
    assert wn.status == status
    assert wn.exponent == pytest.approx(gamma, abs=0.02)


def test_necksize_field_weights(shot):
    w = w0_minus(shot(0.5), n_periods=20)
    assert weighted_norm(w.w[0], w.t, 0.2, 5).member
    assert weighted_norm(w.w[0], w.t, -0.2, 5).status == "non-member"


def test_weighted_norm_value():
    t = np.linspace(0, 10, 2001)
    wn = weighted_norm(np.ones_like(t), t, 0.5, 5)
    exact = math.sqrt(sphere_area(5) * (1 - math.exp(-10)))
    assert wn.value == pytest.approx(exact, rel=1e-9)
    with pytest.raises(DomainError):
        weighted_norm(np.ones(10), np.arange(10.0), 0.5, 5)


# -- profile files --------------------------------------------------------------------

def test_profile_csv_round_trip(shot, tmp_path):
    prof = delaunay_euclidean_profile(shot(0.5))
    path = tmp_path / "p.csv"
    write_profile_csv(prof, path)
    back = read_profile_csv(path)
    assert np.array_equal(back.r, prof.r) and np.array_equal(back.u, prof.u)
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    with pytest.raises(DomainError):
        read_profile_csv(bad)

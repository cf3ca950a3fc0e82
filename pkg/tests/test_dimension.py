from math import comb, pi, sqrt

from hypothesis import given, strategies as st
import pytest

from qlab import DomainError, make_params, sphere_eigenvalue


def test_n5_coefficients():
    p = make_params(5)
    assert p.p_exp == 9
    assert (p.c2, p.c0, p.c_nl, p.c_lin) == (6.5, 1.5625, 6.5625, 59.0625)
    assert p.q_target == pytest.approx(105 / 8)


def test_n5_constants_against_closed_forms():
    p = make_params(5)
    assert p.eps_bar == pytest.approx((5 / 21) ** 0.125, rel=1e-15)
    assert p.eps_bar == pytest.approx(0.835783587813, abs=1e-12)
    assert p.mu == pytest.approx((sqrt(369) - 13) / 4, rel=1e-15)
    assert p.mu == pytest.approx(1.552343, abs=1e-6)
    assert sqrt(p.mu) == pytest.approx(1.24593064738, abs=1e-11)
    assert p.cylinder_period == pytest.approx(2 * pi / sqrt(p.mu))
    assert p.cylinder_energy == pytest.approx(-0.4365838785, abs=1e-10)


@pytest.mark.parametrize("n", [4, 3, 0, -1])
def test_rejects_small_dimension(n):
    with pytest.raises(DomainError):
        make_params(n)


@pytest.mark.parametrize("bad", [5.0, "5", True])
def test_rejects_non_integer(bad):
    with pytest.raises(DomainError):
        make_params(bad)


@given(st.integers(5, 40))
def test_equilibrium_is_root(n):
    p = make_params(n)
    # eps_bar is the nonzero constant root of c0 v = c_nl v^p
    assert p.c0 * p.eps_bar == pytest.approx(p.c_nl * p.eps_bar ** p.p_exp, rel=1e-12)
    assert p.c_lin == pytest.approx(p.p_exp * p.c_nl)
    # mu is a root of x^2 + c2 x + (c0 - c_lin eps_bar^(8/(n-4)))
    k = p.c0 - p.c_lin * p.eps_bar ** p.lin_exp
    assert p.mu ** 2 + p.c2 * p.mu + k == pytest.approx(0.0, abs=1e-9 * p.c_lin)
    assert p.mu > 0


@pytest.mark.parametrize("j,expected", [(0, (0.0, 1)), (1, (4.0, 5)), (2, (10.0, 14)),
                                        (3, (18.0, 30))])
def test_sphere_eigenvalue_geometric(j, expected):
    assert sphere_eigenvalue(5, j) == expected


@pytest.mark.parametrize("j,expected", [(0, (0.0, 1)), (1, (5.0, 5)), (2, (12.0, 14))])
def test_sphere_eigenvalue_shifted(j, expected):
    assert sphere_eigenvalue(5, j, "shifted") == expected


@given(st.integers(5, 12), st.integers(0, 15))
def test_multiplicity_matches_harmonic_dimension(n, j):
    # dim of degree-j harmonics in R^n = dim P_j - dim P_{j-2}
    dim_p = lambda d: comb(n - 1 + d, d) if d >= 0 else 0
    assert sphere_eigenvalue(n, j)[1] == dim_p(j) - dim_p(j - 2)


def test_sphere_eigenvalue_errors():
    with pytest.raises(DomainError):
        sphere_eigenvalue(5, -1)
    with pytest.raises(DomainError):
        sphere_eigenvalue(5, 1, "other")

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rankone import asymptotics as asy
from rankone import kernels as kn
from rankone.space import rh2, rh3


def test_ball_factor():
    assert asy.ball_factor(1) == pytest.approx(2)
    assert asy.ball_factor(2) == pytest.approx(2 * math.pi)
    assert asy.ball_factor(3) == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_constant_integrand(n):
    assert asy.pi_integral_quadrature(n, 0.7, 1.3, lambda xi: 1.0, 0.2) == pytest.approx(
        asy.ball_factor(n) * 0.7**n / n, rel=1e-12)


def test_generic_point_frozen():
    # 2 int_0^0.5 (0.09 + r^2)^-0.8 dr, evaluated with mpmath at 30 digits
    want = 4.61247915762082414436994341997
    assert asy.pi_integral_quadrature(1, 0.5, 1.0, lambda xi: xi**-0.8, 0.3) == pytest.approx(want, rel=1e-12)
    assert asy.pi_integral_closed(1, 0.5, 1.0, 0.8, 0.3).total == pytest.approx(want, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 3), w=st.floats(0.05, 2.5), t=st.floats(0.01, 1.0), h=st.floats(0.3, 3.0))
def test_closed_form_matches_quadrature(n, w, t, h):
    delta = 0.5
    q = asy.pi_integral_quadrature(n, delta, h, lambda xi: xi ** (-w), t)
    c = asy.pi_integral_closed(n, delta, h, w, t).total
    assert abs(c - q) <= 1e-8 * abs(q)


@pytest.mark.parametrize("n,w,case", [(1, 0.5, "b"), (2, 1.0, "b"), (3, 0.5, "c"), (1, 0.8, "a"), (3, 1.5, "b")])
def test_case_dispatch(n, w, case):
    assert asy.pi_integral_closed(n, 0.5, 1.0, w, 0.1).case == case
    with pytest.raises(asy.DispatchError):
        asy.pi_integral_closed(n, 0.5, 1.0, w, 0.1, case="x" if case != "x" else "a")


def test_homogeneity():
    lam = 1.7
    n, w, delta, h, t = 2, 0.8, 0.6, 1.2, 0.2
    a = asy.pi_integral_quadrature(n, delta, h, lambda xi: xi ** (-w), t)
    b = asy.pi_integral_quadrature(n, delta, h * lam**2, lambda xi: xi ** (-w), lam * t)
    assert b == pytest.approx(lam ** (-2 * w) * a, rel=1e-10)


def test_leading_term_independent_of_delta():
    for n in (1, 2, 3):
        for w in (0.3, 0.5, 1.0, 1.5):
            a = asy.pi_integral_closed(n, 0.3, 1.1, w, 0.05).leading_coefficient
            b = asy.pi_integral_closed(n, 0.9, 1.1, w, 0.05).leading_coefficient
            assert a == b


def test_log_constant():
    # analytic part at t -> 0 in the logarithmic case
    n, delta, h = 2, 0.5, 1.3
    t = 1e-6
    r = asy.pi_integral_closed(n, delta, h, n / 2, t)
    assert r.analytic == pytest.approx(asy.pi_log_constant(n, delta, h), rel=1e-6)


def test_hyp2f1_strategies():
    ctx = asy.Hyp2F1Context(0.3, 0.7, 1.9)
    for z in (0.3, -0.9, -5.0):
        assert ctx(z) == pytest.approx(asy.hyp2f1_euler(0.3, 0.7, 1.9, z), rel=1e-11)
    assert ctx.strategy in ("scipy", "mpmath")
    v = asy.hyp2f1(0.3 + 0.2j, 0.7, 1.9, -2.0)
    with mp.workdps(30):
        assert complex(v) == pytest.approx(complex(mp.hyp2f1(0.3 + 0.2j, 0.7, 1.9, -2.0)), rel=1e-12)


def test_b0_coefficient():
    # phi = 1 near 0 contributes pi^{n/2} Gamma(nu) / Gamma(rho + nu) y^{-2nu}
    assert asy.b0_coefficient(rh2(), 0.3) == pytest.approx(4.554443087962172, rel=1e-12)
    assert asy.b0_coefficient(rh3(), 0.3) == pytest.approx(math.pi * math.gamma(0.3) / math.gamma(1.3))


def test_scaled_a_function():
    S = rh2()
    phi = kn.smooth_bump([0.1], 0.5)
    A, _ = asy.a_function(phi, S, 0.3, [0.05], 0.6)
    assert A[0] == pytest.approx(asy.a_function_scaled(phi, S, 0.3, 0.05, 0.6), rel=1e-9)


def test_scan_nonzero_bump():
    S = rh2()
    r = asy.support_scan(kn.smooth_bump([0.0], 0.5), S, 0.3, 0.5)
    assert r.verdict == "nonzero-at-0"
    assert r.exponent == pytest.approx(-0.6, abs=0.05)
    assert r.phi0_estimate == pytest.approx(1.0, rel=1e-3)


def test_scan_zero_at_origin():
    r = asy.support_scan(kn.smooth_bump([0.8], 0.5), rh2(), 0.3, 1.3)
    assert r.verdict == "zero-at-0"


def test_scan_linearity():
    S = rh2()
    f = kn.smooth_bump([0.1], 0.4)
    a = asy.support_scan(f, S, 0.3, 0.5).coefficient
    b = asy.support_scan(kn.smooth_bump([0.1], 0.4, 2.5), S, 0.3, 0.5).coefficient
    assert b == pytest.approx(2.5 * a, rel=1e-3)


def test_scan_rejects_half_integers():
    with pytest.raises(ValueError):
        asy.support_scan(kn.smooth_bump([0.0], 0.5), rh3(), 0.5, 0.5)


def test_delta_derivatives():
    S = rh2()
    ys = np.geomspace(1e-3, 1e-1, 8)
    v0 = [asy.delta_derivative_poisson((0,), S, [0.0], y, 0.3) for y in ys]
    assert np.allclose(v0, ys ** (-0.8))
    assert asy.delta_derivative_poisson((1,), S, [0.0], 0.1, 0.3) == pytest.approx(0, abs=1e-12)
    _, expo = asy.probe_growth((2,), S, 0.3, 0.5, ys)
    assert expo < 0

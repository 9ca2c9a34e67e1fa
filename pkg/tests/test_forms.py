import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad

from rankone import kernels as kn
from rankone import space as spc
from rankone.forms import (box_faces, cycle_integral, eta_fields, exterior_derivative_fd, hseg, integrate_form,
                           kernel_field, maass_selberg, omega_v, omega_w, power_field, reproducing_formula,
                           transform_field, vseg)


@pytest.fixture(params=["rh2", "rh3"])
def S(request):
    return spc.get_space(request.param)


def _pts(S, k=5, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(k, S.n)), rng.uniform(0.5, 2, k)


def test_eta_antisymmetric(S):
    f1 = kernel_field(S, np.full(S.n, 0.3), 0.2)
    f2 = power_field(S, 0.7)
    x, y = _pts(S)
    assert np.allclose(eta_fields(f1, f2, x, y), -eta_fields(f2, f1, x, y))
    assert np.allclose(eta_fields(f1, f1, x, y), 0)


def test_omega_v_same_kernel_vanishes(S):
    b = np.full(S.n, -0.4)
    x, y = _pts(S)
    assert np.allclose(omega_v(kernel_field(S, b, 0.3), b, x, y, 0.3), 0, atol=1e-14)


def test_omega_w_diagonal_raises(S):
    prof = kn.resolvent_profile(0.3, S)
    with pytest.raises(kn.SingularityError):
        omega_w(power_field(S, 0.3), prof, np.zeros(S.n), 1.0, np.zeros((1, S.n)), np.array([1.0]))


def test_d_eta_is_maass_selberg_density(S):
    f1 = kernel_field(S, np.full(S.n, 0.2), 0.35)
    f2 = power_field(S, 0.1 + 0.4j)
    x, y = np.full(S.n, 0.3), 1.2
    d = exterior_derivative_fd(lambda a, b: eta_fields(f1, f2, a[None], np.array([b]))[0], S, x, y, h=1e-3)
    ms = maass_selberg(f1, f2, x, y, h=1e-2)
    assert d == pytest.approx(ms, rel=1e-7)


@settings(max_examples=15, deadline=None)
@given(lo=st.floats(-1.5, -0.2), hi=st.floats(0.2, 1.5), y0=st.floats(0.3, 0.9), y1=st.floats(1.2, 3.0),
       b=st.floats(-2, 2), nu=st.floats(0.05, 0.9))
def test_closed_for_equal_eigenvalues(lo, hi, y0, y1, b, nu):
    # Stokes: boundary integral of eta(f1, f2) vanishes when both share the eigenvalue
    S = spc.rh2()
    f1 = kernel_field(S, [b], nu)
    f2 = power_field(S, nu)
    faces = box_faces(S, [lo], [hi], y0, y1)
    fn = lambda x, y: eta_fields(f1, f2, x, y)
    tot = sum(integrate_form(fn, F, 48) for F in faces)
    scale = sum(np.abs(integrate_form(fn, F, 48)) for F in faces)
    assert abs(tot) <= 1e-9 * scale


def test_stokes_with_volume_oracle():
    # boundary integral = (lam2 - lam1) * int f1 f2 dvol, volume term by scipy dblquad
    S = spc.rh2()
    nu1, nu2 = 0.3, 0.1
    f1 = kernel_field(S, [0.4], nu1)
    f2 = power_field(S, nu2)
    lo, hi, y0, y1 = -0.5, 0.8, 0.6, 1.7
    faces = box_faces(S, [lo], [hi], y0, y1)
    tot = sum(integrate_form(lambda x, y: eta_fields(f1, f2, x, y), F, 64) for F in faces)
    lam1, lam2 = S.rho**2 - nu1**2, S.rho**2 - nu2**2
    vol, _ = dblquad(lambda y, x: f1(np.array([x]), y) * f2(np.array([x]), y) / y**2, lo, hi, y0, y1,
                     epsabs=1e-13, epsrel=1e-12)
    assert tot == pytest.approx((lam2 - lam1) * vol, rel=1e-9)


def test_quadrature_order_doubling(S):
    f = kernel_field(S, np.full(S.n, 0.1), 0.4)
    prof = kn.resolvent_profile(0.4, S)
    faces = box_faces(S, np.full(S.n, -0.7), np.full(S.n, 0.9), 0.5, 2.0)
    fn = lambda x, y: omega_w(f, prof, np.full(S.n, 0.1), 1.0, x, y)
    a = sum(integrate_form(fn, F, 24) for F in faces)
    b = sum(integrate_form(fn, F, 48) for F in faces)
    assert abs(a - b) <= 1e-8 * abs(b)


@pytest.mark.parametrize("nu", [0.3, 0.2 + 0.8j])
def test_reproducing_formula_kernel(S, nu):
    h = kernel_field(S, np.full(S.n, 0.5), nu)
    prof = kn.resolvent_profile(nu, S)
    faces = box_faces(S, np.full(S.n, -0.8), np.full(S.n, 0.7), 0.5, 2.0)
    x0, y0 = np.full(S.n, 0.1), 1.1
    v = reproducing_formula(h, faces, x0, y0, nu, prof)
    want = S.measure_scale * kn.twonu_c(nu, S) * h(x0, y0)
    assert abs(v - want) <= 1e-4 * abs(want)
    out = reproducing_formula(h, faces, np.full(S.n, 1.5), 1.0, nu, prof)
    assert abs(out) <= 1e-4 * abs(want)


def test_reproducing_formula_bump():
    S = spc.rh2()
    nu = 0.35
    h = transform_field(kn.bump_function(S, [0.2], 0.5, N=60), nu)
    prof = kn.resolvent_profile(nu, S)
    faces = box_faces(S, [-0.9], [1.0], 0.4, 2.2)
    v = reproducing_formula(h, faces, [0.0], 0.9, nu, prof)
    want = S.measure_scale * kn.twonu_c(nu, S) * h([0.0], 0.9)
    assert abs(v - want) <= 1e-3 * abs(want)


def test_segment_orientation_flips_sign():
    S = spc.rh2()
    f = kernel_field(S, [0.3], 0.2)
    seg = hseg(S, -1.0, 1.0, 1.5)
    fn = lambda x, y: omega_v(f, None, x, y, 0.2)
    assert integrate_form(fn, seg.flipped()) == pytest.approx(-integrate_form(fn, seg))


def test_cycle_integral_reports_order():
    S = spc.rh2()
    f = kernel_field(S, [0.3], 0.2)
    v, info = cycle_integral(f, "r", vseg(S, 0.0, 0.5, 2.0), 0.2, b=np.array([1.2]))
    assert info["quad_err"] <= 1e-8

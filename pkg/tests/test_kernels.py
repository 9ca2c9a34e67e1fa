import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rankone import kernels as kn
from rankone import space as spc
from rankone.space import BoundaryPoint


@pytest.fixture(params=["rh2", "rh3"])
def S(request):
    return spc.get_space(request.param)


def test_J_identity(S):
    assert kn.factor_J(spc.identity(S), BoundaryPoint.at(np.full(S.n, 0.4))) == pytest.approx(1.0)


def test_J_of_a_at_infinity(S):
    assert kn.factor_J(spc.a_elem(S, 2.5), BoundaryPoint.inf()) == pytest.approx(2.5)


def test_J_closed_form_matches_decomposition(S):
    rng = np.random.default_rng(1)
    for _ in range(20):
        g = spc.random_element(S, rng)
        b = BoundaryPoint.at(rng.normal(size=S.n))
        assert kn.factor_J(g, b) == pytest.approx(kn.factor_J_decomp(g, b), rel=1e-9)


def test_tau_identity_and_homomorphism():
    S = spc.rh2()
    f = kn.sphere_grid(S, 64, func=lambda b: np.exp(-b[..., 0] ** 2))
    nu = 0.3 + 0.2j
    assert np.allclose(kn.tau_action(spc.identity(S), nu, f).values, f.values)
    g1 = spc.a_elem(S, 1.4) @ spc.n_elem(S, [0.3])
    g2 = spc.n_elem(S, [-0.2]) @ spc.a_elem(S, 0.8)
    lhs = kn.tau_action(g1 @ g2, nu, f).values
    rhs = kn.tau_action(g1, nu, kn.tau_action(g2, nu, f)).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-8 * np.max(np.abs(lhs))


def test_tau_of_one_is_kernel(S):
    # tau(g) 1 = r_nu(. ; g o) in the projective normalization
    nu = 0.25
    f = kn.sphere_grid(S, 16, func=lambda b: np.ones(b.shape[:-1]))
    g = spc.n_elem(S, np.full(S.n, 0.3)) @ spc.a_elem(S, 1.7)
    x, y = g.act(np.zeros(S.n), 1.0)
    tv = kn.tau_action(g, nu, f).values
    rv = kn.poisson_kernel(S, f.nodes, x, y, nu, model="prj")
    assert np.allclose(tv, rv, rtol=1e-10)


def test_line_kernel_on_axis(S):
    nu = 0.4
    y = 0.7
    v = kn.poisson_kernel(S, np.zeros(S.n), np.zeros(S.n), y, nu)
    assert v == pytest.approx(y ** -(S.rho + nu))


def test_prj_kernel_at_origin_is_one(S):
    b = np.random.default_rng(0).normal(size=(10, S.n))
    assert np.allclose(kn.poisson_kernel(S, b, np.zeros(S.n), 1.0, 0.3 + 1j, model="prj"), 1.0)


def test_measure_constant(S):
    assert kn.a0_numeric(S) == pytest.approx(1 / math.pi, rel=1e-10)


def test_c_function_closed_forms():
    # duplication formula reduces the Gamma quotient to classical forms
    for nu in (0.3, 0.1 + 0.7j, 1.6):
        assert kn.c_function(nu, spc.rh3()) == pytest.approx(1 / nu, rel=1e-12)
        want = complex(mp.gamma(nu) / (mp.sqrt(mp.pi) * mp.gamma(nu + 0.5)))
        assert complex(kn.c_function(nu, spc.rh2())) == pytest.approx(want, rel=1e-12)


def test_c_function_frozen():
    assert kn.c_function(0.3, spc.rh2()) == pytest.approx(1.4497242609597911, rel=1e-12)


def test_c_function_pole():
    with pytest.raises(kn.PoleError):
        kn.c_function(0.0, spc.rh2())
    assert np.isfinite(kn.twonu_c(0.0, spc.rh2()))


@settings(max_examples=25, deadline=None)
@given(re=st.floats(0.05, 2.0), im=st.floats(-3, 3))
def test_c_function_mpmath_agreement(re, im):
    nu = complex(re, im)
    for S in (spc.rh2(), spc.rh3()):
        assert complex(kn.c_function(nu, S)) == pytest.approx(kn.c_function_mp(nu, S), rel=1e-10)


@pytest.mark.parametrize("nu", [0.3, 0.2 + 0.9j, 0.0])
def test_profile_matches_closed_forms(S, nu):
    prof = kn.resolvent_profile(nu, S)
    r = np.array([0.05, 0.4, 1.0, 3.0, 8.0])
    assert np.allclose(prof(r), kn.q_oracle(nu, S, r), rtol=1e-8)


def test_q_symmetric_and_invariant(S):
    prof = kn.resolvent_profile(0.3, S)
    rng = np.random.default_rng(2)
    x1, y1 = rng.normal(size=S.n), 0.8
    x2, y2 = rng.normal(size=S.n), 1.9
    q = kn.q_kernel(prof, x1, y1, x2, y2)
    assert kn.q_kernel(prof, x2, y2, x1, y1) == pytest.approx(q, rel=1e-14)
    g = spc.random_element(S, rng)
    a, b = g.act(x1, y1)
    c, d = g.act(x2, y2)
    assert kn.q_kernel(prof, a, b, c, d) == pytest.approx(q, rel=1e-8)


def test_constant_data_gives_spherical_function(S):
    f = kn.sphere_grid(S, 64, func=lambda b: np.ones(b.shape[:-1]))
    assert kn.poisson_transform(f, np.zeros(S.n), 1.0, 0.4) == pytest.approx(1.0, rel=1e-12)


def test_scaled_transform_matches_direct():
    S = spc.rh2()
    phi = kn.smooth_bump([0.1], 0.5)
    y = 0.3
    direct = kn.poisson_transform_adaptive(phi, S, [0.0], y, 0.3, (-0.4, 0.6))
    scaled = kn.poisson_transform_scaled(phi, S, y, 0.3, 0.6, N=400)
    assert direct == pytest.approx(scaled, rel=1e-8)


@pytest.mark.parametrize("nu", [0.3, 0.25 + 0.5j])
def test_resolvent_identity(nu):
    S = spc.rh2()
    lam = S.rho**2 - nu**2
    R = 1.5
    f = lambda d: np.where(d < R, np.exp(1 - 1 / (1 - np.minimum((d / R) ** 2, 1 - 1e-16))), 0.0)

    def g(d, h=1e-4):
        fpp = (f(d + h) - 2 * f(d) + f(d - h)) / h**2
        return -(fpp + (f(d + h) - f(d - h)) / (2 * h) / np.tanh(d)) - lam * f(d)

    prof = kn.resolvent_profile(nu, S)
    for a in (0.2, 0.7, 1.2):
        v = kn.resolvent_integral_radial(prof, g, R, a)
        assert v / (S.measure_scale * kn.twonu_c(nu, S) * f(np.array(a))) == pytest.approx(1, rel=1e-6)

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from rankone import germs as gm
from rankone import kernels as kn
from rankone import space as spc

Y = gm.YSYM
NU = sp.Rational(3, 10)


def lb_oracle(space, expr, X):
    """Positive Laplace-Beltrami operator for q = 0 written out by hand: the metric is y^-2 times
    the identity, so Delta = -y^2 (sum d_i^2 + d_y^2) + (d - 2) y d_y."""
    coords = list(X) + [Y]
    d = len(coords)
    return -Y**2 * sum(sp.diff(expr, c, 2) for c in coords) + (d - 2) * Y * sp.diff(expr, Y)


@pytest.fixture(params=["rh2", "rh3"])
def S(request):
    return spc.get_space(request.param)


def test_metric_is_conformal(S):
    # justifies the hand-written oracle above
    G = spc.metric_matrix(S, np.full(S.n, 0.4), 1.7)
    assert np.allclose(G, np.eye(S.d) / 1.7**2)


def test_constant_data(S):
    g = gm.germ_from_boundary(sp.Integer(1), S, NU, 4)
    assert all(c == 0 for c in g.coefficients[1:])


def test_square_on_rh2():
    X = gm.xsyms(spc.rh2())
    g = gm.germ_from_boundary(X[0] ** 2, spc.rh2(), NU, 3)
    assert sp.simplify(g.coefficients[1] + 1 / (2 * (1 + NU))) == 0
    assert g.coefficients[2] == 0


def test_linear_on_rh3():
    X = gm.xsyms(spc.rh3())
    g = gm.germ_from_boundary(X[0], spc.rh3(), NU, 4)
    assert all(c == 0 for c in g.coefficients[1:])


def test_excluded_parameter():
    X = gm.xsyms(spc.rh2())
    with pytest.raises(gm.ExcludedParameter):
        gm.germ_from_boundary(X[0], spc.rh2(), -1, 2)


@settings(max_examples=20, deadline=None)
@given(coeffs=st.lists(st.integers(-5, 5), min_size=4, max_size=4), K=st.integers(2, 4))
def test_germ_solves_pde_symbolically(coeffs, K):
    # residual of y^s sum a_2k y^2k is O(y^{s + 2K + 2}) under the oracle operator
    for S in (spc.rh2(), spc.rh3()):
        X = gm.xsyms(S)
        phi = coeffs[0] + coeffs[1] * X[0] ** 2 + coeffs[2] * X[-1] ** 3 + coeffs[3] * sp.cos(X[0])
        g = gm.germ_from_boundary(phi, S, NU, K)
        rho = sp.Rational(S.p, 2)
        s = rho + NU
        B = sum(c * Y ** (2 * k) for k, c in enumerate(g.coefficients))
        lam = rho**2 - NU**2
        res = sp.expand(sp.simplify((lb_oracle(S, Y**s * B, X) - lam * Y**s * B) / Y**s))
        low = [res.coeff(Y, m) for m in range(0, 2 * K + 2)]
        assert all(sp.simplify(c) == 0 for c in low)


def test_restriction_at_zero_height(S):
    X = gm.xsyms(S)
    phi = sp.exp(X[0]) + X[-1] ** 2
    g = gm.germ_from_boundary(phi, S, NU, 3)
    x = np.full(S.n, 0.37)
    B, _ = gm.germ_evaluate(g, x, 0.0, analytic_only=True)
    assert B == pytest.approx(float(phi.subs({v: 0.37 for v in X})))


def test_residual_slope():
    S = spc.rh2()
    X = gm.xsyms(S)
    g = gm.germ_from_boundary(sp.cos(X[0]), S, 0.3, 1)
    u = gm.germ_field(g)
    ys = np.array([0.4, 0.3, 0.2, 0.1])
    res = [abs(spc.laplacian_apply(u, S, np.array([0.3]), y) - 0.16 * u(np.array([0.3]), np.array(y))) for y in ys]
    slope = np.polyfit(np.log(ys), np.log(res), 1)[0]
    assert slope == pytest.approx(0.8 + 2 + 2, abs=0.2)


def test_restrict_roundtrip(S):
    X = gm.xsyms(S)
    phi = sp.sin(X[0]) + 2
    g = gm.germ_from_boundary(phi, S, 0.3, 6)
    u = gm.germ_field(g)
    b = np.array([[0.2] * S.n, [-0.6] * S.n])
    vals, _ = gm.restrict(u, S, b, 0.3)
    want = np.sin(b[:, 0]) + 2
    assert np.allclose(vals, want, rtol=1e-8)


def test_lt_first_step_matches_coefficient():
    S = spc.rh2()
    X = gm.xsyms(S)
    H = gm.lt_iterate(X[0] ** 2, S, NU, 1)[-1]
    a = gm.germ_from_boundary(X[0] ** 2, S, NU, 2).coefficients
    assert sp.simplify(gm.y_part(H, 1) - a[1]) == 0
    assert gm.lt_iterate(X[0] ** 2, S, NU, 0)[0] == X[0] ** 2


def test_lt_identity_through_order_10(S):
    X = gm.xsyms(S)
    phi = sp.exp(X[0]) * (1 + X[-1] ** 2)
    a = gm.germ_from_boundary(phi, S, NU, 10).coefficients
    H = gm.lt_iterate(phi, S, NU, 10)[-1]
    for m in range(11):
        assert sp.simplify(gm.y_part(H, m) - a[m]) == 0


def test_transfer_factor():
    S = spc.rh2()
    x = np.array([[0.4], [1.3]])
    y = np.array([0.3, 0.7])
    assert np.allclose(gm.transfer_DS(x, y, 0.3, S), gm.transfer_DS_direct(x, y, 0.3, S), rtol=1e-12)
    assert gm.transfer_DS(np.zeros((1, 1)), np.array([1e-9]), 0.3, S)[0] == pytest.approx(1.0, abs=1e-8)


def test_polar_and_horospherical_restrictions():
    # for the resolvent profile around o: B-restriction = A-restriction times the transfer factor
    S = spc.rh2()
    P = kn.resolvent_profile(0.3, S)
    Q = lambda x, y: P(np.arccosh(spc.cosh_distance(np.zeros_like(x), np.ones_like(y), x, y)))
    b = np.array([[0.3], [1.0]])
    A, _ = gm.restrict(Q, S, b, 0.3, convention="A")
    B, _ = gm.restrict(Q, S, b, 0.3, convention="B")
    assert np.allclose(B, A * gm.transfer_DS(b, np.zeros(2), 0.3, S), rtol=1e-6)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rankone import space as spc

finite = st.floats(-3, 3, allow_nan=False)
heights = st.floats(0.05, 20, allow_nan=False)


@pytest.fixture(params=["rh2", "rh3"])
def S(request):
    return spc.get_space(request.param)


def test_rho_values():
    assert spc.rh2().rho == 0.5
    assert spc.rh3().rho == 1.0


def test_ch2_gated(monkeypatch):
    monkeypatch.delenv("RANKONE_ENABLE_CH2", raising=False)
    with pytest.raises(Exception):
        spc.get_space("ch2")
    assert spc.ch2(force=True).rho == 2.0


def test_identity_decomposition(S):
    n, t, k = spc.iwasawa_nak(spc.identity(S))
    assert t == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(n.m, np.eye(n.m.shape[0]))
    assert np.allclose(k.m, np.eye(k.m.shape[0]))


def test_a_element_decomposes_as_itself(S):
    n, t, k = spc.iwasawa_nak(spc.a_elem(S, 2.0))
    assert t == pytest.approx(2.0, rel=1e-14)
    assert np.allclose(k.m, np.eye(k.m.shape[0]), atol=1e-14)


def test_n_element_kan(S):
    g = spc.n_elem(S, np.full(S.n, 0.7))
    k, t, n = spc.iwasawa_kan(g)
    assert t == pytest.approx(1.0, abs=1e-13)
    assert np.allclose(n.m, g.m, atol=1e-13)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_random_recomposition(seed):
    rng = np.random.default_rng(seed)
    for S in (spc.rh2(), spc.rh3()):
        g = spc.random_element(S, rng)
        n, t, k = spc.iwasawa_nak(g)
        rec = n.m @ spc.a_elem(S, t).m @ k.m
        assert np.linalg.norm(rec - g.m) <= 1e-12 * max(1, np.linalg.norm(g.m))
        assert spc.tI(g) == pytest.approx(1 / spc.tJ(g.inv()), rel=1e-12)


def test_tJ_explicit_origin_column(S):
    assert spc.tJ_explicit(np.zeros(S.n), 0.4, S) == pytest.approx(1 / 0.4)


@settings(max_examples=50, deadline=None)
@given(x=st.lists(finite, min_size=2, max_size=2), y=heights)
def test_tJ_explicit_matches_decomposition(x, y):
    for S in (spc.rh2(), spc.rh3()):
        xx = np.array(x[: S.n])
        g = spc.w_elem(S) @ spc.n_elem(S, xx) @ spc.a_elem(S, y)
        assert spc.tJ(g) == pytest.approx(float(spc.tJ_explicit(xx, y, S)), rel=1e-9)


def test_tJ_explicit_taylor(S):
    x = np.full(S.n, 1e-3)
    v = spc.tJ_explicit(x, 1.0, S)
    assert v == pytest.approx(1 - S.c * np.sum(x * x), abs=1e-11)


def test_distance_zero_and_invariance(S):
    rng = np.random.default_rng(4)
    assert spc.distance(np.zeros(S.n), 1.3, np.zeros(S.n), 1.3) == pytest.approx(0, abs=1e-7)
    for _ in range(20):
        g = spc.random_element(S, rng)
        x1, y1 = rng.normal(size=S.n), float(np.exp(rng.normal()))
        x2, y2 = rng.normal(size=S.n), float(np.exp(rng.normal()))
        d = spc.distance(x1, y1, x2, y2)
        gx1, gy1 = g.act(x1, y1)
        gx2, gy2 = g.act(x2, y2)
        assert spc.distance(gx1, gy1, gx2, gy2) == pytest.approx(d, rel=1e-10, abs=1e-10)


def test_metric_on_rh2_axis():
    G = spc.metric_matrix(spc.rh2(), np.zeros(1), 2.0)
    assert np.allclose(G, np.diag([0.25, 0.25]))


@settings(max_examples=30, deadline=None)
@given(x=st.lists(finite, min_size=2, max_size=2), y=heights)
def test_metric_inverse(x, y):
    for S in (spc.rh2(), spc.rh3()):
        xx = np.array(x[: S.n])
        G = spc.metric_matrix(S, xx, y)
        assert np.allclose(spc.metric_inverse(S, xx, y) @ G, np.eye(S.d), atol=1e-9)


def test_laplacian_constant(S):
    assert spc.laplacian_apply(lambda x, y: np.ones_like(y), S, np.zeros(S.n), 1.0) == pytest.approx(0, abs=1e-9)


@pytest.mark.parametrize("nu", [0.3, 0.1 + 0.6j])
def test_laplacian_power(S, nu):
    s = S.rho + nu
    v = spc.laplacian_apply(lambda x, y: y**s, S, np.zeros(S.n), 1.3, h=0.01)
    assert v == pytest.approx((S.rho**2 - nu**2) * 1.3**s, rel=1e-8)


def test_negative_height_rejected(S):
    with pytest.raises(spc.DomainError):
        spc.tJ_explicit(np.zeros(S.n), -1.0, S)


def test_sl2_adapter_matches_moebius():
    S = spc.rh2()
    M = np.array([[2.0, 1.0], [3.0, 2.0]])
    g = spc.sl2_to_element(S, M)
    z = 0.3 + 0.8j
    w = (M[0, 0] * z + M[0, 1]) / (M[1, 0] * z + M[1, 1])
    x, y = g.act(np.array([z.real]), z.imag)
    assert x[0] == pytest.approx(w.real, abs=1e-12)
    assert float(y) == pytest.approx(w.imag, abs=1e-12)

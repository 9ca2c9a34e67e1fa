from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rankone import complex as cx

letters = st.sampled_from([1, -1, 2, -2])
words = st.lists(letters, max_size=8).map(lambda w: cx.reduce_word(w))


@pytest.fixture(scope="module")
def T():
    return cx.build_gamma2_tessellation(4.0)


@settings(max_examples=200, deadline=None)
@given(w=words)
def test_word_matrix_roundtrip(w):
    M = cx.word_matrix(w)
    assert M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0] == 1
    assert M[0, 0] % 4 == 1 and M[1, 1] % 4 == 1
    assert cx.word_of_matrix(M) == w


@settings(max_examples=100, deadline=None)
@given(a=words, b=words)
def test_word_group_law(a, b):
    assert np.array_equal(cx.word_matrix(cx.mul(a, b)), cx.word_matrix(a) @ cx.word_matrix(b))
    assert cx.mul(a, cx.inv(a)) == ()


def test_cusp_count_and_cells(T):
    assert cx.cusp_orbit_count(T) == 3
    assert len(T.cells[2]) == 4
    assert [len(T.cells[k]) for k in (0, 1, 2)] == [7, 9, 4]


def test_dd_zero(T):
    assert cx.check_dd_zero(T)
    assert cx.shared_face_signs(T)


def test_geometry(T):
    assert cx.check_geometry(T) == []
    for F in T.cells[2]:
        assert cx.loop_closes(T, F)
        assert cx.signed_area(T, F) > 0
    assert cx.every_face_bounds(T)
    assert cx.cusp_marker_check(T)
    assert cx.free_action_check(T)


def test_small_height_rejected():
    with pytest.raises(cx.TessellationError):
        cx.build_gamma2_tessellation(0.5)


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-20, 20), y=st.floats(0.01, 10))
def test_locate(x, y):
    z = complex(x, y)
    w, z0 = cx.locate(z)
    assert abs(z0.real) <= 1 + 1e-12
    assert abs(z0 - 0.5) >= 0.5 - 1e-9 and abs(z0 + 0.5) >= 0.5 - 1e-9
    assert abs(cx.moebius(cx.word_matrix(w), z0) - z) <= 1e-8 * max(1, abs(z))


def test_cusp_images():
    assert cx.cusp_image(np.eye(2, dtype=int), Fraction(0)) == 0
    assert cx.cusp_image(np.array([[0, -1], [1, 0]]), None) == 0
    assert cx.cusp_image(np.array([[1, 0], [1, 1]]), Fraction(-1)) is None


def test_trivial_module_dims(T):
    V = cx.trivial_module()
    assert cx.cochain_dims(T, V) == [7, 9, 4]
    assert cx.parabolic_cohomology_dims(T, V) == [1, 0, 1]
    assert cx.parabolic_cohomology_dims(cx.compact_subcomplex(T), V)[:2] == [1, 2]
    assert cx.free_group_h1(V) == 2
    assert cx.coinvariants_dim(V) == 1


@pytest.mark.parametrize("V,dims", [(cx.sym_module(1), [0, 0, 0]), (cx.permutation_module(), [1, 0, 1])])
def test_other_modules(T, V, dims):
    assert V.check_relations()
    assert cx.parabolic_cohomology_dims(T, V) == dims
    assert cx.cusp_resolution_dims(V) == dims[:2]


def test_coboundaries_compose_to_zero(T):
    for V in (cx.trivial_module(), cx.sym_module(1), cx.sym_module(2), cx.permutation_module()):
        d0 = cx.boundary_matrix(T, 1, V)
        d1 = cx.boundary_matrix(T, 2, V)
        assert (d1 * d0).is_zero_matrix


def test_rank_nullity(T):
    V = cx.sym_module(2)
    for i in (1, 2):
        M = cx.boundary_matrix(T, i, V)
        assert cx.exact_rank(M) + len(M.nullspace()) == M.shape[1]


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_cusp_homotopy(seed):
    rng = np.random.default_rng(seed)
    chain = {tuple(cx.random_cusp(rng) for _ in range(k)): int(rng.integers(-3, 4)) for k in (1, 2, 3)}
    assert cx.pb_check_homotopy(chain, "inf")


def test_lattice_unit_square():
    L = cx.build_lattice_tessellation(1, 0)
    assert len(L.faces) == 1
    assert cx.lattice_faces_tile(L)


@pytest.mark.parametrize("shear", [None, ((0, 2), (-3, 0))])
def test_lattice_heisenberg(shear):
    L = cx.build_lattice_tessellation(2, 1, shear)
    assert cx.lattice_faces_tile(L)


def test_lattice_rejects_non_integral_shear():
    with pytest.raises(Exception):
        cx.build_lattice_tessellation(2, 1, ((0, 0.5), (-1, 0)))


def test_export(T):
    text = cx.export_tessellation(T)
    lines = text.strip().splitlines()
    assert sum(1 for l in lines if l.startswith("cell")) == 20
    assert any("F0" in l for l in lines)

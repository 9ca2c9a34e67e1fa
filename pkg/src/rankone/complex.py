"""Gamma(2) tessellation of H^2 with horoball splitting, chain complexes, cohomology.

Gamma(2)/{+-1} is free on t = [[1,2],[0,1]] and t' = [[1,0],[2,1]]. Group
elements are reduced words in the letters 1 = t, -1 = t^{-1}, 2 = t',
-2 = t'^{-1}; their matrices are the lifts with a = d = 1 mod 4.

Cells of S* (S(Y) plus cusp horoball pieces plus the cusps themselves):

  0-cells  P1..P4 (free orbits) and cusps inf, 0, 1 (stabilizers t, t', t' t^{-1})
  1-cells  a, v, e_m1, L, e_0, e_1 (inside S(Y)); s_inf, s_0, s_1 (rays into cusps)
  2-cells  F0 (the compact part of the fundamental domain), Finf, F0c, F1c

Orientation: 2-cells are counterclockwise; every 1-cell is oriented as
recorded by its parameterization (start -> end). This fixed choice is
Gamma-invariant since orientations are transported by the group.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np
import sympy as sp

from .forms import CellPatch, hseg, ray, vseg
from .space import ModelSpace, rh2, sl2_to_element


class TessellationError(ValueError):
    pass


# ---------------------------------------------------------------- words

T = np.array([[1, 2], [0, 1]], dtype=object)
TP = np.array([[1, 0], [2, 1]], dtype=object)
LETTERS = {1: T, -1: np.array([[1, -2], [0, 1]], dtype=object),
           2: TP, -2: np.array([[1, 0], [-2, 1]], dtype=object)}
W = np.array([[0, -1], [1, 0]], dtype=object)
G1 = np.array([[1, -1], [1, 0]], dtype=object)

Word = tuple


def reduce_word(w: Iterable[int]) -> Word:
    out: list[int] = []
    for a in w:
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


def mul(a: Word, b: Word) -> Word:
    return reduce_word(a + b)


def inv(a: Word) -> Word:
    return tuple(-x for x in reversed(a))


def word_matrix(w: Word) -> np.ndarray:
    M = np.array([[1, 0], [0, 1]], dtype=object)
    for a in w:
        M = M.dot(LETTERS[a])
    return M


def normalize_lift(M) -> np.ndarray:
    """Representative of +-M with a = 1 mod 4 (the free-group lift)."""
    M = np.array(M, dtype=object)
    return M if M[0, 0] % 4 == 1 else -M


def word_of_matrix(M, max_len: int = 200) -> Word:
    """Reduced word of an element of the free lift, by Euclid descent on the first column."""
    M = normalize_lift(M)
    if (M[0, 0] - 1) % 4 or (M[1, 1] - 1) % 4 or M[0, 1] % 2 or M[1, 0] % 2:
        raise TessellationError("not in the free lift of Gamma(2)")
    prefix: list[int] = []
    for _ in range(max_len):
        a, c = int(M[0, 0]), int(M[1, 0])
        if c == 0:
            k = int(M[0, 1]) // 2
            prefix += [1 if k > 0 else -1] * abs(k)
            return reduce_word(prefix)
        if abs(a) > abs(c):
            k = round(a / (2 * c))
            M = np.array([[1, -2 * k], [0, 1]], dtype=object).dot(M)
            prefix += [1 if k > 0 else -1] * abs(k)
        else:
            k = round(c / (2 * a))
            M = np.array([[1, 0], [-2 * k, 1]], dtype=object).dot(M)
            prefix += [2 if k > 0 else -2] * abs(k)
    raise TessellationError("word decomposition did not terminate")


def moebius(M, z):
    a, b, c, d = (float(M[0, 0]), float(M[0, 1]), float(M[1, 0]), float(M[1, 1]))
    return (a * z + b) / (c * z + d)


def cusp_image(M, cusp) -> Fraction | None:
    """Action on P^1(Q); None is infinity."""
    a, b, c, d = (int(M[0, 0]), int(M[0, 1]), int(M[1, 0]), int(M[1, 1]))
    if cusp is None:
        return None if c == 0 else Fraction(a, c)
    num = a * cusp + b
    den = c * cusp + d
    return None if den == 0 else Fraction(num) / Fraction(den)


# ---------------------------------------------------------------- tessellation

CUSPS = {"c_inf": None, "c_0": Fraction(0), "c_1": Fraction(1)}
CUSP_STAB = {"c_inf": (1,), "c_0": (2,), "c_1": (2, -1)}


@dataclass
class Tessellation:
    Y: float
    cells: dict  # dim -> list of orbit names
    boundary: dict  # name -> list of (sign, word, name)
    shapes: dict  # name -> (sl2 matrix, shape kind, params)
    cusp_marker: dict  # name -> cusp name or None
    points: dict  # 0-cell name -> complex point (or cusp)

    def stabilizer(self, name) -> Word | None:
        return CUSP_STAB.get(name)

    def is_cusp(self, name) -> bool:
        return name in CUSPS

    def generating(self, dim: int):
        return list(self.cells[dim])


def _horo_arc_points(Y):
    """Corner points of the compact part of the fundamental domain."""
    D = 1 + Y * Y
    P1 = complex(-1, Y)
    P2 = complex(-1, 1 / Y)
    P3 = -1 + complex(1, Y) / D
    P4 = complex(-1, Y) / D
    return {"P1": P1, "P2": P2, "P3": P3, "P4": P4}


def build_gamma2_tessellation(Y: float = 4.0) -> Tessellation:
    if Y < 1:
        raise TessellationError("horoballs overlap for Y < 1")
    # disks at 0 and 1 of diameter 1/Y are disjoint iff 1/Y <= 1; Y >= 4 is the default
    tl, tpl, tpinv = (1,), (2,), (-2,)
    e = ()
    bd = {
        # 1-cells: boundary = end - start
        "a": [(1, tl, "P1"), (-1, e, "P1")],
        "v": [(1, e, "P1"), (-1, e, "P2")],
        "e_m1": [(1, e, "P3"), (-1, e, "P2")],
        "L": [(1, e, "P4"), (-1, e, "P3")],
        "e_0": [(1, tpl, "P4"), (-1, e, "P4")],
        "e_1": [(1, tl, "P2"), (-1, tpl, "P3")],
        "s_inf": [(1, e, "c_inf"), (-1, e, "P1")],
        "s_0": [(1, e, "c_0"), (-1, tpl, "P4")],
        "s_1": [(1, e, "c_1"), (-1, tl, "P3")],
        # 2-cells, counterclockwise
        "F0": [(-1, e, "a"), (-1, e, "v"), (1, e, "e_m1"), (1, e, "L"), (1, e, "e_0"),
               (-1, tpl, "L"), (1, e, "e_1"), (1, tl, "v")],
        "Finf": [(1, e, "a"), (1, tl, "s_inf"), (-1, e, "s_inf")],
        "F0c": [(-1, e, "e_0"), (1, tpinv, "s_0"), (-1, e, "s_0")],
        "F1c": [(-1, tl, "e_m1"), (-1, e, "e_1"), (1, (2, -1), "s_1"), (-1, e, "s_1")],
    }
    I2 = np.array([[1, 0], [0, 1]], dtype=object)
    tg1 = LETTERS[-1].dot(G1)
    Pts = _horo_arc_points(Y)
    wP3 = moebius(W, Pts["P3"])  # on Re z = 1
    shapes = {
        "a": (I2, "hseg", (-1.0, 1.0, Y)),
        "v": (I2, "vseg", (-1.0, 1 / Y, Y)),
        "e_m1": (tg1, "hseg", (0.0, -1.0, Y)),
        "L": (W, "vseg", (1.0, wP3.imag, Y)),
        "e_0": (W, "hseg", (1.0, -1.0, Y)),
        "e_1": (G1, "hseg", (1.0, 0.0, Y)),
        "s_inf": (I2, "ray", (-1.0, Y)),
        "s_0": (W, "ray", (-1.0, Y)),
        "s_1": (G1, "ray", (-1.0, Y)),
    }
    marker = {"s_inf": "c_inf", "s_0": "c_0", "s_1": "c_1", "Finf": "c_inf", "F0c": "c_0", "F1c": "c_1"}
    cells = {0: ["P1", "P2", "P3", "P4", "c_inf", "c_0", "c_1"],
             1: ["a", "v", "e_m1", "L", "e_0", "e_1", "s_inf", "s_0", "s_1"],
             2: ["F0", "Finf", "F0c", "F1c"]}
    points = dict(Pts)
    points.update(CUSPS)
    return Tessellation(Y, cells, bd, shapes, {k: marker.get(k) for k in bd}, points)


def compact_subcomplex(T: Tessellation) -> Tessellation:
    keep0 = ["P1", "P2", "P3", "P4"]
    keep1 = ["a", "v", "e_m1", "L", "e_0", "e_1"]
    keep2 = ["F0"]
    bd = {k: T.boundary[k] for k in keep1 + keep2}
    return Tessellation(T.Y, {0: keep0, 1: keep1, 2: keep2}, bd,
                        {k: T.shapes[k] for k in keep1}, {k: None for k in bd},
                        {k: T.points[k] for k in keep0})


def cusp_orbit_count(T: Tessellation) -> int:
    return sum(1 for c in T.cells[0] if T.is_cusp(c))


# --------------------------------------------------------- chains over Z[Gamma]


def _key(T: Tessellation, name: str, w: Word):
    if T.is_cusp(name):
        return (name, cusp_image(word_matrix(w), CUSPS[name]))
    return (name, reduce_word(w))


def chain_boundary(T: Tessellation, chain: dict) -> dict:
    """chain: {(name, word-or-cusp-key): coeff} -> boundary chain."""
    out: dict = {}
    for (name, w), c in chain.items():
        if c == 0:
            continue
        for s, g, sub in T.boundary[name]:
            k = _key(T, sub, mul(w, g))
            out[k] = out.get(k, 0) + s * c
    return {k: v for k, v in out.items() if v != 0}


def check_dd_zero(T: Tessellation) -> bool:
    for name in T.cells[2]:
        if chain_boundary(T, chain_boundary(T, {(name, ()): 1})):
            return False
    return True


def shared_face_signs(T: Tessellation, ball: int = 2) -> bool:
    """Every 1-cell gets opposite signs from the two 2-cells containing it."""
    inc: dict = {}
    for w in word_ball(ball + 2):
        for name in T.cells[2]:
            for (k, c) in chain_boundary(T, {(name, w): 1}).items():
                inc.setdefault(k, []).append(c)
    for w in word_ball(ball):
        for name in T.cells[1]:
            k = (name, w)
            if k in inc and sorted(inc[k]) != [-1, 1]:
                return False
    return True


def word_ball(r: int):
    out = [()]
    frontier = [()]
    for _ in range(r):
        nxt = []
        for w in frontier:
            for a in (1, -1, 2, -2):
                if w and w[-1] == -a:
                    continue
                nxt.append(w + (a,))
        out += nxt
        frontier = nxt
    return out


# ----------------------------------------------------------- geometric cells


def cell_patch(T: Tessellation, name: str, w: Word = (), space: ModelSpace | None = None,
               S: float = 25.0) -> CellPatch:
    space = space or rh2()
    M, kind, par = T.shapes[name]
    if kind == "hseg":
        base = hseg(space, *par, label=name)
    elif kind == "vseg":
        base = vseg(space, *par, label=name)
    else:
        base = ray(space, *par, S=S, cusp=T.cusp_marker[name], label=name)
    Mw = word_matrix(w).dot(M)
    g = sl2_to_element(space, np.array(Mw, float))
    patch = base.translate(g, label=f"{name}{list(w)}")
    if base.tail is not None:
        tp, tj = base.tail

        def tparam(u, tp=tp):
            x, y = tp(u)
            return g.act(x, y)

        def tjac(u, tp=tp, tj=tj):
            x, y = tp(u)
            return g.act_with_jacobian(x, y)[2] @ tj(u)

        from dataclasses import replace
        patch = replace(patch, tail=(tparam, tjac))
    return patch


def curve_endpoints(T: Tessellation, name: str, w: Word = ()):
    """Start and end of a 1-cell as complex numbers (cusps as boundary points)."""
    M, kind, par = T.shapes[name]
    Mw = word_matrix(w).dot(M)
    if kind == "hseg":
        z0, z1 = complex(par[0], par[2]), complex(par[1], par[2])
        return moebius(Mw, z0), moebius(Mw, z1)
    if kind == "vseg":
        z0, z1 = complex(par[0], par[1]), complex(par[0], par[2])
        return moebius(Mw, z0), moebius(Mw, z1)
    z0 = complex(par[0], par[1])
    c = Mw[1, 0]
    end = None if c == 0 else float(Mw[0, 0]) / float(c)
    return moebius(Mw, z0), end


def point_of(T: Tessellation, name: str, w: Word):
    M = word_matrix(w)
    if T.is_cusp(name):
        ci = cusp_image(M, CUSPS[name])
        return None if ci is None else float(ci)
    return moebius(M, T.points[name])


def check_geometry(T: Tessellation, tol: float = 1e-10) -> list:
    """Verify that recorded boundaries of 1-cells match the parameterized endpoints."""
    bad = []
    for name in T.cells[1]:
        start, end = curve_endpoints(T, name)
        (s1, w1, n1), (s0, w0, n0) = T.boundary[name]
        pe, ps = point_of(T, n1, w1), point_of(T, n0, w0)
        for got, want in ((end, pe), (start, ps)):
            if (got is None) != (want is None) or (got is not None and abs(got - want) > tol):
                bad.append((name, got, want))
    return bad


def loop_closes(T: Tessellation, name2: str, tol: float = 1e-10) -> bool:
    """The signed boundary of a 2-cell traverses a closed path."""
    segs = []
    for s, w, n in T.boundary[name2]:
        a, b = curve_endpoints(T, n, w)
        segs.append((a, b) if s > 0 else (b, a))
    for (a0, b0), (a1, b1) in zip(segs, segs[1:] + segs[:1]):
        if (b0 is None) != (a1 is None):
            return False
        if b0 is not None and abs(b0 - a1) > tol:
            return False
    return True


def signed_area(T: Tessellation, name2: str, n: int = 400, S: float = 3.0) -> float:
    """Euclidean oriented area (1/2) int x dy - y dx of the (truncated) boundary loop."""
    tot = 0.0
    for s, w, nm in T.boundary[name2]:
        P = cell_patch(T, nm, w, S=S)
        u = ((np.arange(n) + 0.5) / n)[:, None]
        x, y = P.param(u)
        J = P.jac(u)
        dx, dy = J[:, 0, 0], J[:, 1, 0]
        tot += s * P.orientation * np.sum(x[:, 0] * dy - y * dx) / n / 2
    return tot


def every_face_bounds(T: Tessellation) -> bool:
    used = {n for X in T.cells[2] for _, _, n in T.boundary[X]}
    return set(T.cells[1]) <= used


def horoball_of(z: complex, Y: float):
    """Cusp orbit name whose standard horoball (height Y) contains z, or None (Gamma(2) translates
    are found by reducing z into the strip and through the three representative disks)."""
    hits = []
    if z.imag > Y:
        hits.append("c_inf")
    for name, c in (("c_0", 0.0), ("c_1", 1.0), ("c_1", -1.0)):
        if abs(z - complex(c, 1 / (2 * Y))) < 1 / (2 * Y):
            hits.append(name)
    return hits


def cusp_marker_check(T: Tessellation, S: float = 3.0) -> bool:
    """Cells outside S(Y) meet exactly one horoball, the one named by their marker."""
    for name in T.cells[1]:
        P = cell_patch(T, name, S=S)
        x, y = P.param(np.array([[0.5]]))
        h = horoball_of(complex(x[0, 0], y[0]), T.Y)
        mark = T.cusp_marker.get(name)
        if (mark is None and h) or (mark is not None and h != [mark]):
            return False
    return True


def free_action_check(T: Tessellation, ball: int = 3, tol: float = 1e-9) -> bool:
    """No nontrivial word in the ball fixes the midpoint of a cell of dimension >= 1."""
    mids = []
    for name in T.cells[1]:
        P = cell_patch(T, name, S=1.0)
        x, y = P.param(np.array([[0.5]]))
        mids.append(complex(x[0, 0], y[0]))
    for w in word_ball(ball)[1:]:
        M = word_matrix(w)
        for z in mids:
            if abs(moebius(M, z) - z) < tol:
                return False
    return True


def locate(z: complex, max_steps: int = 500):
    """(word, z0) with z = word . z0 and z0 in the closed fundamental domain
    -1 <= Re z0 <= 1, |z0 -+ 1/2| >= 1/2."""
    if z.imag <= 0:
        raise TessellationError("point not in the upper half plane")
    w: list[int] = []
    for _ in range(max_steps):
        k = int(np.floor((z.real + 1) / 2))
        if k:
            z = z - 2 * k
            w += [1 if k > 0 else -1] * abs(k)
        if abs(z - 0.5) < 0.5:
            z = z / (1 - 2 * z)
            w.append(2)
        elif abs(z + 0.5) < 0.5:
            z = z / (1 + 2 * z)
            w.append(-2)
        else:
            return reduce_word(w), z
    raise TessellationError("reduction did not terminate")


def inside_F0(z: complex, Y: float) -> bool:
    return -1 < z.real < 1 and abs(z + 0.5) > 0.5 and abs(z - 0.5) > 0.5 and z.imag < Y and \
        abs(z - complex(-1, 1 / (2 * Y))) > 1 / (2 * Y) and abs(z - complex(1, 1 / (2 * Y))) > 1 / (2 * Y) and \
        abs(z - complex(0, 1 / (2 * Y))) > 1 / (2 * Y)


# -------------------------------------------------------------- modules


@dataclass(frozen=True, eq=False)
class GroupModule:
    tag: str
    dim: int
    gens: dict  # letter (1 or 2) -> sympy Matrix with rational entries

    def mat(self, w: Word) -> sp.Matrix:
        M = sp.eye(self.dim)
        for a in w:
            g = self.gens[abs(a)]
            M = M * (g if a > 0 else g.inv())
        return M

    def check_relations(self) -> bool:
        # free group: only invertibility; the cusp relation pi_1 t = t' holds as words
        ok = all(g.det() != 0 for g in self.gens.values())
        return ok and self.mat(mul((2, -1), (1,))) == self.mat((2,))


def trivial_module() -> GroupModule:
    return GroupModule("trivial", 1, {1: sp.Matrix([[1]]), 2: sp.Matrix([[1]])})


def sym_module(k: int = 1) -> GroupModule:
    """Sym^k of the standard representation of the free lift."""
    x, y = sp.symbols("X Y")

    def symk(M):
        a, b, c, d = [sp.Integer(int(v)) for v in (M[0, 0], M[0, 1], M[1, 0], M[1, 1])]
        mons = [x ** (k - i) * y**i for i in range(k + 1)]
        sub = {x: a * x + c * y, y: b * x + d * y}
        cols = []
        for m in mons:
            e = sp.Poly(sp.expand(m.subs(sub, simultaneous=True)), x, y)
            cols.append([e.coeff_monomial(mm) for mm in mons])
        return sp.Matrix(cols).T

    return GroupModule(f"sym{k}", k + 1, {1: symk(T), 2: symk(TP)})


def permutation_module(perm_t=(1, 0, 2), perm_tp=(0, 2, 1)) -> GroupModule:
    def P(p):
        n = len(p)
        M = sp.zeros(n, n)
        for i, j in enumerate(p):
            M[j, i] = 1
        return M

    return GroupModule("perm", len(perm_t), {1: P(perm_t), 2: P(perm_tp)})


def invariants_basis(V: GroupModule, words) -> sp.Matrix:
    A = sp.Matrix.vstack(*[V.mat(w) - sp.eye(V.dim) for w in words])
    ns = A.nullspace()
    return sp.Matrix.hstack(*ns) if ns else sp.zeros(V.dim, 0)


def _block(V: GroupModule, terms, basis_in: sp.Matrix | None):
    M = sp.zeros(V.dim, V.dim)
    for s, w in terms:
        M += s * V.mat(w)
    return M if basis_in is None else M * basis_in


def boundary_matrix(T: Tessellation, i: int, V: GroupModule) -> sp.Matrix:
    """Coboundary d^{i-1}: C^{i-1} -> C^i on equivariant cochains with values in V.

    Cochain on an orbit X is c(X) in V (V^{Gamma_X} for cusps, in the basis of
    invariants). (d c)(X) = c(dX) = sum eps rho(gamma) c(Y).
    """
    src = T.cells[i - 1]
    tgt = T.cells[i]
    bases = {n: (invariants_basis(V, [T.stabilizer(n)]) if T.is_cusp(n) else None) for n in src}
    widths = {n: (bases[n].shape[1] if bases[n] is not None else V.dim) for n in src}
    rows = []
    for X in tgt:
        blocks = []
        for Yn in src:
            terms = [(s, w) for s, w, nm in T.boundary[X] if nm == Yn]
            if terms:
                blocks.append(_block(V, terms, bases[Yn]))
            else:
                blocks.append(sp.zeros(V.dim, widths[Yn]))
        rows.append(sp.Matrix.hstack(*blocks))
    return sp.Matrix.vstack(*rows)


def cochain_dims(T: Tessellation, V: GroupModule):
    out = []
    for i in sorted(T.cells):
        tot = 0
        for n in T.cells[i]:
            tot += invariants_basis(V, [T.stabilizer(n)]).shape[1] if T.is_cusp(n) else V.dim
        out.append(tot)
    return out


def exact_rank(M: sp.Matrix) -> int:
    if M.shape[0] == 0 or M.shape[1] == 0:
        return 0
    return M.rank(iszerofunc=lambda e: e == 0)


def parabolic_cohomology_dims(T: Tessellation, V: GroupModule) -> list:
    dims = cochain_dims(T, V)
    top = max(T.cells)
    ranks = {i: exact_rank(boundary_matrix(T, i, V)) for i in range(1, top + 1)}
    out = []
    for i in range(top + 1):
        kern = dims[i] - ranks.get(i + 1, 0)
        out.append(kern - ranks.get(i, 0))
    return out


# ----------------------------------------------------- cusp resolution F^pb

CUSP_LIST = [("c_inf", None, (1,)), ("c_0", Fraction(0), (2,)), ("c_1", Fraction(1), (2, -1))]


def cusp_resolution_dims(V: GroupModule) -> list:
    """Degrees 0 and 1 of parabolic cohomology from the cusp resolution.

    Degree 0: V^Gamma. Degree 1: parabolic cocycles of the free group (values
    u = phi(t), v = phi(t') with phi(pi_c) in (pi_c - 1)V at each cusp class)
    modulo coboundaries.
    """
    n = V.dim
    I = sp.eye(n)
    inv_dim = invariants_basis(V, [(1,), (2,)]).shape[1]
    # unknowns (u, v, a_inf, a_0, a_1): phi(pi_c) = (rho(pi_c) - 1) a_c
    Mt, Mtp = V.mat((1,)), V.mat((2,))
    Z = sp.zeros(n, n)
    # phi(t) = u ; phi(t') = v ; phi(t' t^{-1}) = v - t' t^{-1} u
    pi1 = V.mat((2, -1))
    rows = [
        sp.Matrix.hstack(I, Z, -(Mt - I), Z, Z),
        sp.Matrix.hstack(Z, I, Z, -(Mtp - I), Z),
        sp.Matrix.hstack(-pi1, I, Z, Z, -(pi1 - I)),
    ]
    A = sp.Matrix.vstack(*rows)
    # dimension of the projection of ker A to (u, v)
    ker = A.nullspace()
    proj = sp.Matrix.hstack(*[k[: 2 * n, 0] for k in ker]) if ker else sp.zeros(2 * n, 0)
    cocyc = exact_rank(proj)
    cob = exact_rank(sp.Matrix.vstack(Mt - I, Mtp - I))
    return [inv_dim, cocyc - cob]


def free_group_h1(V: GroupModule) -> int:
    """Ordinary H^1 of the free group of rank 2: 2 dim V - rank of coboundaries - ... ."""
    n = V.dim
    Mt, Mtp = V.mat((1,)), V.mat((2,))
    cob = exact_rank(sp.Matrix.vstack(Mt - sp.eye(n), Mtp - sp.eye(n)))
    return 2 * n - cob


def coinvariants_dim(V: GroupModule) -> int:
    n = V.dim
    A = sp.Matrix.hstack(V.mat((1,)) - sp.eye(n), V.mat((2,)) - sp.eye(n))
    return n - exact_rank(A)


# chains on cusp tuples: {tuple of cusp keys: coeff}; the empty tuple is the augmentation


def pb_boundary(chain: dict) -> dict:
    out: dict = {}
    for tup, c in chain.items():
        if len(tup) == 0:
            continue
        for j in range(len(tup)):
            t2 = tup[:j] + tup[j + 1:]
            out[t2] = out.get(t2, 0) + (-1) ** j * c
    return {k: v for k, v in out.items() if v != 0}


def pb_homotopy(chain: dict, base) -> dict:
    out: dict = {}
    for tup, c in chain.items():
        t2 = (base,) + tup
        out[t2] = out.get(t2, 0) + c
    return {k: v for k, v in out.items() if v != 0}


def pb_check_homotopy(chain: dict, base) -> bool:
    lhs: dict = {}
    for part in (pb_boundary(pb_homotopy(chain, base)), pb_homotopy(pb_boundary(chain), base)):
        for k, v in part.items():
            lhs[k] = lhs.get(k, 0) + v
    lhs = {k: v for k, v in lhs.items() if v != 0}
    return lhs == {k: v for k, v in chain.items() if v != 0}


def random_cusp(rng, length: int = 4):
    w = []
    for _ in range(length):
        a = int(rng.choice([1, -1, 2, -2]))
        w.append(a)
    name, c, _ = CUSP_LIST[int(rng.integers(3))]
    ci = cusp_image(word_matrix(reduce_word(w)), c)
    return "inf" if ci is None else ci


# ----------------------------------------------------------- lattice of N


@dataclass
class LatticeTessellation:
    p: int
    q: int
    shear: tuple  # linear forms a_j (coefficients on x^(1)) for the central shift of lambda_j
    faces: dict  # j -> list of (m, polygon vertices in the face coordinates)

    def piece_count(self, j):
        return len(self.faces[j])


def _clip(poly, a, b, c):
    """Keep the part of a convex polygon with a*u + b*v + c >= 0 (exact)."""
    out = []
    n = len(poly)
    for i in range(n):
        P, Q = poly[i], poly[(i + 1) % n]
        fp = a * P[0] + b * P[1] + c
        fq = a * Q[0] + b * Q[1] + c
        if fp >= 0:
            out.append(P)
        if (fp >= 0) != (fq >= 0):
            t = fp / (fp - fq)
            out.append((P[0] + t * (Q[0] - P[0]), P[1] + t * (Q[1] - P[1])))
    dedup = [v for i, v in enumerate(out) if v != out[i - 1]] if len(out) > 1 else out
    return dedup


def _area(poly):
    s = Fraction(0)
    for i in range(len(poly)):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % len(poly)]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2


def build_lattice_tessellation(p: int, q: int, shear=None) -> LatticeTessellation:
    """Fundamental cube [0,1]^{p+q} of a lattice in N; faces x_j = 0 split by central shift.

    The generator lambda_j (j <= p) maps (x1, x2) to (x1 + e_j, x2 + a_j(x1)),
    with a_j linear with integer coefficients (q = 1 here). A face piece on
    which floor(x2 + a_j(x1)) = m is identified by mu^{-m} lambda_j, mu the
    central generator.
    """
    if q == 0:
        return LatticeTessellation(p, 0, (), {j: [(0, None)] for j in range(p)})
    if (p, q) != (2, 1):
        raise NotImplementedError("lattice subdivision for p = 2, q = 1")
    shear = shear or ((0, 1), (-1, 0))  # Heisenberg: a_1(x) = x_2, a_2(x) = -x_1
    for a in shear:
        if any(Fraction(v).denominator != 1 for v in a):
            raise TessellationError("shear forms must be integral (cocompact lattice)")
    faces = {}
    for j in range(2):
        other = 1 - j
        # on face x_j = 0, coordinates (u, v) = (x_other, x_3); shift = a_j(x) with x_j = 0
        coef = Fraction(shear[j][other])
        pieces = []
        lo = min(0, int(coef))
        hi = max(0, int(coef)) + 1
        square = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(1), Fraction(1)),
                  (Fraction(0), Fraction(1))]
        for m in range(lo - 1, hi + 1):
            # m <= v + coef*u < m + 1
            poly = _clip(square, coef, Fraction(1), Fraction(-m))
            if poly:
                poly = _clip(poly, -coef, Fraction(-1), Fraction(m + 1))
            if poly and _area(poly) > 0:
                pieces.append((m, poly))
        faces[j] = pieces
    return LatticeTessellation(p, q, tuple(tuple(a) for a in shear), faces)


def lattice_image(L: LatticeTessellation, j: int, m: int, poly):
    """Image of a face piece under mu^{-m} lambda_j, in coordinates of the face x_j = 1."""
    other = 1 - j
    coef = Fraction(L.shear[j][other])
    return [(u, v + coef * u - m) for (u, v) in poly]


def _intersection_area(P, Q):
    """Area of the intersection of two counterclockwise convex polygons."""
    out = list(P)
    n = len(Q)
    for i in range(n):
        (x0, y0), (x1, y1) = Q[i], Q[(i + 1) % n]
        # left half plane of the directed edge
        out = _clip(out, -(y1 - y0), x1 - x0, (y1 - y0) * x0 - (x1 - x0) * y0) if out else out
    return _area(out) if len(out) >= 3 else Fraction(0)


def _ccw(P):
    s = sum(P[i][0] * P[(i + 1) % len(P)][1] - P[(i + 1) % len(P)][0] * P[i][1] for i in range(len(P)))
    return list(P) if s > 0 else list(reversed(P))


def lattice_faces_tile(L: LatticeTessellation) -> bool:
    """Images of the pieces lie in the opposite face, do not overlap, and cover it (exact)."""
    if L.q == 0:
        return True
    for j, pieces in L.faces.items():
        imgs = [_ccw(lattice_image(L, j, m, poly)) for m, poly in pieces]
        if not all(0 <= u <= 1 and 0 <= v <= 1 for img in imgs for u, v in img):
            return False
        if sum(_area(i) for i in imgs) != 1 or sum(_area(pl) for _, pl in pieces) != 1:
            return False
        for a in range(len(imgs)):
            for b in range(a + 1, len(imgs)):
                if _intersection_area(imgs[a], imgs[b]) != 0:
                    return False
    return True


# ------------------------------------------------------------------- export


def export_tessellation(T: Tessellation) -> str:
    lines = [f"tessellation gamma2 Y={T.Y!r}"]
    for dim in sorted(T.cells):
        for name in T.cells[dim]:
            if dim == 0:
                pt = T.points[name]
                loc = "cusp " + ("inf" if pt is None else str(pt)) if T.is_cusp(name) else \
                    f"point {pt.real!r},{pt.imag!r}"
                lines.append(f"cell 0 {name} {loc}")
                continue
            kind = "polygon" if dim == 2 else T.shapes[name][1]
            mark = T.cusp_marker.get(name)
            bd = " ".join(f"{'+' if s > 0 else '-'}{''.join(map(_letter, w)) or 'e'}.{n}"
                          for s, w, n in T.boundary[name])
            lines.append(f"cell {dim} {name} {kind} cusp={mark or '-'} boundary {bd}")
    return "\n".join(lines) + "\n"


def _letter(a: int) -> str:
    return {1: "t", -1: "T", 2: "s", -2: "S"}[a]

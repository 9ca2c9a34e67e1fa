"""Boundary germs y^{rho+nu} B(x, y) with B even and analytic in y.

The boundary operators L1, L2 are read off from the Laplace-Beltrami
operator built symbolically from the inverse metric, so their signs are
fixed by construction: Delta = -y^2 d_y^2 + (2 rho - 1) y d_y - y^2 L1 - y^4 L2.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import sympy as sp

from .space import ModelSpace, cosh_distance


class ExcludedParameter(ValueError):
    pass


class NoGermError(RuntimeError):
    pass


def xsyms(space: ModelSpace):
    return sp.symbols(f"x1:{space.n + 1}", real=True)


YSYM = sp.Symbol("y", positive=True)


def _metric_inverse_sym(space: ModelSpace, X):
    p, q, k = space.p, space.q, sp.nsimplify(space.kappa)
    y = YSYM
    d = space.d
    Gi = sp.zeros(d, d)
    if q:
        C = sp.Matrix([[-k * X[1]], [k * X[0]]])
    else:
        C = sp.zeros(p, 0)
    for i in range(p):
        Gi[i, i] = y**2
        for l in range(q):
            Gi[i, p + l] = Gi[p + l, i] = y**2 * C[i, l]
    CtC = C.T * C
    for l in range(q):
        for m in range(q):
            Gi[p + l, p + m] = y**2 * CtC[l, m] + (y**4 if l == m else 0)
    Gi[d - 1, d - 1] = y**2
    return Gi


@lru_cache(maxsize=None)
def _operators(space: ModelSpace):
    """Symbolic L1, L2 (as coefficient dictionaries) from the Laplace-Beltrami operator."""
    X = xsyms(space)
    y = YSYM
    coords = list(X) + [y]
    d = space.d
    Gi = _metric_inverse_sym(space, X)
    sq = y ** (-2 * sp.Rational(space.p, 2) - 2 * space.q - 1)
    # Delta_+ f = (1/sq) d_i (sq g^{ij} d_j f) = g^{ij} d_ij f + [(1/sq) d_i(sq g^{ij})] d_j f
    second = {}
    first = {}
    for i in range(d):
        for j in range(d):
            c = sp.expand(Gi[i, j])
            if c != 0:
                key = tuple(sorted((i, j)))
                second[key] = sp.expand(second.get(key, 0) + c)
    for j in range(d):
        c = sp.expand(sum(sp.diff(sq * Gi[i, j], coords[i]) for i in range(d)) / sq)
        if c != 0:
            first[j] = c
    L1, L2 = {}, {}
    ypart = {}
    for key, c in list(second.items()) + [((j,), c) for j, c in first.items()]:
        if d - 1 in key:
            ypart[key] = c
            continue
        poly = sp.Poly(c, y)
        for (e,), cc in poly.terms():
            if e == 2:
                L1[key] = L1.get(key, 0) + cc
            elif e == 4:
                L2[key] = L2.get(key, 0) + cc
            else:
                raise AssertionError(f"unexpected power y^{e} in the Laplacian")
    return X, L1, L2, ypart


def boundary_operators(space: ModelSpace):
    """(X, L1, L2, ypart): coefficient dictionaries keyed by derivative index tuples."""
    return _operators(space)


def apply_op(op: dict, f, X):
    out = 0
    for key, c in op.items():
        g = f
        for i in key:
            g = sp.diff(g, X[i])
        out += c * g
    return sp.expand(out)


def L1(space: ModelSpace, f):
    X, l1, _, _ = _operators(space)
    return apply_op(l1, f, X)


def L2(space: ModelSpace, f):
    X, _, l2, _ = _operators(space)
    return apply_op(l2, f, X)


def _check_nu(nu):
    z = complex(nu)
    if abs(z.imag) < 1e-14 and z.real <= -1 + 1e-14 and abs(2 * z.real - round(2 * z.real)) < 1e-14:
        raise ExcludedParameter(f"nu={nu} is in (1/2)Z_{{<=-1}}")
    # divisor k(k+nu) must not vanish for k >= 1
    if abs(z.imag) < 1e-14 and z.real <= -1 + 1e-14 and abs(z.real - round(z.real)) < 1e-14:
        raise ExcludedParameter(f"nu={nu}")


def _as_sym(nu):
    if isinstance(nu, sp.Basic):
        return nu
    if isinstance(nu, complex):
        return sp.Float(nu.real) + sp.I * sp.Float(nu.imag)
    if isinstance(nu, float):
        return sp.Float(nu)
    return sp.nsimplify(nu)


@dataclass(frozen=True, eq=False)
class GermSeries:
    space: ModelSpace
    nu: object
    coefficients: tuple  # a_0, a_2, a_4, ... as sympy expressions in X
    X: tuple
    center: tuple = ()
    delta: float = 1.0

    @property
    def K(self) -> int:
        return len(self.coefficients) - 1

    @property
    def s(self):
        return sp.Rational(self.space.p, 2) + self.space.q + self.nu

    def odd_coefficients(self):
        # stored even series: a_{2k+1} are identically 0 by construction
        return tuple(0 for _ in range(self.K))

    def terminated(self) -> bool:
        return all(sp.simplify(c) == 0 for c in self.coefficients[-2:]) if self.K >= 2 else False

    def B_expr(self):
        return sum(c * YSYM ** (2 * k) for k, c in enumerate(self.coefficients))

    def lambdified(self):
        return [sp.lambdify(self.X, c, "numpy") for c in self.coefficients]


def germ_from_boundary(phi, space: ModelSpace, nu, K: int, X=None) -> GermSeries:
    """a_0 = phi, a_{2k} = -(L1 a_{2k-2} + L2 a_{2k-4}) / (4k(k+nu))."""
    _check_nu(nu)
    if X is None:
        X = _operators(space)[0]
    nus = _as_sym(nu)
    a = [sp.expand(sp.sympify(phi))]
    for k in range(1, K + 1):
        t = L1(space, a[k - 1])
        if k >= 2:
            t += L2(space, a[k - 2])
        a.append(sp.expand(-t / (4 * k * (k + nus))))
    return GermSeries(space, nus, tuple(a), tuple(X))


def germ_evaluate(g: GermSeries, x, y, analytic_only: bool = False):
    """Returns (value, truncation estimate). y may be negative when analytic_only."""
    x = np.atleast_1d(np.asarray(x, float))
    fs = g.lambdified()
    y = float(y)
    terms = [complex(f(*x)) * y ** (2 * k) for k, f in enumerate(fs)]
    B = sum(terms)
    err = abs(terms[-1])
    if analytic_only:
        return B, err
    if y <= 0:
        raise ValueError("y must be positive for the full germ")
    s = complex(g.s)
    return y**s * B, y**s.real * err


def germ_field(g: GermSeries):
    """Vectorized u(x, y) = y^s B(x, y) for numeric use."""
    fs = g.lambdified()
    s = complex(g.s)
    s = s.real if s.imag == 0 else s

    def u(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        B = 0
        for k, f in enumerate(fs):
            B = B + np.asarray(f(*np.moveaxis(x, -1, 0))) * y ** (2 * k)
        return y**s * B

    return u


def empirical_radius(g: GermSeries, x, ys, tol: float = 1e-6):
    """Smallest y at which consecutive partial sums differ by more than tol."""
    x = np.atleast_1d(np.asarray(x, float))
    fs = g.lambdified()
    coef = [complex(f(*x)) for f in fs]
    for y in sorted(ys):
        if abs(coef[-1] * y ** (2 * g.K)) > tol:
            return y
    return np.inf


# ------------------------------------------------------------- L-tilde form


def lt_apply(space: ModelSpace, H, nu):
    """L~ on a polynomial in y^2 with coefficients in X."""
    nus = _as_sym(nu)
    y = YSYM
    H = sp.expand(H)
    out = 0
    poly = sp.Poly(H, y)
    for (e,), g in poly.terms():
        if e % 2:
            raise ValueError("odd power of y")
        h = e // 2
        out += -y ** (2 * h + 2) * L1(space, g) / (4 * (h + 1) * (h + 1 + nus))
        out += -y ** (2 * h + 4) * L2(space, g) / (4 * (h + 2) * (h + 2 + nus))
    return sp.expand(out)


def lt_iterate(phi, space: ModelSpace, nu, n: int):
    """Partial sums sum_{j<=n} L~^j phi (list of length n+1)."""
    _check_nu(nu)
    term = sp.expand(sp.sympify(phi))
    acc = term
    out = [acc]
    for _ in range(n):
        term = lt_apply(space, term, nu)
        acc = sp.expand(acc + term)
        out.append(acc)
    return out


def y_part(H, m: int):
    return sp.expand(H).coeff(YSYM, 2 * m)


# ---------------------------------------------------------------- restriction


def _richardson(vals, ratio2):
    """Richardson table for a sequence with error expansion in h^2, h^4, ..."""
    T = [list(vals)]
    for j in range(1, len(vals)):
        f = ratio2**j
        prev = T[-1]
        T.append([(f * prev[i + 1] - prev[i]) / (f - 1) for i in range(len(prev) - 1)])
    return T


def restrict(u: Callable, space: ModelSpace, b, nu, convention: str = "B", y0: float = 0.05,
             levels: int = 6, tol: float = 1e-6):
    """Numerical restriction of a germ at finite boundary points b (array (M, n)).

    convention "B": lim y^{-s} u(x=b, y) (horospherical);
    convention "A": lim t^{s} u(k_b a(t) o) (polar, along geodesics from o).
    Returns (values, error estimate).
    """
    s = space.rho + complex(nu)
    b = np.atleast_2d(np.asarray(b, float))
    hs = y0 * 0.5 ** np.arange(levels)
    vals = []
    for h in hs:
        if convention == "B":
            yy = np.full(len(b), h)
            vals.append(h ** (-s) * u(b, yy))
        elif convention == "A":
            # point at distance log(1/h) from o toward b
            xs, ys = _geodesic_point(b, 1 / h)
            vals.append(h ** (-s) * u(xs, ys))
        else:
            raise ValueError(convention)
    vals = np.array(vals)
    T = _richardson(vals, 4.0)
    best = T[-1][0]
    err = np.abs(T[-1][0] - T[-2][-1]) if len(T) > 1 else np.inf
    if np.any(~np.isfinite(best)) or np.any(err > tol * np.maximum(np.abs(best), 1)):
        raise NoGermError("limit does not stabilize")
    return best, err


def _geodesic_point(b, t):
    """k_b a(t) o in horospherical coordinates (q = 0)."""
    b = np.asarray(b, float)
    nb = np.sum(b * b, axis=-1)
    sig_last = (nb - 1) / (nb + 1)
    sig_x = 2 * b / (nb + 1)[:, None]
    # k a(t) o on the hyperboloid: w0 = cosh, (X, w1) = sinh * sigma
    ch, sh = (t + 1 / t) / 2, (t - 1 / t) / 2
    v = ch - sh * sig_last
    X = sh * sig_x
    return X / v[:, None], 1 / v


def transfer_DS(x, y, nu, space: ModelSpace):
    """exp(s(-dist(o, pt) + dist(n(x) o, pt))) for 0 < y < 1, continued analytically
    (and evenly) in y through y = 0 (q = 0)."""
    s = space.rho + complex(nu)
    s = s.real if s.imag == 0 else s
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    A = (1 + np.sum(x * x, axis=-1) + y * y) / 2
    return (A + np.sqrt(A * A - y * y)) ** (-s)


def transfer_DS_direct(x, y, nu, space: ModelSpace):
    s = space.rho + complex(nu)
    s = s.real if s.imag == 0 else s
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    d1 = np.arccosh(cosh_distance(np.zeros_like(x), np.ones_like(y), x, y))
    d2 = np.abs(np.log(y))
    return np.exp(s * (-d1 + d2))

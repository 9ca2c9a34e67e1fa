"""Green form eta, the kernel forms omega_nu / omega^W_nu, and cycle integrals.

A (d-1)-form is stored by its coefficients eta_j in the basis
zeta[j] = dx_1 ^ ... (omit j) ... ^ dx_d, coordinates ordered (x_1..x_n, y).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .kernels import (
    BoundaryFunction, RadialProfile, SingularityError, poisson_kernel, poisson_kernel_grad,
    q_kernel, q_kernel_grad, _cplx,
)
from .space import GroupElement, ModelSpace, metric_inverse, gradient_fd, laplacian_apply


class TailError(RuntimeError):
    pass


# ------------------------------------------------------------------- fields


@dataclass(frozen=True, eq=False)
class Field:
    """Scalar field with vectorized value(x, y) and grad(x, y) -> (..., d)."""
    space: ModelSpace
    value: Callable
    grad: Callable | None = None
    label: str = ""

    def gradient(self, x, y):
        if self.grad is not None:
            return self.grad(x, y)
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        flat_x = x.reshape(-1, x.shape[-1])
        flat_y = y.reshape(-1)
        out = np.array([gradient_fd(self.value, xi, yi) for xi, yi in zip(flat_x, flat_y)])
        return out.reshape(x.shape[:-1] + (x.shape[-1] + 1,))

    def __call__(self, x, y):
        return self.value(np.asarray(x, float), np.asarray(y, float))

    def laplacian(self, x, y, h=None):
        return laplacian_apply(self.value, self.space, x, y, h)

    def scaled(self, a) -> "Field":
        g = self.grad
        return Field(self.space, lambda x, y: a * self.value(x, y),
                     None if g is None else (lambda x, y: a * g(x, y)), self.label)

    def __add__(self, other: "Field") -> "Field":
        ga, gb = self.grad, other.grad
        grad = None if ga is None or gb is None else (lambda x, y: ga(x, y) + gb(x, y))
        return Field(self.space, lambda x, y: self.value(x, y) + other.value(x, y), grad, "sum")

    def pullback(self, g: GroupElement) -> "Field":
        """x -> f(g x), the left translate L(g^{-1}) f."""
        def val(x, y):
            xn, yn = g.act(x, y)
            return self.value(xn, yn)

        def grd(x, y):
            xn, yn, J = g.act_with_jacobian(x, y)
            gf = self.gradient(xn, yn)
            return np.einsum("...i,...ij->...j", gf, J)

        return Field(self.space, val, grd, self.label + "*g")


def kernel_field(space: ModelSpace, b, nu, model: str = "prj") -> Field:
    b = None if b is None else np.atleast_1d(np.asarray(b, float))
    return Field(space,
                 lambda x, y: poisson_kernel(space, b, x, y, nu, model),
                 (lambda x, y: poisson_kernel_grad(space, b, x, y, nu, model)) if space.q == 0 else None,
                 f"r_nu({None if b is None else b.tolist()})")


def power_field(space: ModelSpace, nu) -> Field:
    s = space.rho + _cplx(nu)

    def g(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        return np.concatenate([np.zeros(x.shape, complex if np.iscomplexobj(s) else float),
                               (s * y ** (s - 1))[..., None]], axis=-1)

    return Field(space, lambda x, y: np.asarray(y, float) ** s, g, "y^s")


def q_field(profile: RadialProfile, x0, y0) -> Field:
    x0 = np.atleast_1d(np.asarray(x0, float))
    return Field(profile.space,
                 lambda x, y: q_kernel(profile, x0, y0, x, y),
                 lambda x, y: q_kernel_grad(profile, x0, y0, x, y),
                 "q_nu")


def transform_field(phi: BoundaryFunction, nu, chunk: int = 4096) -> Field:
    """Poisson transform of sampled data as an exact finite sum of kernels."""
    sp = phi.space
    w = phi.weights * phi.values
    nodes = phi.nodes

    def _apply(fn, x, y, extra):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        xf = x.reshape(-1, x.shape[-1])
        yf = y.reshape(-1)
        outs = []
        step = max(1, chunk // max(1, len(nodes)) * 64)
        for i in range(0, len(yf), step):
            K = fn(sp, nodes, xf[i:i + step, None, :], yf[i:i + step, None], nu, "prj")
            if extra:
                outs.append(np.einsum("pbk,b->pk", K, w))
            else:
                outs.append(K @ w)
        out = np.concatenate(outs, axis=0)
        return out.reshape(x.shape[:-1] + ((x.shape[-1] + 1,) if extra else ()))

    return Field(sp,
                 lambda x, y: _apply(poisson_kernel, x, y, False),
                 (lambda x, y: _apply(poisson_kernel_grad, x, y, True)) if sp.q == 0 else None,
                 "P_nu phi")


# -------------------------------------------------------------- Green form


def green_form_eta(space: ModelSpace, f1, g1, f2, g2, x, y):
    """Coefficients eta_j = (-1)^j sqrt(det) sum_i g^{ij}(f2 d_i f1 - f1 d_i f2), j = 0..d-1.

    Points have shape S; f1, f2 have shape S + T (T optional sample axes),
    gradients S + T + (d,). Output S + T + (d,). The exterior derivative is
    (f1 Delta f2 - f2 Delta f1) times the volume form.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    d = space.d
    S = y.shape
    f1 = np.asarray(f1)
    f2 = np.asarray(f2)
    extra = max(f1.ndim, f2.ndim) - len(S)
    if space.q == 0:
        Gi = (y**2)[..., None, None] * np.eye(d)
    else:
        Gi = np.stack([metric_inverse(space, xi, yi) for xi, yi in
                       zip(x.reshape(-1, space.n), y.reshape(-1))]).reshape(S + (d, d))
    Gi = Gi.reshape(S + (1,) * extra + (d, d))
    v = f2[..., None] * g1 - f1[..., None] * g2
    bvec = np.einsum("...ij,...i->...j", Gi, v)
    sq = (y ** (-2 * space.rho - 1)).reshape(S + (1,) * (extra + 1))
    signs = np.array([(-1) ** j for j in range(d)], float)
    return sq * signs * bvec


def eta_fields(f1: Field, f2: Field, x, y):
    return green_form_eta(f1.space, f1(x, y), f1.gradient(x, y), f2(x, y), f2.gradient(x, y), x, y)


def maass_selberg(f1: Field, f2: Field, x, y, h=None):
    return f1(x, y) * f2.laplacian(x, y, h) - f2(x, y) * f1.laplacian(x, y, h)


def omega_v(f: Field, b, x, y, nu):
    """omega_nu(f; b, .) = eta(f, r_nu(b; .)), vectorized over points (and b samples)."""
    sp = f.space
    b = None if b is None else np.asarray(b, float)
    if b is not None and b.ndim == 2:
        # trailing sample axis for b
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        r = poisson_kernel(sp, b, x[..., None, :], y[..., None], nu, "prj")
        gr = poisson_kernel_grad(sp, b, x[..., None, :], y[..., None], nu, "prj")
        fv = np.broadcast_to(f(x, y)[..., None], r.shape)
        gf = np.broadcast_to(f.gradient(x, y)[..., None, :], gr.shape)
        return green_form_eta(sp, fv, gf, r, gr, x, y)
    return eta_fields(f, kernel_field(sp, b, nu), x, y)


def omega_w(f: Field, profile: RadialProfile, x0, y0, x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    x0 = np.atleast_1d(np.asarray(x0, float))
    if np.any(np.all(np.isclose(x, x0), axis=-1) & np.isclose(y, y0)):
        raise SingularityError("omega^W evaluated on the diagonal")
    return eta_fields(f, q_field(profile, x0, y0), x, y)


def exterior_derivative_fd(eta_fn: Callable, space: ModelSpace, x, y, h=None):
    """sum_j (-1)^j d_j eta_j / sqrt(det) by central differences: density of d(eta)."""
    x = np.atleast_1d(np.asarray(x, float))
    if h is None:
        h = 1e-3 * y
    base = np.concatenate([x, [y]])
    d = space.d
    tot = 0.0
    for j in range(d):
        acc = 0.0
        for o, w in zip((-2, -1, 1, 2), (1, -8, 8, -1)):
            z = base.copy()
            z[j] += o * h
            acc = acc + w * eta_fn(z[:-1], z[-1])[j]
        tot = tot + (-1) ** j * acc / (12 * h)
    return tot / y ** (-2 * space.rho - 1)


# ------------------------------------------------------------- cell patches


@dataclass(frozen=True, eq=False)
class CellPatch:
    """A k-cell: param(u) -> (x, y) and jac(u) -> (..., d, k) on u in [0,1]^k."""
    space: ModelSpace
    dim: int
    param: Callable
    jac: Callable
    orientation: int = 1
    order: int = 12
    cusp: object = None
    label: str = ""
    tail: Callable | None = None  # parameter map of the part beyond truncation

    def flipped(self) -> "CellPatch":
        return replace(self, orientation=-self.orientation)

    def translate(self, g: GroupElement, label: str | None = None) -> "CellPatch":
        def param(u):
            x, y = self.param(u)
            return g.act(x, y)

        def jac(u):
            x, y = self.param(u)
            _, _, Jg = g.act_with_jacobian(x, y)
            return Jg @ self.jac(u)

        return replace(self, param=param, jac=jac, label=label or (self.label + "'"))


def _tensor_rule(k: int, n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    t = (t + 1) / 2
    w = w / 2
    grids = np.meshgrid(*([t] * k), indexing="ij")
    U = np.stack([g.reshape(-1) for g in grids], axis=-1)
    W = np.ones(U.shape[0])
    for g in np.meshgrid(*([w] * k), indexing="ij"):
        W = W * g.reshape(-1)
    return U, W


def pullback_weights(J: np.ndarray):
    """For Jacobian (..., d, d-1), the minors det(J without row j), signed into zeta[j]."""
    d = J.shape[-2]
    out = []
    for j in range(d):
        rows = [i for i in range(d) if i != j]
        sub = J[..., rows, :]
        out.append(np.linalg.det(sub) if d > 1 else np.ones(J.shape[:-2]))
    return np.stack(out, axis=-1)


def integrate_form(form_fn: Callable, cell: CellPatch, order: int | None = None):
    """Integral over cell of the (d-1)-form; form_fn(x, y) -> (N, d) or (N, M, d)."""
    n = order or cell.order
    U, W = _tensor_rule(cell.dim, n)
    x, y = cell.param(U)
    J = cell.jac(U)
    minors = pullback_weights(J)
    eta = form_fn(x, y)
    integrand = np.einsum("n...d,nd->n...", eta, minors)
    return cell.orientation * np.tensordot(W, integrand, axes=(0, 0))


def integrate_adaptive(form_fn: Callable, cell: CellPatch, tol: float = 1e-8, max_order: int = 512):
    n = cell.order
    prev = integrate_form(form_fn, cell, n)
    while True:
        n *= 2
        cur = integrate_form(form_fn, cell, n)
        scale = max(np.max(np.abs(cur)), 1e-300)
        err = np.max(np.abs(cur - prev)) / scale
        if err <= tol or n >= max_order:
            return cur, err, n
        prev = cur


def cycle_integral(f: Field, kernel: str, cell: CellPatch, nu, *, b=None, profile=None, base=None,
                   tol: float = 1e-8, tail_tol: float = 1e-10, max_order: int = 512):
    """Integral over cell of eta(f, kernel) with kernel r_nu(b; .) or q_nu(base; .).

    Returns (value, info) with info holding the quadrature error estimate
    and, for cusp-marked cells, the tail bound beyond the truncation.
    """
    if kernel == "r":
        fn = lambda x, y: omega_v(f, b, x, y, nu)
    elif kernel == "q":
        fn = lambda x, y: omega_w(f, profile, base[0], base[1], x, y)
    else:
        raise ValueError(kernel)
    val, err, n = integrate_adaptive(fn, cell, tol, max_order)
    info = {"quad_err": err, "order": n}
    if cell.tail is not None:
        tb = np.max(np.abs(integrate_form(fn, replace(cell, param=cell.tail[0], jac=cell.tail[1]), 64)))
        info["tail"] = tb
        if tb > tail_tol * max(1.0, np.max(np.abs(val))):
            raise TailError(f"tail beyond truncation {tb:.2e} exceeds tolerance; increase T_cut")
    return val, info


# --------------------------------------------------------- standard shapes


def hseg(space: ModelSpace, x0: float, x1: float, y: float, order: int = 16, **kw) -> CellPatch:
    """Horocyclic segment in H^2 at height y from x0 to x1."""
    def param(u):
        t = u[..., 0]
        return (x0 + (x1 - x0) * t)[..., None], np.full(t.shape, float(y))

    def jac(u):
        J = np.zeros(u.shape[:-1] + (2, 1))
        J[..., 0, 0] = x1 - x0
        return J

    return CellPatch(space, 1, param, jac, order=order, **kw)


def vseg(space: ModelSpace, x: float, y0: float, y1: float, order: int = 16, **kw) -> CellPatch:
    """Vertical geodesic segment from (x, y0) to (x, y1), log-parameterized."""
    L = np.log(y1 / y0)

    def param(u):
        t = u[..., 0]
        return np.full(t.shape + (1,), float(x)), y0 * np.exp(L * t)

    def jac(u):
        t = u[..., 0]
        J = np.zeros(u.shape[:-1] + (2, 1))
        J[..., 1, 0] = L * y0 * np.exp(L * t)
        return J

    return CellPatch(space, 1, param, jac, order=order, **kw)


def ray(space: ModelSpace, x: float, Y: float, S: float = 25.0, order: int = 32, cusp="inf", **kw) -> CellPatch:
    """Vertical ray from (x, Y) to the cusp at infinity, truncated at Y e^S."""
    core = vseg(space, x, Y, Y * np.exp(S), order=order)
    tail = vseg(space, x, Y * np.exp(S), Y * np.exp(2 * S), order=order)
    return replace(core, cusp=cusp, tail=(tail.param, tail.jac), **kw)


def box_faces(space: ModelSpace, lo, hi, y0: float, y1: float, order: int = 12):
    """Outward-oriented boundary faces of a horospherical box (q = 0).

    The box is prod [lo_i, hi_i] x [y0, y1]; y is log-parameterized.
    """
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    n = space.n
    d = n + 1
    Ly = np.log(y1 / y0)
    faces = []

    def coords(u, fixed_axis, fixed_val):
        # u has d-1 columns filling the free axes in order
        cols = []
        k = 0
        for a in range(d):
            if a == fixed_axis:
                cols.append(np.full(u.shape[:-1], fixed_val))
            else:
                t = u[..., k]
                k += 1
                if a < n:
                    cols.append(lo[a] + (hi[a] - lo[a]) * t)
                else:
                    cols.append(y0 * np.exp(Ly * t))
        return np.stack(cols, axis=-1)

    def make(axis, val, sign):
        free = [a for a in range(d) if a != axis]

        def param(u):
            z = coords(u, axis, val)
            return z[..., :n], z[..., n]

        def jac(u):
            z = coords(u, axis, val)
            J = np.zeros(u.shape[:-1] + (d, d - 1))
            for k, a in enumerate(free):
                J[..., a, k] = (hi[a] - lo[a]) if a < n else Ly * z[..., n]
            return J

        # orientation: outward normal n_out, frame (free axes) oriented so that
        # (n_out, frame) is positive; det[e_axis, e_free...] = (-1)^axis
        orient = sign * (-1) ** axis
        return CellPatch(space, d - 1, param, jac, orientation=int(orient), order=order,
                         label=f"face{axis}{'+' if sign > 0 else '-'}")

    for a in range(d):
        lo_v = lo[a] if a < n else y0
        hi_v = hi[a] if a < n else y1
        faces.append(make(a, lo_v, -1))
        faces.append(make(a, hi_v, +1))
    return faces


def reproducing_formula(h: Field, faces, x0, y0, nu, profile: RadialProfile, tol: float = 1e-9,
                        max_order: int = 256):
    """Sum over oriented boundary faces of omega^W(h; x0, .)."""
    tot = 0.0
    for F in faces:
        v, _ = cycle_integral(h, "q", F, nu, profile=profile, base=(np.atleast_1d(x0), y0), tol=tol,
                              max_order=max_order)
        tot = tot + v
    return tot

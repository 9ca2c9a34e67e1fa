"""Eigenfunction -> cocycle (cycle integrals over Gamma(2) cells) and the inverse u_psi.

The W-realization of psi(C) is the function x -> int_C eta(h, q_nu(x; .)),
evaluated on the actual translated cell; its singular support is C itself.
Summing over the boundary of a union Z of 2-cells that surrounds x recovers
measure_scale * 2 nu c(nu) * h(x).
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field, replace
from typing import Callable

import mpmath as mp
import numpy as np
from scipy import special

from . import complex as cx
from .forms import Field, green_form_eta, integrate_adaptive, integrate_form, kernel_field, \
    transform_field, power_field, omega_v
from .kernels import RadialProfile, bump_function, q_kernel, q_kernel_grad, \
    resolvent_profile, twonu_c
from .space import ModelSpace, cosh_distance, laplacian_apply, rh2


class DecayError(RuntimeError):
    def __init__(self, cusp, msg=""):
        super().__init__(f"insufficient decay at cusp {cusp}: {msg}")
        self.cusp = cusp


class ExpandBallError(RuntimeError):
    pass


CUSP_MAPS = {"c_inf": np.array([[1, 0], [0, 1]], dtype=object), "c_0": cx.W, "c_1": cx.G1}


# ------------------------------------------------------------ K-Bessel


def kbessel(nu, x, derivative: bool = False):
    """K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt for x > 0 and complex nu.

    The integrand decays double exponentially, so the trapezoid rule converges
    geometrically; the step resolves the oscillation of cosh(i R t).
    """
    x = np.asarray(x, float)
    nu = complex(nu)
    if np.any(x <= 0):
        raise ValueError("K-Bessel needs x > 0")
    xmin = float(np.min(x))
    T = math.acosh(1 + (60 + abs(nu.real) * 40) / xmin)
    T = max(T, 1.0)
    h = min(0.02, 0.25 / (1 + abs(nu)))
    t = np.arange(0, T + h, h)
    w = np.full(t.shape, h)
    w[0] = h / 2
    ch = np.cosh(t)
    core = np.exp(-x[..., None] * (ch - 1)) * np.cosh(nu * t)
    if derivative:
        core = -core * ch
    v = np.exp(-x) * np.sum(core * w, axis=-1)
    return v.real if nu.imag == 0 else v


# ----------------------------------------------------------------- handles


@dataclass(frozen=True, eq=False)
class EigenfunctionHandle:
    kind: str  # "poisson-kernel" | "poisson-transform" | "maass-fourier" | "eisenstein" | "power" | "zero"
    nu: complex
    field: Field
    label: str = ""
    invariant: bool = False  # Gamma(2)-invariant
    decay: dict = field(default_factory=dict)

    @property
    def space(self) -> ModelSpace:
        return self.field.space

    def __call__(self, x, y):
        return self.field(x, y)

    def pde_residual(self, x, y, h=None):
        lam = self.space.rho**2 - complex(self.nu) ** 2
        x = np.atleast_1d(np.asarray(x, float))
        Lf = laplacian_apply(self.field.value, self.space, x, y, h)
        f = self.field(x, y)
        return abs(Lf - lam * f) / max(abs(f), 1e-300)


def kernel_handle(b0, nu, space: ModelSpace | None = None) -> EigenfunctionHandle:
    space = space or rh2()
    f = kernel_field(space, None if b0 is None else np.atleast_1d(b0), nu, "prj")
    return EigenfunctionHandle("poisson-kernel", complex(nu), f, f"r_nu({b0})")


def bump_handle(center, radius, nu, space: ModelSpace | None = None, N: int = 80) -> EigenfunctionHandle:
    space = space or rh2()
    phi = bump_function(space, center, radius, N)
    return EigenfunctionHandle("poisson-transform", complex(nu), transform_field(phi, nu),
                               f"P_nu bump({center},{radius})")


def power_handle(nu, space: ModelSpace | None = None) -> EigenfunctionHandle:
    return EigenfunctionHandle("power", complex(nu), power_field(space or rh2(), nu), "y^s")


def zero_handle(nu, space: ModelSpace | None = None) -> EigenfunctionHandle:
    space = space or rh2()
    f = Field(space, lambda x, y: np.zeros(np.shape(y)),
              lambda x, y: np.zeros(np.shape(y) + (space.d,)), "0")
    return EigenfunctionHandle("zero", complex(nu), f, "zero", invariant=True)


def fourier_handle(coeffs: dict, R: float, expansion: str = "exp", label: str = "maass") -> EigenfunctionHandle:
    """f = sum a_n sqrt(y) K_{iR}(2 pi |n| y) e(n x) ("exp") or cos(2 pi n x) ("cos") on H^2."""
    space = rh2()
    items = [(int(n), complex(a)) for n, a in coeffs.items() if a != 0]
    nu = 1j * R

    def parts(x, y):
        x = np.asarray(x, float)[..., 0]
        y = np.asarray(y, float)
        val = np.zeros(y.shape, complex)
        gx = np.zeros(y.shape, complex)
        gy = np.zeros(y.shape, complex)
        sy = np.sqrt(y)
        for n, a in items:
            arg = 2 * np.pi * abs(n) * y
            K = kbessel(nu, arg)
            dK = kbessel(nu, arg, derivative=True)
            if expansion == "cos":
                e, de = np.cos(2 * np.pi * n * x), -2 * np.pi * n * np.sin(2 * np.pi * n * x)
            else:
                e = np.exp(2j * np.pi * n * x)
                de = 2j * np.pi * n * e
            val += a * sy * K * e
            gx += a * sy * K * de
            gy += a * (K / (2 * sy) + sy * 2 * np.pi * abs(n) * dK) * e
        return val, np.stack([gx, gy], axis=-1)

    f = Field(space, lambda x, y: parts(x, y)[0], lambda x, y: parts(x, y)[1], label)
    return EigenfunctionHandle("maass-fourier" if items else "zero", nu, f, label)


def _xi(s):
    return mp.pi ** (-s / 2) * mp.gamma(s / 2) * mp.zeta(s)


def sl2z_reduce(z):
    """Map points into |Re z| <= 1/2, |z| >= 1; returns (z', dz'/dz)."""
    shape = np.shape(z)
    z = np.array(z, complex).reshape(-1)
    der = np.ones(z.shape, complex)
    for _ in range(200):
        z = z - np.round(z.real)
        m = np.abs(z) < 1 - 1e-15
        if not np.any(m):
            return z.reshape(shape), der.reshape(shape)
        der[m] = der[m] / z[m] ** 2
        z[m] = -1 / z[m]
    raise RuntimeError("SL2(Z) reduction did not terminate")


def eisenstein_handle(nu: float, terms: int = 12) -> EigenfunctionHandle:
    """SL2(Z) Eisenstein series E(z, 1/2 + nu) for real 0 < nu < 1/2 (Gamma(2)-invariant).

    E = y^s + phi(s) y^{1-s} + (4/xi(2s)) sqrt(y) sum n^{s-1/2} sigma_{1-2s}(n) K_{s-1/2}(2 pi n y) cos(2 pi n x),
    evaluated after reduction to the standard domain (y >= sqrt(3)/2), where
    `terms` Fourier modes give double precision.
    """
    nu = float(nu)
    s = 0.5 + nu
    space = rh2()
    with mp.workdps(30):
        phi = float(_xi(2 * s - 1) / _xi(2 * s))
        pref = float(4 / _xi(2 * s))
    n = np.arange(1, terms + 1)
    sig = np.array([sum(d ** (1 - 2 * s) for d in range(1, k + 1) if k % d == 0) for k in n])
    c = pref * n ** (s - 0.5) * sig

    def reduced(x, y):
        arg = 2 * np.pi * n * y[..., None]
        K = special.kv(nu, arg)
        dK = special.kvp(nu, arg)
        cs = np.cos(2 * np.pi * n * x[..., None])
        sn = np.sin(2 * np.pi * n * x[..., None])
        sy = np.sqrt(y)
        val = y**s + phi * y ** (1 - s) + sy * np.sum(c * K * cs, axis=-1)
        gx = -sy * np.sum(c * K * 2 * np.pi * n * sn, axis=-1)
        gy = (s * y ** (s - 1) + phi * (1 - s) * y ** (-s)
              + np.sum(c * (K / (2 * sy[..., None]) + sy[..., None] * 2 * np.pi * n * dK) * cs, axis=-1))
        return val, gx, gy

    def parts(x, y):
        z = np.asarray(x, float)[..., 0] + 1j * np.asarray(y, float)
        zr, der = sl2z_reduce(z)
        val, gx, gy = reduced(zr.real, zr.imag)
        G = (gx - 1j * gy) * der  # 2 df/dz transforms with the derivative of the map
        return val, np.stack([G.real, -G.imag], axis=-1)

    f = Field(space, lambda x, y: parts(x, y)[0], lambda x, y: parts(x, y)[1], "E(z,s)")
    return EigenfunctionHandle("eisenstein", complex(nu), f, "E", invariant=True)


# ------------------------------------------------------------ decay probe


@dataclass(frozen=True)
class DecayReport:
    cusp: str
    exponent: float
    stderr: float
    threshold: float
    quick: bool  # exponent < rho - |Re nu|


def decay_probe(h: EigenfunctionHandle, cusp: str = "c_inf", heights=None, nx: int = 33) -> DecayReport:
    """Fit log max_x |h(g_c (x + i t))| against log t."""
    heights = np.geomspace(4, 64, 9) if heights is None else np.asarray(heights, float)
    M = CUSP_MAPS[cusp]
    xs = np.linspace(-1, 1, nx)
    vals = []
    for t in heights:
        z = np.array([cx.moebius(M, complex(x, t)) for x in xs])
        v = h(z.real[:, None], z.imag)
        vals.append(np.max(np.abs(v)))
    vals = np.maximum(np.array(vals), 1e-300)
    A = np.stack([np.log(heights), np.ones(len(heights))], axis=1)
    coef, res, *_ = np.linalg.lstsq(A, np.log(vals), rcond=None)
    resid = np.log(vals) - A @ coef
    dof = max(len(heights) - 2, 1)
    se = math.sqrt(float(resid @ resid) / dof / float(np.sum((A[:, 0] - A[:, 0].mean()) ** 2)))
    thr = h.space.rho - abs(complex(h.nu).real)
    return DecayReport(cusp, float(coef[0]), se, thr, bool(coef[0] < thr))


# ---------------------------------------------------------------- cocycles


def omega_w_points(f: Field, profile: RadialProfile, X0, Y0, x, y):
    """eta(f, q_nu(x_p; .)) at points (x, y), with a trailing axis over the probe points x_p."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    X0 = np.asarray(X0, float)
    Y0 = np.asarray(Y0, float)
    q = q_kernel(profile, X0, Y0, x[..., None, :], y[..., None])
    gq = q_kernel_grad(profile, X0, Y0, x[..., None, :], y[..., None])
    fv = np.broadcast_to(np.asarray(f(x, y))[..., None], q.shape)
    gf = np.broadcast_to(f.gradient(x, y)[..., None, :], gq.shape)
    return green_form_eta(f.space, fv, gf, q, gq, x, y)


@dataclass(eq=False)
class GermCocycle:
    """psi(C) for the cells of a Gamma(2) tessellation.

    kernel "W": values are functions of probe points X (P, 1), Y (P,);
    kernel "V": values are functions of boundary samples b (M, 1).
    Each cell value is computed on the actual translate w.C; `equivariant`
    evaluates psi(w C)(x) as psi(C)(w^{-1} x) instead (valid for invariant h).
    """
    T: cx.Tessellation
    h: EigenfunctionHandle
    kernel: str
    nu: complex
    profile: RadialProfile | None
    tol: float = 1e-11
    S: float = 25.0
    singular_set: dict = field(default_factory=dict)
    perturb: Callable | None = None
    _cache: dict = field(default_factory=dict)

    def _integral(self, name, word, args):
        patch = cx.cell_patch(self.T, name, word, S=self.S)
        if self.kernel == "W":
            fn = lambda x, y: omega_w_points(self.h.field, self.profile, args[0], args[1], x, y)
        else:
            fn = lambda x, y: omega_v(self.h.field, args[0], x, y, self.nu)
        val, err, n = integrate_adaptive(fn, patch, self.tol, 1024)
        if patch.tail is not None:
            tail = replace(patch, param=patch.tail[0], jac=patch.tail[1])
            tb = np.max(np.abs(integrate_form(fn, tail, 64)))
            if not np.isfinite(tb) or tb > 1e-9 * max(1.0, float(np.max(np.abs(val)))):
                raise DecayError(self.T.cusp_marker[name], f"tail {tb:.2e} on {name}{list(word)}")
        return val

    def value(self, name, word=(), *args, mode: str = "direct"):
        word = cx.reduce_word(tuple(word))
        if mode == "equivariant" and word:
            if self.kernel != "W":
                raise ValueError("equivariant mode is for the W realization")
            M = cx.word_matrix(cx.inv(word))
            z = np.array([cx.moebius(M, complex(a, b)) for a, b in zip(np.ravel(args[0]), args[1])])
            return self.value(name, (), z.real[:, None], z.imag)
        key = (name, word, self.kernel) + tuple(np.asarray(a, float).tobytes() for a in args)
        if key not in self._cache:
            if self.h.kind == "zero":
                shape = (np.shape(args[1]) if self.kernel == "W" else (len(args[0]),))
                self._cache[key] = np.zeros(shape, complex)
            else:
                self._cache[key] = self._integral(name, word, args)
        v = self._cache[key]
        if self.perturb is not None:
            v = v + self.perturb(name, word, *args)
        return v

    def boundary_sum(self, name2, word=(), *args):
        """psi evaluated on the boundary of a 2-cell (the cocycle defect)."""
        tot = 0
        for s, g, n in self.T.boundary[name2]:
            tot = tot + s * self.value(n, cx.mul(tuple(word), g), *args)
        return tot

    def scaled_sum(self, other: "GermCocycle", a, b) -> "LinearCocycle":
        return LinearCocycle([(a, self), (b, other)])


@dataclass(eq=False)
class LinearCocycle:
    parts: list

    @property
    def T(self):
        return self.parts[0][1].T

    @property
    def nu(self):
        return self.parts[0][1].nu

    def value(self, name, word=(), *args, mode="direct"):
        return sum(a * p.value(name, word, *args, mode=mode) for a, p in self.parts)


@dataclass(eq=False)
class CoboundaryCocycle:
    """d c for a 0-cochain c(P, w)(x) (a callable)."""
    T: cx.Tessellation
    nu: complex
    c0: Callable

    def value(self, name, word=(), *args, mode="direct"):
        tot = 0
        for s, g, P in self.T.boundary[name]:
            tot = tot + s * self.c0(P, cx.mul(tuple(word), g), *args)
        return tot


def cocycle_from_eigenfunction(h: EigenfunctionHandle, T: cx.Tessellation, kernel: str = "W", nu=None,
                               profile: RadialProfile | None = None, tol: float = 1e-11) -> GermCocycle:
    nu = complex(h.nu if nu is None else nu)
    if abs(nu - complex(h.nu)) > 1e-12:
        raise ValueError("kernel and eigenfunction must share the spectral parameter")
    if kernel == "W" and profile is None:
        profile = resolvent_profile(nu, h.space)
    sing = {}
    for dim in (1, 2):
        for n in T.cells[dim]:
            m = T.cusp_marker.get(n)
            sing[n] = () if m is None else (m,)
    return GermCocycle(T, h, kernel, nu, profile, tol, singular_set=sing)


def random_coboundary(T: cx.Tessellation, nu, seed: int = 0, space: ModelSpace | None = None):
    """d of a random 0-cochain whose values are multiples of Poisson kernels r_nu(b_P; x)."""
    space = space or rh2()
    base = {"P1": 0.3, "P2": -0.4, "P3": 1.7, "P4": -2.2}

    def c0(P, w, X, Y):
        if T.is_cusp(P):
            return 0
        rng = np.random.default_rng([seed, zlib.crc32(repr((P, w)).encode())])
        a = rng.normal()
        return a * kernel_field(space, np.array([base[P]]), nu)(X, Y)

    return CoboundaryCocycle(T, complex(nu), c0)


# ----------------------------------------------------------- reconstruction


def surrounding(word0, radius: int):
    return sorted({cx.mul(tuple(word0), v) for v in cx.word_ball(radius)}, key=lambda w: (len(w), w))


def boundary_chain(T: cx.Tessellation, words) -> dict:
    chain: dict = {}
    for w in words:
        for k, c in cx.chain_boundary(T, {("F0", w): 1}).items():
            chain[k] = chain.get(k, 0) + c
    return {k: c for k, c in chain.items() if c}


def _clearance(T, chain, X, Y, S=3.0, n=33):
    u = ((np.arange(n) + 0.5) / n)[:, None]
    dmin = np.inf
    for (name, w), c in chain.items():
        P = cx.cell_patch(T, name, w, S=S)
        x, y = P.param(u)
        ch = cosh_distance(x[:, None, :], y[:, None], X[None], Y[None])
        dmin = min(dmin, float(np.arccosh(np.max([np.min(ch), 1.0]))))
    return dmin


def reconstruct_u(psi, X, Y, radius: int = 1, R: float = 0.1, space: ModelSpace | None = None,
                  words=None):
    """u_psi at probe points (X (P, 1), Y (P,)): (1 / (scale 2 nu c)) sum over the boundary of Z.

    Z is the union of F0-translates w0 v, v in the word ball of the given radius,
    where w0 is the translate of F0 holding the points. All probes must share w0.
    """
    space = space or rh2()
    T = psi.T
    X = np.asarray(X, float).reshape(-1, 1)
    Y = np.asarray(Y, float).reshape(-1)
    if words is None:
        locs = [cx.locate(complex(a, b)) for a, b in zip(X[:, 0], Y)]
        w0s = {w for w, _ in locs}
        if len(w0s) != 1:
            raise ExpandBallError("probe points lie in different translates of the fundamental domain")
        for _, z0 in locs:
            if not cx.inside_F0(z0, T.Y):
                raise ExpandBallError("probe point outside the compact part; no admissible surrounding")
        words = surrounding(w0s.pop(), radius)
    chain = boundary_chain(T, words)
    if _clearance(T, chain, X, Y) < R:
        raise ExpandBallError("boundary of the surrounding comes within R of a probe point")
    tot = 0
    for (name, w), c in chain.items():
        tot = tot + c * psi.value(name, w, X, Y)
    return tot / (space.measure_scale * twonu_c(psi.nu, space))


@dataclass(frozen=True)
class InvarianceReport:
    max_deviation: float
    per_gamma: dict
    tolerance: float
    violated: bool


def invariance_check(u: Callable, gammas, X, Y, tol: float = 1e-3) -> InvarianceReport:
    """Sample u(gamma x) - u(x); u maps probe arrays to values; gammas are words."""
    X = np.asarray(X, float).reshape(-1, 1)
    Y = np.asarray(Y, float).reshape(-1)
    base = u(X, Y)
    scale = max(float(np.max(np.abs(base))), 1e-300)
    per = {}
    for g in gammas:
        M = cx.word_matrix(tuple(g))
        z = np.array([cx.moebius(M, complex(a, b)) for a, b in zip(X[:, 0], Y)])
        per[tuple(g)] = float(np.max(np.abs(u(z.real[:, None], z.imag) - base)) / scale)
    mx = max(per.values()) if per else 0.0
    return InvarianceReport(mx, per, tol, mx > tol)


def probe_points(n: int = 10, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-0.7, 0.7, n)[:, None]
    Y = rng.uniform(0.7, 2.0, n)
    return X, Y


def default_handles(nu=0.3):
    return [kernel_handle(0.3, nu), kernel_handle(-0.55, nu), kernel_handle(None, nu),
            bump_handle(0.4, 0.3, nu), bump_handle(-1.3, 0.5, nu)]

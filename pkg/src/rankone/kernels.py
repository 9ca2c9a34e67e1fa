"""Principal series on the boundary: J, tau_nu, Poisson kernels, c(nu), Q_nu."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import special
from scipy.integrate import solve_ivp, quad

from .space import (
    BoundaryPoint, DomainError, GroupElement, ModelSpace, bilinear, boundary_vector,
    chart_of_sphere, cosh_distance, iwasawa_kan, k_to_boundary, to_hyperboloid,
)


class PoleError(ValueError):
    def __init__(self, nu, msg="pole"):
        super().__init__(f"{msg} at nu={nu}")
        self.location = nu


class GridError(ValueError):
    pass


class SingularityError(ValueError):
    pass


def _is_half_int(z, tol=1e-12):
    z = complex(z)
    return abs(z.imag) < tol and abs(2 * z.real - round(2 * z.real)) < tol


@dataclass(frozen=True)
class SpectralParameter:
    nu: complex
    rho: float

    @property
    def eigenvalue(self) -> complex:
        return self.rho**2 - self.nu**2

    @property
    def s(self) -> complex:
        return self.rho + self.nu

    @property
    def nu_in_half_integers(self) -> bool:
        return _is_half_int(self.nu)

    @property
    def nu_in_half_integers_le_minus1(self) -> bool:
        return self.nu_in_half_integers and complex(self.nu).real <= -1 + 1e-12

    @property
    def abs_re_lt_rho(self) -> bool:
        return abs(complex(self.nu).real) < self.rho


def _cplx(nu):
    nu = complex(nu)
    return nu.real if nu.imag == 0 else nu


# ------------------------------------------------------------------ J and r_nu


def factor_J(g: GroupElement, b: BoundaryPoint) -> float:
    """J(g, b) = tI(g k_b) with k_b in K, k_b infinity = b; computed in closed form."""
    m = g.m.shape[0]
    o = to_hyperboloid(np.zeros(m - 2), np.float64(1.0))
    gio = g.inv().m @ o
    if b.is_inf:
        xi = np.zeros(m)
        xi[0] = 1.0
    else:
        bb = b.arr()
        xi = boundary_vector(bb) / (1 + bb @ bb)
    return float(-2 * bilinear(gio, xi))


def factor_J_decomp(g: GroupElement, b: BoundaryPoint) -> float:
    k = k_to_boundary(g.space, None if b.is_inf else b.arr())
    return iwasawa_kan(g @ k)[1]


def bracket(space: ModelSpace, x, y=1.0):
    """(y^2 + c|x1|^2)^2 + 4c|x2|^2."""
    x = np.asarray(x, float)
    x1 = x[..., : space.p]
    x2 = x[..., space.p:]
    return (y * y + space.c * np.sum(x1 * x1, axis=-1)) ** 2 + 4 * space.c * np.sum(x2 * x2, axis=-1)


def n_inverse_translate(space: ModelSpace, b, x):
    """n(b)^{-1} applied to x in the N-chart."""
    b = np.asarray(b, float)
    x = np.asarray(x, float)
    p = space.p
    d1 = x[..., :p] - b[..., :p]
    d2 = x[..., p:] - b[..., p:] + space.bform(-b[..., :p], x[..., :p])
    return np.concatenate([d1, d2], axis=-1)


def poisson_kernel(space: ModelSpace, b, x, y, nu, model: str = "line"):
    """r_nu(b; (x, y)); b is an array (finite) or None (the point at infinity).

    model="line": y^s ((y^2+c|x1'|^2)^2 + 4c|x2'|^2)^{-s/2} with x' = n(b)^{-1}x.
    model="prj":  the K-normalized kernel with r(b; o) = 1.
    """
    s = space.rho + _cplx(nu)
    y = np.asarray(y, float)
    if b is None:
        return y**s
    b = np.asarray(b, float)
    xp = n_inverse_translate(space, b, x)
    val = y**s * bracket(space, xp, y) ** (-s / 2)
    if model == "prj":
        val = val * bracket(space, b) ** (s / 2)
    elif model != "line":
        raise ValueError(model)
    return val


def poisson_kernel_grad(space: ModelSpace, b, x, y, nu, model: str = "line"):
    """Analytic gradient in (x, y) of the kernel (q = 0 closed form)."""
    if space.q:
        raise NotImplementedError("analytic gradient implemented for q = 0")
    s = space.rho + _cplx(nu)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    r = poisson_kernel(space, b, x, y, nu, model)
    if b is None:
        gx = np.zeros(x.shape, dtype=np.result_type(r, float))
        return np.concatenate([gx, (s * r / y)[..., None]], axis=-1)
    dx = x - np.asarray(b, float)
    D = y * y + np.sum(dx * dx, axis=-1)
    gx = (r * s * (-2 / D))[..., None] * dx
    gy = r * s * (1 / y - 2 * y / D)
    return np.concatenate([gx, gy[..., None]], axis=-1)


# --------------------------------------------------------------- measure on dS


def a0_numeric(space: ModelSpace) -> float:
    """Normalizing constant of db = a0 * bracket(x)^{-rho} dx, by quadrature."""
    n, p, q = space.n, space.p, space.q
    if q == 0:
        # radial: c_n int_0^inf r^{n-1} (1+c r^2)^{-2 rho} dr
        cn = 2 * np.pi ** (n / 2) / special.gamma(n / 2)
        I, _ = quad(lambda r: r ** (n - 1) * (1 + space.c * r * r) ** (-2 * space.rho), 0, np.inf,
                    epsabs=0, epsrel=1e-13, limit=200)
        return 1 / (cn * I)
    # p-dim radial in x1, q-dim radial in x2
    cp = 2 * np.pi ** (p / 2) / special.gamma(p / 2)
    cq = 2 * np.pi ** (q / 2) / special.gamma(q / 2)

    def inner(r1):
        A = (1 + space.c * r1 * r1) ** 2
        I2, _ = quad(lambda r2: r2 ** (q - 1) * (A + 4 * space.c * r2 * r2) ** (-space.rho), 0, np.inf,
                     epsabs=0, epsrel=1e-12)
        return r1 ** (p - 1) * I2

    I, _ = quad(inner, 0, np.inf, epsabs=0, epsrel=1e-11, limit=200)
    return 1 / (cp * cq * I)


def a0_value(space: ModelSpace) -> float:
    if space.q == 0 and space.c == 1.0:
        return 1 / np.pi  # RH2 and RH3; a0_numeric confirms
    return a0_numeric(space)


def boundary_density(space: ModelSpace, x):
    return a0_value(space) * bracket(space, x) ** (-space.rho)


# ----------------------------------------------------------- boundary functions


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """Quadrature-sampled function on dS.

    nodes: finite chart coordinates (N, n); weights: db-measure weights (sum to
    1 for full-sphere grids). func, if given, evaluates the function anywhere in
    the finite chart.
    """
    space: ModelSpace
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    singular_set: tuple = ()
    smoothness: str = "smooth"
    func: Callable | None = None
    kind: str = "sphere"
    grid_shape: tuple = ()

    def integral(self):
        return np.sum(self.weights * self.values)

    def lebesgue_weights(self):
        return self.weights / boundary_density(self.space, self.nodes)

    def with_values(self, values, func=None, singular_set=None):
        return replace(self, values=np.asarray(values), func=func,
                       singular_set=self.singular_set if singular_set is None else tuple(singular_set))

    def __call__(self, b):
        if self.func is not None:
            return self.func(np.asarray(b, float))
        if self.kind == "sphere" and self.space.n == 1:
            return fourier_interpolate(self, np.asarray(b, float))
        raise GridError("no evaluator off the grid for this boundary function")


def sphere_grid(space: ModelSpace, N: int = 64, func: Callable | None = None, M: int | None = None):
    """Full-sphere quadrature; no node sits at infinity."""
    if space.n == 1:
        if N % 2:
            N += 1
        th = 2 * np.pi * (np.arange(N) + 0.5) / N
        nodes = np.tan(th / 2)[:, None]
        w = np.full(N, 1 / N)
        shape = (N,)
    elif space.n == 2 and space.q == 0:
        M = M or N // 2
        t, wt = np.polynomial.legendre.leggauss(M)  # t = sigma_w = cos(alpha)
        phi = 2 * np.pi * (np.arange(N) + 0.5) / N
        T, PH = np.meshgrid(t, phi, indexing="ij")
        st = np.sqrt(1 - T**2)
        sig = np.stack([st * np.cos(PH), st * np.sin(PH), T], axis=-1).reshape(-1, 3)
        nodes = chart_of_sphere(sig)
        w = (np.outer(wt / 2, np.full(N, 1 / N))).reshape(-1)
        shape = (M, N)
    else:
        raise NotImplementedError("sphere grid for q = 0, n <= 2")
    vals = np.ones(len(nodes)) if func is None else np.asarray(func(nodes))
    return BoundaryFunction(space, nodes, w, vals, (), "analytic", func, "sphere", shape)


def smooth_bump(center, radius, height=1.0):
    center = np.atleast_1d(np.asarray(center, float))

    def f(x):
        x = np.asarray(x, float)
        r2 = np.sum((x - center) ** 2, axis=-1) / radius**2
        out = np.zeros(r2.shape)
        m = r2 < 1
        out[m] = height * np.exp(1 - 1 / (1 - r2[m]))
        return out

    return f


def bump_function(space: ModelSpace, center, radius, N: int = 80, height: float = 1.0,
                  func: Callable | None = None, line: bool = False):
    """Compactly supported boundary function with Gauss-Legendre nodes on its support.

    line=True stores plain Lebesgue weights dx instead of db-weights (the
    line-model integral of the Poisson transform with Lebesgue measure).
    """
    center = np.atleast_1d(np.asarray(center, float))
    f = func or smooth_bump(center, radius, height)
    if space.n == 1:
        t, wt = np.polynomial.legendre.leggauss(N)
        nodes = (center[0] + radius * t)[:, None]
        dx = radius * wt
    elif space.n == 2:
        t, wt = np.polynomial.legendre.leggauss(N)
        r = radius * (t + 1) / 2
        wr = radius * wt / 2
        L = 2 * N
        ph = 2 * np.pi * np.arange(L) / L
        R, PH = np.meshgrid(r, ph, indexing="ij")
        nodes = np.stack([center[0] + R * np.cos(PH), center[1] + R * np.sin(PH)], axis=-1).reshape(-1, 2)
        dx = (np.outer(wr * r, np.full(L, 2 * np.pi / L))).reshape(-1)
    else:
        raise NotImplementedError("bump grids for n <= 2")
    w = dx if line else dx * boundary_density(space, nodes)
    return BoundaryFunction(space, nodes, w, np.asarray(f(nodes)), (), "smooth", f,
                            "line" if line else "bump", (N,))


def fourier_interpolate(phi: BoundaryFunction, b):
    """Trigonometric interpolation of RH2 sphere-grid samples at chart points b."""
    N = phi.grid_shape[0]
    c = np.fft.fft(phi.values) / N
    k = np.fft.fftfreq(N, 1 / N)
    th = 2 * np.arctan(np.asarray(b)[..., 0])
    # nodes at theta_j = 2 pi (j + 1/2)/N
    shift = th[..., None] - np.pi / N
    terms = c * np.exp(1j * k * shift)
    if N % 2 == 0:
        # split the Nyquist mode symmetrically
        terms[..., N // 2] = c[N // 2] * np.cos(N / 2 * shift[..., 0])
    val = terms.sum(axis=-1)
    return val.real if np.isrealobj(phi.values) else val


def _J_array(g: GroupElement, b):
    """J(g, b) for an array of finite boundary points b (N, n)."""
    m = g.m.shape[0]
    o = to_hyperboloid(np.zeros(m - 2), np.float64(1.0))
    gio = g.inv().m @ o
    b = np.asarray(b, float)
    xi = boundary_vector(b) / (1 + np.sum(b * b, axis=-1))[..., None]
    return -2 * bilinear(gio[None], xi)


def tau_action(g: GroupElement, nu, f: BoundaryFunction) -> BoundaryFunction:
    """(tau_nu(g) f)(b) = J(g^{-1}, b)^{-(rho+nu)} f(g^{-1} b), on f's own nodes."""
    s = f.space.rho + _cplx(nu)
    gi = g.inv()

    def newf(b):
        b = np.asarray(b, float)
        gb = gi.act_boundary_array(b)
        bad = ~np.all(np.isfinite(gb), axis=-1)
        if np.any(bad):
            raise GridError("image of a node is infinity; use a grid avoiding g(infinity)")
        return _J_array(gi, b) ** (-s) * f(gb)

    vals = newf(f.nodes)
    sing = tuple(g.act_boundary(bp) for bp in f.singular_set)
    return replace(f, values=vals, func=newf, singular_set=sing)


# ------------------------------------------------------------ Poisson transform


def poisson_transform(phi: BoundaryFunction, x, y, nu):
    """Quadrature of r_nu^prj(b; (x, y)) phi(b) db (vectorized over points)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if phi.kind == "line":
        raise ValueError("line-model data: use poisson_transform_line")
    K = poisson_kernel(phi.space, phi.nodes, x[..., None, :], y[..., None], nu, model="prj")
    return np.sum(K * (phi.weights * phi.values), axis=-1)


def poisson_transform_line(phi: BoundaryFunction, x, y, nu):
    """Line-model transform: integral of phi(x') r^lnm(x'; (x,y)) dx' (Lebesgue)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    w = phi.weights if phi.kind == "line" else phi.lebesgue_weights()
    K = poisson_kernel(phi.space, phi.nodes, x[..., None, :], y[..., None], nu, model="line")
    return np.sum(K * (w * phi.values), axis=-1)


def poisson_transform_scaled(func: Callable, space: ModelSpace, y: float, nu, support: float, N: int = 200):
    """Value at a(y)o from the rescaled form: y^{rho-nu} int phi(y x1, y^2 x2) bracket(x)^{-s/2} dx."""
    s = space.rho + _cplx(nu)
    if space.n != 1:
        raise NotImplementedError("scaled form implemented for n = 1")
    R = support / y
    t, wt = np.polynomial.legendre.leggauss(N)
    xs = R * t
    vals = func((y * xs)[:, None]) * bracket(space, xs[:, None]) ** (-s / 2)
    return y ** (space.rho - _cplx(nu)) * np.sum(R * wt * vals)


def poisson_transform_adaptive(func: Callable, space: ModelSpace, x, y, nu, support):
    """Adaptive line-model Poisson integral for compactly supported data on RH2."""
    if space.n != 1:
        raise NotImplementedError
    a, b = support
    x0 = float(np.atleast_1d(x)[0])
    pts = [p for p in (x0 - y, x0, x0 + y) if a < p < b]

    def integrand(t, part):
        v = func(np.array([[t]]))[0] * poisson_kernel(space, np.array([t]), np.array([x0]), y, nu)
        return v.real if part == 0 else v.imag

    re, _ = quad(integrand, a, b, args=(0,), points=pts or None, epsabs=1e-14, epsrel=1e-11, limit=400)
    im, _ = quad(integrand, a, b, args=(1,), points=pts or None, epsabs=1e-14, epsrel=1e-11, limit=400)
    return re + 1j * im


# ---------------------------------------------------------------- c-function


def c_function(nu, space: ModelSpace):
    nu = _cplx(nu)
    p, q, rho = space.p, space.q, space.rho
    z = complex(nu)
    if abs(z.imag) < 1e-12 and z.real < 0.5 and abs(z.real - round(z.real)) < 1e-12:
        raise PoleError(nu, "c-function pole")
    num = 2 ** (rho - nu) * special.gamma((p + q + 1) / 2) * special.gamma(nu)
    den = special.gamma((p / 2 + 1 + nu) / 2) * special.gamma((p / 2 + q + nu) / 2)
    return num / den


def twonu_c(nu, space: ModelSpace):
    """2 nu c(nu), finite at nu = 0."""
    nu = _cplx(nu)
    p, q, rho = space.p, space.q, space.rho
    # 2 nu Gamma(nu) = 2 Gamma(nu + 1)
    num = 2 ** (rho - nu) * special.gamma((p + q + 1) / 2) * 2 * special.gamma(nu + 1)
    den = special.gamma((p / 2 + 1 + nu) / 2) * special.gamma((p / 2 + q + nu) / 2)
    return num / den


def c_function_mp(nu, space: ModelSpace, dps: int = 30):
    import mpmath as mp
    with mp.workdps(dps):
        nu = mp.mpc(complex(nu))
        p, q = mp.mpf(space.p), mp.mpf(space.q)
        rho = p / 2 + q
        v = (mp.power(2, rho - nu) * mp.gamma((p + q + 1) / 2) * mp.gamma(nu)
             / (mp.gamma((p / 2 + 1 + nu) / 2) * mp.gamma((p / 2 + q + nu) / 2)))
        return complex(v)


# ----------------------------------------------------------- resolvent profile


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Q_nu(r) = e^{-(rho+nu) r} F(r) with F from a backward ODE solve."""
    space: ModelSpace
    nu: complex
    r_min: float
    r_max: float
    sol: object
    normalization: dict = field(default_factory=dict)

    @property
    def s(self):
        return self.space.rho + self.nu

    def _F(self, r):
        r = np.asarray(r, float)
        if np.any(r < self.r_min * (1 - 1e-12)):
            raise DomainError(f"r below r_min={self.r_min}")
        rr = np.minimum(r, self.r_max)
        z = self.sol.sol(rr.reshape(-1)).reshape((2,) + r.shape)
        F = np.where(r > self.r_max, 1.0, z[0])
        dF = np.where(r > self.r_max, 0.0, z[1])
        return F, dF

    def __call__(self, r):
        F, _ = self._F(r)
        return np.exp(-self.s * np.asarray(r, float)) * F

    def deriv(self, r):
        r = np.asarray(r, float)
        F, dF = self._F(r)
        return np.exp(-self.s * r) * (dF - self.s * F)


def radial_coefficient(space: ModelSpace, r):
    """P(r) in the radial Laplacian -(d^2/dr^2 + P d/dr)."""
    r = np.asarray(r, float)
    out = space.p / np.tanh(r)
    if space.q:
        out = out + 2 * space.q / np.tanh(2 * r)
    return out


def resolvent_profile(nu, space: ModelSpace, r_max: float = 40.0, r_min: float = 1e-8,
                      rtol: float = 1e-12) -> RadialProfile:
    nu = complex(nu)
    sp = SpectralParameter(nu, space.rho)
    if sp.nu_in_half_integers_le_minus1:
        raise PoleError(nu, "excluded spectral parameter")
    if sp.nu_in_half_integers and nu.real < 0:
        warnings.warn("nu close to the excluded set; profile may be ill-conditioned")
    s = space.rho + nu
    lam = space.rho**2 - nu**2

    def rhs(r, z):
        F, dF = z
        P = radial_coefficient(space, r)
        return [dF, -(P - 2 * s) * dF - (s * s - s * P + lam) * F]

    y0 = np.array([1.0 + 0j, 0.0 + 0j])
    sol = solve_ivp(rhs, (r_max, r_min), y0, method="DOP853", rtol=rtol, atol=1e-14, dense_output=True)
    if not sol.success:
        raise RuntimeError(sol.message)
    return RadialProfile(space, _cplx(nu), r_min, r_max, sol, {"F(r_max)": 1.0, "seed": "e^{-(rho+nu) r}"})


def q_oracle(nu, space: ModelSpace, r):
    """Closed forms: RH3 e^{-nu r}/(2 sinh r); RH2 via the Legendre Q function."""
    import mpmath as mp
    r = np.atleast_1d(np.asarray(r, float))
    nu = complex(nu)
    if space.name == "rh3":
        return np.exp(-nu * r) / (2 * np.sinh(r))
    if space.name == "rh2":
        with mp.workdps(40):
            pref = mp.gamma(nu + 1) / (mp.sqrt(mp.pi) * mp.gamma(nu + 0.5))
            return np.array([complex(pref * mp.legenq(nu - 0.5, 0, mp.cosh(mp.mpf(t)), type=3)) for t in r])
    raise NotImplementedError


def q_kernel(profile: RadialProfile, x1, y1, x2, y2):
    ch = cosh_distance(x1, y1, x2, y2)
    if np.any(ch <= 1 + 1e-15):
        raise SingularityError("coincident points")
    return profile(np.arccosh(ch))


def q_kernel_grad(profile: RadialProfile, x1, y1, x2, y2):
    """Gradient of q_nu(p1; p2) in the second point's coordinates (x2, y2)."""
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    y1 = np.asarray(y1, float)
    y2 = np.asarray(y2, float)
    ch = cosh_distance(x1, y1, x2, y2)
    if np.any(ch <= 1 + 1e-15):
        raise SingularityError("coincident points")
    r = np.arccosh(ch)
    fac = profile.deriv(r) / np.sinh(r)
    gx = (x2 - x1) / (y1 * y2)[..., None]
    gy = 1 / y1 - ch / y2
    return np.concatenate([fac[..., None] * gx, (fac * gy)[..., None]], axis=-1)


def resolvent_integral_radial(profile: RadialProfile, g: Callable, support: float, a: float,
                              N: int = 400, M: int = 256):
    """int q_nu(x; y) g(dist(y, o)) dmu(y) on RH2 for radial g supported in dist < support,
    where dist(x, o) = a. Geodesic polar coordinates about x; dmu = sinh r dr dtheta."""
    if profile.space.n != 1:
        raise NotImplementedError("radial resolvent check on RH2")
    t, w = np.polynomial.legendre.leggauss(N)
    rmax = a + support
    r = rmax * (t + 1) / 2
    wr = w * rmax / 2
    th = 2 * np.pi * np.arange(M) / M
    R_, TH = np.meshgrid(r, th, indexing="ij")
    cd = np.cosh(R_) * np.cosh(a) - np.sinh(R_) * np.sinh(a) * np.cos(TH)
    d = np.arccosh(np.maximum(cd, 1.0))
    vals = np.where(d < support, g(np.maximum(d, 1e-7)), 0.0)
    return np.sum(wr[:, None] * (2 * np.pi / M) * profile(R_) * vals * np.sinh(R_))

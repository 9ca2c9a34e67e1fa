"""Truncated Poisson integrals near the boundary and the support scan at 0."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath as mp
import numpy as np
import sympy as sp
from scipy import special
from scipy.integrate import quad

from .space import ModelSpace


class DispatchError(ValueError):
    pass


def ball_factor(n: int) -> float:
    """c_n = 2 pi^{n/2} / Gamma(n/2), the area of the unit sphere in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


@dataclass
class Hyp2F1Context:
    a: complex
    b: complex
    c: complex
    strategy: str = ""
    log: list = field(default_factory=list)

    def __call__(self, z):
        real_params = all(np.isreal(v) for v in (self.a, self.b, self.c))
        if real_params and np.isreal(z):
            v = special.hyp2f1(float(np.real(self.a)), float(np.real(self.b)), float(np.real(self.c)),
                               float(np.real(z)))
            if np.isfinite(v):
                self.strategy = "scipy"
                return float(v)
        self.strategy = "mpmath"
        with mp.workdps(30):
            v = complex(mp.hyp2f1(self.a, self.b, self.c, z))
        return v.real if v.imag == 0 else v


def hyp2f1(a, b, c, z):
    return Hyp2F1Context(a, b, c)(z)


def hyp2f1_euler(a, b, c, z):
    """Euler integral representation (Re c > Re b > 0), for validation."""
    B = math.gamma(b) * math.gamma(c - b) / math.gamma(c)
    f = lambda t: t ** (b - 1) * (1 - t) ** (c - b - 1) * (1 - z * t) ** (-a)
    v, _ = quad(f, 0, 1, epsabs=0, epsrel=1e-13, limit=200)
    return v / B


def pi_integral_quadrature(n: int, delta: float, h: float, F: Callable, t: float) -> float:
    """c_n int_0^delta F(t^2 + h r^2) r^{n-1} dr."""
    g = lambda r: F(t * t + h * r * r) * r ** (n - 1)
    pts = [min(t / math.sqrt(h), delta / 2)] if t / math.sqrt(h) < delta else None
    v, _ = quad(g, 0, delta, points=pts, epsabs=0, epsrel=1e-13, limit=400)
    return ball_factor(n) * v


@dataclass(frozen=True)
class PIResult:
    case: str
    nonanalytic: float
    analytic: float
    leading_coefficient: float
    leading_kind: str  # "power" t^{n-2w}, "log" log t, "t2klog" t^{2k} log t

    @property
    def total(self):
        return self.nonanalytic + self.analytic


def _classify(n: int, w):
    k = n / 2 - w
    if abs(np.imag(w)) < 1e-15 and abs(k - round(np.real(k))) < 1e-12 and round(np.real(k)) >= 0:
        kk = int(round(np.real(k)))
        return ("b", 0) if kk == 0 else ("c", kk)
    return ("a", None)


def pi_total(n: int, delta: float, h: float, w, t: float):
    """Whole truncated integral: c_n t^{-2w} delta^n / n * 2F1(w, n/2; n/2+1; -h delta^2/t^2)."""
    with mp.workdps(30):
        v = (ball_factor(n) * mp.power(t, -2 * w) * delta**n / n
             * mp.hyp2f1(w, n / 2, n / 2 + 1, -h * delta**2 / t**2))
        v = complex(v)
    return v.real if v.imag == 0 else v


def pi_integral_closed(n: int, delta: float, h: float, w, t: float, case: str | None = None) -> PIResult:
    kind, k = _classify(n, w)
    if case is not None and case != kind:
        raise DispatchError(f"w={w} belongs to case ({kind}), not ({case})")
    cn = ball_factor(n)
    if kind == "a":
        lead = cn * math.gamma(n / 2) * complex(mp.gamma(w - n / 2)) / (2 * h ** (n / 2) * complex(mp.gamma(w)))
        lead = lead.real if np.isreal(w) else lead
        non = lead * t ** (n - 2 * w)
        ana = cn * delta ** (n - 2 * w) * h ** (-w) / (n - 2 * w) * hyp2f1(w, w - n / 2, w - n / 2 + 1,
                                                                            -t * t / (h * delta * delta))
        return PIResult("a", non, ana, lead, "power")
    if kind == "b":
        lead = -cn * h ** (-n / 2)
        non = lead * math.log(t)
        ana = pi_total(n, delta, h, w, t) - non
        return PIResult("b", non, ana, lead, "log")
    # w = n/2 - k
    lead = -cn * (-1) ** k * math.gamma(n / 2) / (h ** (n / 2) * math.factorial(k)) * (
        1 / math.gamma(n / 2 - k) if not (n % 2 == 0 and k >= n // 2) else 0.0)
    non = lead * t ** (2 * k) * math.log(t)
    ana = pi_total(n, delta, h, w, t) - non
    return PIResult("c", non, ana, lead, "t2klog")


def pi_log_constant(n: int, delta: float, h: float) -> float:
    """Value at t = 0 of the analytic part in the w = n/2 case."""
    cn = ball_factor(n)
    return cn / (2 * h ** (n / 2)) * (math.log(h) - np.euler_gamma - special.digamma(n / 2)) + cn * h ** (
        -n / 2) * math.log(delta)


# ----------------------------------------------------------------- A function


def b0_coefficient(space: ModelSpace, nu) -> complex:
    """Coefficient of phi(0) y^{-2nu} in A(phi; rho+nu, y) for q = 0 (c = 1)."""
    n = space.n
    return math.pi ** (n / 2) * complex(mp.gamma(nu)) / complex(mp.gamma(space.rho + nu))


def _radial_integral(func: Callable, space: ModelSpace, R: float, kern: Callable, y: float, nth: int = 64):
    """int_{|x| < R} func(x) kern(|x|^2) dx, adaptive in the radius."""
    n = space.n
    if n == 1:
        def g(r, part):
            v = (func(np.array([[r]]))[0] + func(np.array([[-r]]))[0]) * kern(r * r)
            return np.real(v) if part == 0 else np.imag(v)
    elif n == 2:
        th = 2 * np.pi * np.arange(nth) / nth

        def g(r, part):
            pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
            v = r * (2 * np.pi / nth) * np.sum(func(pts)) * kern(r * r)
            return np.real(v) if part == 0 else np.imag(v)
    else:
        raise NotImplementedError
    brk = [p for p in (y, 3 * y, 10 * y) if p < R]
    re, _ = quad(g, 0, R, args=(0,), points=brk or None, epsabs=1e-15, epsrel=1e-12, limit=500)
    im, _ = quad(g, 0, R, args=(1,), points=brk or None, epsabs=1e-15, epsrel=1e-12, limit=500)
    return re + 1j * im


def a_function(phi: Callable, space: ModelSpace, nu, ys, R: float):
    """A(phi; rho+nu, y) = int phi(x) (y^2 + |x|^2)^{-(rho+nu)} dx (q = 0, c = 1) for y in ys.

    phi is supported in |x| < R. Returns (A values, y dA/dy values).
    """
    s = space.rho + nu
    A, D = [], []
    for y in ys:
        A.append(_radial_integral(phi, space, R, lambda r2: (y * y + r2) ** (-s), y))
        D.append(_radial_integral(phi, space, R, lambda r2: -2 * s * y * y * (y * y + r2) ** (-s - 1), y))
    return np.array(A), np.array(D)


def a_function_scaled(phi: Callable, space: ModelSpace, nu, y: float, R: float):
    """Same value from the rescaled form y^{-2nu} int phi(y x) (1 + |x|^2)^{-(rho+nu)} dx."""
    s = space.rho + nu
    f = lambda x: phi(y * np.asarray(x))
    return y ** (-2 * nu) * _radial_integral(f, space, R / y, lambda r2: (1 + r2) ** (-s), 1.0)


@dataclass(frozen=True)
class ScanResult:
    verdict: str
    coefficient: complex  # fitted B with D ~ -2 nu B y^{-2nu} + ...
    phi0_estimate: complex
    b0: complex
    exponent: float
    margin: float
    residual: float
    error_budget: float


def fit_leading(ys, D, nu):
    """Least squares D(y) ~ -2nu B y^{-2nu} + E y^{1-2nu} + F y^{2-2nu} + G y^2."""
    ys = np.asarray(ys, float)
    cols = [-2 * nu * ys ** (-2 * nu), ys ** (1 - 2 * nu), ys ** (2 - 2 * nu), ys**2]
    M = np.stack(cols, axis=1).astype(complex)
    # column scaling for conditioning
    sc = np.linalg.norm(M, axis=0)
    coef, res, *_ = np.linalg.lstsq(M / sc, D.astype(complex), rcond=None)
    coef = coef / sc
    fitted = (M @ coef)
    rel = np.max(np.abs(fitted - D)) / np.max(np.abs(D))
    return coef, rel


def support_scan(phi: Callable, space: ModelSpace, nu, R: float, threshold: float = 1e-3,
                 ys=None) -> ScanResult:
    """Decide whether phi(0) vanishes from the y^{-2nu} coefficient of A(phi; y)."""
    z = complex(nu)
    if not (0 < z.real < space.rho) or (abs(z.imag) < 1e-14 and abs(2 * z.real - round(2 * z.real)) < 1e-12):
        raise ValueError("scan needs 0 < Re nu < rho and nu not a half integer")
    nu = z.real if z.imag == 0 else z
    if ys is None:
        ys = np.geomspace(1e-3, 1e-1, 25)
    _, D = a_function(phi, space, nu, ys, R)
    coef, rel = fit_leading(ys, D, nu)
    b0 = b0_coefficient(space, nu)
    B = coef[0]
    est = B / b0
    small = ys[: len(ys) // 3]
    slope = np.polyfit(np.log(small), np.log(np.abs(D[: len(small)])), 1)[0]
    margin = abs(est) / threshold
    verdict = "nonzero-at-0" if abs(est) > threshold else "zero-at-0"
    # error budget: phi - phi(0) = O(|x|) contributes at relative order y
    budget = float(abs(coef[1]) * ys[0] + abs(coef[2]) * ys[0] ** 2) / max(abs(b0), 1e-300)
    return ScanResult(verdict, B, est, b0, float(slope), float(margin), float(rel), budget)


# ------------------------------------------------------- derivatives of delta


def delta_derivative_poisson(alpha, space: ModelSpace, x, y, nu):
    """P_nu(d^alpha delta_0) at (x, y): (-1)^{|alpha|} d_b^alpha r^lnm(b; x, y) at b = 0 (q = 0)."""
    alpha = tuple(alpha)
    n = space.n
    B = sp.symbols(f"b1:{n + 1}", real=True)
    X = sp.symbols(f"x1:{n + 1}", real=True)
    Y = sp.Symbol("y", positive=True)
    S = sp.Symbol("s")
    N = Y**2 + sum((X[i] - B[i]) ** 2 for i in range(n))
    expr = Y**S * N ** (-S)
    for i, a in enumerate(alpha):
        if a:
            expr = sp.diff(expr, B[i], a)
    expr = (-1) ** sum(alpha) * expr.subs({b: 0 for b in B})
    f = sp.lambdify((*X, Y, S), expr, "numpy")
    s = space.rho + nu
    x = np.atleast_1d(np.asarray(x, float))
    return f(*x, y, s)


def probe_growth(alpha, space: ModelSpace, nu, a, ys):
    """Values along x = a y^{1/2} and the fitted log-log exponent."""
    a = np.atleast_1d(np.asarray(a, float))
    vals = np.array([delta_derivative_poisson(alpha, space, a * math.sqrt(y), y, nu) for y in ys])
    expo = np.polyfit(np.log(ys), np.log(np.abs(vals)), 1)[0]
    return vals, float(expo)

"""Rank-one model spaces in normalized horospherical coordinates.

A point is (x, y) with x in R^{p+q} and y > 0; the origin o is (0, 1).
For the real hyperbolic instances (q = 0) the group G = SO_0(d, 1) is
realized by Lorentz matrices acting on (u, X, v) with quadratic form
Q = |X|^2 - u v, and a point (x, y) corresponds to the hyperboloid vector

    P(x, y) = ((y^2 + |x|^2)/y, x/y, 1/y),   Q(P) = -1.

CH2 (p=2, q=1) is available behind a flag for metric, Laplacian and germ
computations only; it has no matrix realization here.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.stats import special_ortho_group


class DomainError(ValueError):
    pass


class InvalidElement(ValueError):
    pass


CH2_FLAG = "RANKONE_ENABLE_CH2"


def ch2_enabled() -> bool:
    return os.environ.get(CH2_FLAG, "") not in ("", "0", "false", "no")


@dataclass(frozen=True)
class ModelSpace:
    name: str
    p: int
    q: int = 0
    c: float = 1.0
    kappa: float = 0.0
    # flux of q_nu through small spheres is measure_scale * 2 nu c(nu)
    measure_scale: float = np.pi

    @property
    def rho(self) -> float:
        return self.p / 2 + self.q

    @property
    def d(self) -> int:
        return self.p + self.q + 1

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def has_group(self) -> bool:
        return self.q == 0

    def bform(self, x1, u1):
        """Structure map b: R^p x R^p -> R^q."""
        x1 = np.asarray(x1, float)
        u1 = np.asarray(u1, float)
        if self.q == 0:
            return np.zeros(x1.shape[:-1] + (0,))
        # CH2: b(x,u) = kappa (x1 u2 - x2 u1)
        return self.kappa * (x1[..., :1] * u1[..., 1:2] - x1[..., 1:2] * u1[..., :1])

    def Cmat(self, x1):
        """p x q matrix with C[j, l] = b(x1, e_j)_l."""
        x1 = np.asarray(x1, float)
        if self.q == 0:
            return np.zeros(x1.shape[:-1] + (self.p, 0))
        k = self.kappa
        return np.stack([-k * x1[..., 1:2], k * x1[..., 0:1]], axis=-2)

    def bdiag(self):
        """sum_j b(e_j, e_j), the first-order coefficient vector of L1."""
        e = np.eye(self.p)
        return sum((self.bform(e[j], e[j]) for j in range(self.p)), np.zeros(self.q))

    def require_group(self):
        if not self.has_group:
            raise NotImplementedError(f"{self.name}: no matrix realization of G is built")


def rh2() -> ModelSpace:
    return ModelSpace("rh2", 1, 0)


def rh3() -> ModelSpace:
    return ModelSpace("rh3", 2, 0)


def ch2(kappa: float = 1.0, c: float = 1.0, force: bool = False) -> ModelSpace:
    if not (force or ch2_enabled()):
        raise RuntimeError(f"CH2 is optional; set {CH2_FLAG}=1 or pass force=True")
    return ModelSpace("ch2", 2, 1, c=c, kappa=kappa)


def get_space(name: str) -> ModelSpace:
    name = name.lower()
    if name == "rh2":
        return rh2()
    if name == "rh3":
        return rh3()
    if name == "ch2":
        return ch2()
    raise KeyError(name)


@dataclass(frozen=True)
class Point:
    x: np.ndarray
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, float)))
        if not self.y > 0:
            raise DomainError(f"y must be positive, got {self.y}")


@dataclass(frozen=True)
class BoundaryPoint:
    x: tuple | None  # None is the point at infinity

    @staticmethod
    def inf() -> "BoundaryPoint":
        return BoundaryPoint(None)

    @staticmethod
    def at(x) -> "BoundaryPoint":
        return BoundaryPoint(tuple(float(v) for v in np.atleast_1d(x)))

    @property
    def is_inf(self) -> bool:
        return self.x is None

    def arr(self):
        return None if self.x is None else np.array(self.x)


def origin(space: ModelSpace) -> Point:
    return Point(np.zeros(space.n), 1.0)


# ---------------------------------------------------------------- Lorentz model


def _gram(m: int) -> np.ndarray:
    J = np.zeros((m, m))
    J[0, -1] = J[-1, 0] = -0.5
    J[1:-1, 1:-1] = np.eye(m - 2)
    return J


def bilinear(P1, P2):
    """B(P, P') = X.X' - (u v' + u' v)/2, vectorized over leading axes."""
    P1 = np.asarray(P1)
    P2 = np.asarray(P2)
    return (np.sum(P1[..., 1:-1] * P2[..., 1:-1], axis=-1)
            - 0.5 * (P1[..., 0] * P2[..., -1] + P2[..., 0] * P1[..., -1]))


def to_hyperboloid(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    r2 = np.sum(x * x, axis=-1)
    return np.concatenate([((y * y + r2) / y)[..., None], x / y[..., None], (1 / y)[..., None]], axis=-1)


def from_hyperboloid(P):
    P = np.asarray(P)
    v = P[..., -1]
    return P[..., 1:-1] / v[..., None], 1 / v


def boundary_vector(b):
    """Null vector of a finite boundary point (|b|^2, b, 1)."""
    b = np.asarray(b, float)
    return np.concatenate([np.sum(b * b, axis=-1)[..., None], b, np.ones(b.shape[:-1] + (1,))], axis=-1)


INF_VECTOR_TAG = "inf"


def _inf_vector(m):
    e = np.zeros(m)
    e[0] = 1.0
    return e


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Lorentz matrix acting on (u, X, v); kind is a cached classification."""
    space: ModelSpace
    m: np.ndarray
    kind: str = "generic"

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        kind = self.kind if self.kind == other.kind and self.kind in ("N", "A", "K", "e") else "generic"
        if self.kind == "e":
            kind = other.kind
        elif other.kind == "e":
            kind = self.kind
        return GroupElement(self.space, self.m @ other.m, kind)

    def inv(self) -> "GroupElement":
        J = _gram(self.m.shape[0])
        Ji = np.linalg.inv(J)
        return GroupElement(self.space, Ji @ self.m.T @ J, self.kind)

    def act(self, x, y):
        """Vectorized action on horospherical coordinates."""
        return from_hyperboloid(to_hyperboloid(x, y) @ self.m.T)

    def __call__(self, pt: Point) -> Point:
        x, y = self.act(pt.x, np.float64(pt.y))
        return Point(x, float(y))

    def act_boundary(self, b: BoundaryPoint, tol: float = 1e-13) -> BoundaryPoint:
        m = self.m.shape[0]
        xi = _inf_vector(m) if b.is_inf else boundary_vector(b.arr())
        w = self.m @ xi
        scale = np.max(np.abs(w))
        if abs(w[-1]) <= tol * scale:
            return BoundaryPoint.inf()
        return BoundaryPoint.at(w[1:-1] / w[-1])

    def act_boundary_array(self, b):
        """Finite boundary points -> finite images; infinite images give inf entries."""
        w = boundary_vector(b) @ self.m.T
        with np.errstate(divide="ignore", invalid="ignore"):
            return w[..., 1:-1] / w[..., -1:]

    def act_with_jacobian(self, x, y):
        """Image (x', y') and the Jacobian d(x', y')/d(x, y), shape (..., d, d)."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        n = x.shape[-1]
        P = to_hyperboloid(x, y)
        # dP/d(x, y)
        dP = np.zeros(x.shape[:-1] + (n + 2, n + 1))
        dP[..., 0, :n] = 2 * x / y[..., None]
        dP[..., 0, n] = 1 - np.sum(x * x, axis=-1) / y**2
        dP[..., 1:-1, :n] = np.eye(n) / y[..., None, None]
        dP[..., 1:-1, n] = -x / y[..., None] ** 2
        dP[..., -1, n] = -1 / y**2
        Q = P @ self.m.T
        dQ = self.m @ dP
        v = Q[..., -1]
        xn = Q[..., 1:-1] / v[..., None]
        yn = 1 / v
        Jx = dQ[..., 1:-1, :] / v[..., None, None] - Q[..., 1:-1, None] * dQ[..., -1:, :] / v[..., None, None] ** 2
        Jy = -dQ[..., -1:, :] / v[..., None, None] ** 2
        return xn, yn, np.concatenate([Jx, Jy], axis=-2)

    def check(self, tol: float = 1e-9):
        g = self.m
        J = _gram(g.shape[0])
        if not np.all(np.isfinite(g)):
            raise InvalidElement("non-finite matrix")
        scale = max(1.0, np.linalg.norm(g) ** 2)
        if np.linalg.norm(g.T @ J @ g - J) > tol * scale:
            raise InvalidElement("matrix does not preserve the quadratic form")
        if abs(np.linalg.det(g) - 1) > tol * scale ** (g.shape[0] / 2):
            raise InvalidElement("determinant is not 1")
        o = to_hyperboloid(np.zeros(g.shape[0] - 2), np.float64(1.0))
        go = g @ o
        if go[0] + go[-1] <= 0:
            raise InvalidElement("element reverses time orientation")
        return self


def element(space: ModelSpace, m, kind: str = "generic", check: bool = True) -> GroupElement:
    space.require_group()
    g = GroupElement(space, np.array(m, float), kind)
    return g.check() if check else g


def identity(space: ModelSpace) -> GroupElement:
    space.require_group()
    return GroupElement(space, np.eye(space.d + 1), "e")


def n_elem(space: ModelSpace, b) -> GroupElement:
    space.require_group()
    b = np.atleast_1d(np.asarray(b, float))
    m = np.eye(space.d + 1)
    m[0, 1:-1] = 2 * b
    m[0, -1] = b @ b
    m[1:-1, -1] = b
    return GroupElement(space, m, "N")


def a_elem(space: ModelSpace, t: float) -> GroupElement:
    space.require_group()
    if not t > 0:
        raise DomainError("a(t) needs t > 0")
    m = np.eye(space.d + 1)
    m[0, 0] = t
    m[-1, -1] = 1 / t
    return GroupElement(space, m, "A")


def w_elem(space: ModelSpace) -> GroupElement:
    """Inversion: swaps 0 and infinity; fixes o."""
    space.require_group()
    m = np.zeros((space.d + 1, space.d + 1))
    m[0, -1] = m[-1, 0] = 1
    m[1:-1, 1:-1] = np.eye(space.d - 1)
    m[1, 1] = -1
    return GroupElement(space, m, "K")


def _T(m: int) -> np.ndarray:
    T = np.eye(m)
    T[0, 0], T[0, -1], T[-1, 0], T[-1, -1] = 1, 1, 1, -1
    return T


def k_elem(space: ModelSpace, R) -> GroupElement:
    """K element from R in SO(d) acting on (X, w1), w0 = (u+v)/2, w1 = (u-v)/2."""
    space.require_group()
    m = space.d + 1
    D = np.eye(m)
    D[1:, 1:] = np.asarray(R, float)
    # (X, w1) occupy slots 1..m-1 after moving w1 to the end
    T = _T(m)
    # T maps (w0, X, w1) -> (u, X, v)
    return GroupElement(space, T @ D @ np.linalg.inv(T), "K")


def k_to_boundary(space: ModelSpace, b) -> GroupElement:
    """A K element taking infinity to the finite boundary point b (or e for None)."""
    if b is None:
        return identity(space)
    b = np.atleast_1d(np.asarray(b, float))
    nb = b @ b
    sigma = np.concatenate([2 * b, [nb - 1]]) / (nb + 1)
    return k_elem(space, _rotation_e_last_to(sigma))


def _rotation_e_last_to(s) -> np.ndarray:
    d = len(s)
    e = np.zeros(d)
    e[-1] = 1
    cos = float(np.clip(s @ e, -1, 1))
    u = s - cos * e
    nu = np.linalg.norm(u)
    if nu < 1e-15:
        if cos > 0:
            return np.eye(d)
        R = np.eye(d)
        R[-1, -1] = -1
        R[0, 0] = -1
        return R
    u = u / nu
    sin = nu
    R = np.eye(d) + sin * (np.outer(u, e) - np.outer(e, u)) + (cos - 1) * (np.outer(u, u) + np.outer(e, e))
    return R


def sphere_of(b):
    b = np.asarray(b, float)
    nb = np.sum(b * b, axis=-1)
    return np.concatenate([2 * b, (nb - 1)[..., None]], axis=-1) / (nb + 1)[..., None]


def chart_of_sphere(s):
    s = np.asarray(s, float)
    return s[..., :-1] / (1 - s[..., -1:])


def random_element(space: ModelSpace, rng: np.random.Generator, spread: float = 1.0) -> GroupElement:
    x = rng.normal(scale=spread, size=space.n)
    t = float(np.exp(rng.normal(scale=spread)))
    R = special_ortho_group.rvs(space.d, random_state=rng) if space.d > 1 else np.eye(1)
    return n_elem(space, x) @ a_elem(space, t) @ k_elem(space, R)


# ----------------------------------------------------------- decompositions


def iwasawa_nak(g: GroupElement, verify: bool = True):
    g.check()
    sp = g.space
    o = to_hyperboloid(np.zeros(sp.n), np.float64(1.0))
    x, y = from_hyperboloid(g.m @ o)
    n = n_elem(sp, x)
    a = a_elem(sp, float(y))
    k = GroupElement(sp, a.inv().m @ n.inv().m @ g.m, "K")
    if verify:
        ko = k.m @ o
        if np.linalg.norm(ko - o) > 1e-8 * max(1.0, np.linalg.norm(g.m)):
            raise InvalidElement("residual of NAK decomposition is not in K")
    return n, float(y), k


def iwasawa_kan(g: GroupElement, verify: bool = True):
    n1, t1, k1 = iwasawa_nak(g.inv(), verify)
    return k1.inv(), 1.0 / t1, n1.inv()


def tJ(g: GroupElement) -> float:
    return iwasawa_nak(g)[1]


def tI(g: GroupElement) -> float:
    return iwasawa_kan(g)[1]


def tJ_explicit(x, y, space: ModelSpace):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.any(y <= 0):
        raise DomainError("y must be positive")
    x1 = x[..., : space.p]
    x2 = x[..., space.p:]
    r1 = np.sum(x1 * x1, axis=-1)
    r2 = np.sum(x2 * x2, axis=-1)
    return y / np.sqrt((y * y + space.c * r1) ** 2 + 4 * space.c * r2)


def calibrate_c(space: ModelSpace, rng: np.random.Generator, samples: int = 200) -> float:
    """Least-squares c from tJ(w n(x) a(y)) = y / (y^2 + c|x|^2) (q = 0)."""
    space.require_group()
    w = w_elem(space)
    num = den = 0.0
    for _ in range(samples):
        x = rng.normal(size=space.n)
        y = float(np.exp(rng.normal()))
        t = tJ(w @ n_elem(space, x) @ a_elem(space, y))
        s = y / t
        r2 = x @ x
        num += r2 * (s - y * y)
        den += r2 * r2
    return num / den


# ------------------------------------------------------------ metric, distance


def distance(x1, y1, x2, y2):
    """Vectorized hyperbolic distance for q = 0 spaces."""
    ch = -bilinear(to_hyperboloid(x1, y1), to_hyperboloid(x2, y2))
    return np.arccosh(np.maximum(ch, 1.0))


def cosh_distance(x1, y1, x2, y2):
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    y1 = np.asarray(y1, float)
    y2 = np.asarray(y2, float)
    return (np.sum((x1 - x2) ** 2, axis=-1) + y1 * y1 + y2 * y2) / (2 * y1 * y2)


def point_distance(p1: Point, p2: Point) -> float:
    return float(distance(p1.x, np.float64(p1.y), p2.x, np.float64(p2.y)))


@dataclass(frozen=True)
class MetricMatrix:
    g: np.ndarray
    ginv: np.ndarray
    sqrt_det: float


def metric_matrix(space: ModelSpace, x, y: float) -> np.ndarray:
    p, q = space.p, space.q
    C = space.Cmat(np.asarray(x, float)[:p])
    d = space.d
    G = np.zeros((d, d))
    G[:p, :p] = np.eye(p) / y**2 + C @ C.T / y**4
    G[:p, p:p + q] = -C / y**4
    G[p:p + q, :p] = -C.T / y**4
    G[p:p + q, p:p + q] = np.eye(q) / y**4
    G[-1, -1] = 1 / y**2
    return G


def metric_inverse(space: ModelSpace, x, y: float) -> np.ndarray:
    p, q = space.p, space.q
    C = space.Cmat(np.asarray(x, float)[:p])
    d = space.d
    Gi = np.zeros((d, d))
    Gi[:p, :p] = y**2 * np.eye(p)
    Gi[:p, p:p + q] = y**2 * C
    Gi[p:p + q, :p] = y**2 * C.T
    Gi[p:p + q, p:p + q] = y**4 * np.eye(q) + y**2 * C.T @ C
    Gi[-1, -1] = y**2
    return Gi


def metric_at(pt: Point, space: ModelSpace) -> MetricMatrix:
    return MetricMatrix(metric_matrix(space, pt.x, pt.y), metric_inverse(space, pt.x, pt.y),
                        pt.y ** (-2 * space.rho - 1))


# ---------------------------------------------------------------- Laplacian

_D1 = np.array([1, -8, 0, 8, -1]) / 12.0
_D2 = np.array([-1, 16, -30, 16, -1]) / 12.0
_OFF = np.arange(-2, 3)


def _stencil(space: ModelSpace, x, y):
    """Second-order pattern (pairs with nonzero coefficient) of the Laplacian."""
    d = space.d
    Gi = metric_inverse(space, x, y)
    pairs = [(i, j) for i in range(d) for j in range(i, d) if Gi[i, j] != 0 or i == j]
    return Gi, pairs


def laplacian_apply(f, space: ModelSpace, x, y: float, h: float | None = None):
    """Delta f at (x, y); f takes arrays (x[..., n], y[...]) and broadcasts.

    Delta = -y^2 d_y^2 + (2 rho - 1) y d_y - y^2 L1 - y^4 L2, the positive
    operator (eigenvalue rho^2 - nu^2 on y^{rho+nu}).
    """
    x = np.atleast_1d(np.asarray(x, float))
    y = float(y)
    if h is None:
        h = 1e-3 * y
    if y - 2 * h <= 0:
        raise DomainError("stencil leaves the upper half space; shrink h")
    d = space.d
    Gi, pairs = _stencil(space, x, y)
    base = np.concatenate([x, [y]])
    pts = []
    wts = []
    first = np.zeros(d)
    first[-1] = (2 * space.rho - 1) * y
    if space.q:
        first[space.p:space.d - 1] = -y**2 * space.bdiag()
    for i, j in pairs:
        coef = Gi[i, j] * (1 if i == j else 2)
        if i == j:
            for o, w in zip(_OFF, _D2):
                if w == 0:
                    continue
                z = base.copy()
                z[i] += o * h
                pts.append(z)
                wts.append(-coef * w / h**2)
        else:
            for oi, wi in zip(_OFF, _D1):
                for oj, wj in zip(_OFF, _D1):
                    if wi == 0 or wj == 0:
                        continue
                    z = base.copy()
                    z[i] += oi * h
                    z[j] += oj * h
                    pts.append(z)
                    wts.append(-coef * wi * wj / h**2)
    for i in range(d):
        if first[i] == 0:
            continue
        for o, w in zip(_OFF, _D1):
            if w == 0:
                continue
            z = base.copy()
            z[i] += o * h
            pts.append(z)
            wts.append(first[i] * w / h)
    pts = np.array(pts)
    vals = np.asarray(f(pts[:, :-1], pts[:, -1]))
    return np.dot(np.array(wts), vals)


def gradient_fd(f, x, y: float, h: float | None = None):
    """4th-order central gradient in (x, y)."""
    x = np.atleast_1d(np.asarray(x, float))
    if h is None:
        h = 1e-4 * y
    base = np.concatenate([x, [y]])
    d = len(base)
    pts = np.repeat(base[None], 4 * d, axis=0)
    offs = [-2, -1, 1, 2]
    for i in range(d):
        for k, o in enumerate(offs):
            pts[4 * i + k, i] += o * h
    vals = np.asarray(f(pts[:, :-1], pts[:, -1])).reshape(d, 4)
    return vals @ np.array([1, -8, 8, -1]) / (12 * h)


def sl2_to_element(space: ModelSpace, M) -> GroupElement:
    """Lorentz matrix of the Moebius map z -> (az+b)/(cz+d) on RH2.

    Uses H(z) = (1/y) [[|z|^2 + y^2, x], [x, 1]] with H(gz) = g H gᵀ and
    (u, X, v) = (H11, H12, H22).
    """
    if space.n != 1 or space.q:
        raise ValueError("SL2 adapter is for RH2")
    g = np.asarray(M, float)
    if abs(np.linalg.det(g) - 1) > 1e-9:
        raise InvalidElement("not in SL2(R)")
    basis = [np.array([[1.0, 0], [0, 0]]), np.array([[0, 1.0], [1.0, 0]]), np.array([[0, 0], [0, 1.0]])]
    L = np.zeros((3, 3))
    for k, H in enumerate(basis):
        Hn = g @ H @ g.T
        L[:, k] = [Hn[0, 0], Hn[0, 1], Hn[1, 1]]
    return GroupElement(space, L, "generic")

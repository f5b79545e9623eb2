"""Closed-form kernels and explicit solutions on the unit ball.

Point arguments are arrays of shape ``(n,)`` or ``(m, n)``; a single point
returns a float, a stack of points returns an array.  Scalars are accepted
for n = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special as sps

from .quadrature import poisson_rule
from .special import DomainError, FracParams, c_const


@dataclass(frozen=True)
class Point:
    coords: np.ndarray
    norm: float = field(init=False)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coords, dtype=float))
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "norm", float(np.linalg.norm(c)))

    @property
    def delta(self) -> float:
        """Distance to the unit sphere."""
        return abs(1.0 - self.norm)


@dataclass(frozen=True)
class BoundaryPoint:
    direction: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.direction, dtype=float))
        nrm = np.linalg.norm(d)
        if nrm == 0:
            raise DomainError("boundary direction must be nonzero")
        object.__setattr__(self, "direction", d / nrm)


def as_points(x, n: int):
    """Return (array of shape (m, n), was_single)."""
    if isinstance(x, (Point, BoundaryPoint)):
        x = x.coords if isinstance(x, Point) else x.direction
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    single = a.ndim == 1
    a = np.atleast_2d(a)
    if n == 1 and a.shape[-1] != 1:
        a = a.reshape(-1, 1)
        single = False if a.shape[0] > 1 else single
    if a.shape[-1] != n:
        raise DomainError(f"expected points in R^{n}, got shape {np.shape(x)}")
    return a, single


def _out(v, single):
    v = np.asarray(v, dtype=float)
    return float(v[0]) if single else v


def _sq(a):
    return np.einsum("ij,ij->i", a, a)


def eta_r(p: FracParams, r: float, y):
    """Exit density of the ball B_r: c r^2s / (|y|^n (|y|^2 - r^2)^s) off B_r, else 0."""
    if r <= 0:
        raise DomainError("eta_r needs r > 0")
    Y, single = as_points(y, p.n)
    ry = np.sqrt(_sq(Y))
    out = np.zeros(ry.size)
    m = ry > r
    out[m] = p.c_ns * r ** (2 * p.s) / (ry[m] ** p.n * (ry[m] ** 2 - r * r) ** p.s)
    return _out(out, single)


def fundamental_solution(p: FracParams, x):
    """Riesz kernel Gamma((n-2s)/2) / (4^s pi^(n/2) Gamma(s)) |x|^(2s-n), for n > 2s."""
    const = p.riesz_const
    X, single = as_points(x, p.n)
    r = np.sqrt(_sq(X))
    if np.any(r == 0):
        raise DomainError("fundamental solution is singular at the origin")
    return _out(const * r ** (2 * p.s - p.n), single)


def ball_poisson(p: FracParams, x, y):
    """Poisson kernel c/|x-y|^n ((1-|x|^2)/(|y|^2-1))^s for |x| < 1 < |y|."""
    X, sx = as_points(x, p.n)
    Y, sy = as_points(y, p.n)
    ax, ay = _sq(X), _sq(Y)
    if np.any(ax >= 1):
        raise DomainError("ball_poisson needs |x| < 1")
    if np.any(ay <= 1):
        raise DomainError("ball_poisson needs |y| > 1")
    d = np.sqrt(_sq(X - Y))
    val = p.c_ns / d**p.n * ((1 - ax) / (ay - 1)) ** p.s
    return _out(val, sx and sy)


def ball_martin(p: FracParams, x, th):
    """Martin kernel in the half-c normalization: (c/2) (1-|x|^2)^s / |x-th|^n."""
    X, sx = as_points(x, p.n)
    T, st = as_points(th, p.n)
    T = T / np.sqrt(_sq(T))[:, None]
    ax = _sq(X)
    if np.any(ax >= 1):
        raise DomainError("ball_martin needs |x| < 1")
    val = 0.5 * p.c_ns * (1 - ax) ** p.s / np.sqrt(_sq(X - T)) ** p.n
    return _out(val, sx and st)


def martin_limit_coeff(p: FracParams) -> float:
    """Coefficient k with lim G_B(x,y)/delta(y)^s = k (1-|x|^2)^s/|x-th|^n."""
    n, s = p.n, p.s
    return sps.gamma(n / 2) / (2**s * np.pi ** (n / 2) * sps.gamma(s) * sps.gamma(1 + s))


def martin_green_limit(p: FracParams, x, th):
    """The boundary limit of G_B(x, y)/delta(y)^s as y -> th radially."""
    X, sx = as_points(x, p.n)
    T, st = as_points(th, p.n)
    T = T / np.sqrt(_sq(T))[:, None]
    ax = _sq(X)
    if np.any(ax >= 1):
        raise DomainError("martin_green_limit needs |x| < 1")
    val = martin_limit_coeff(p) * (1 - ax) ** p.s / np.sqrt(_sq(X - T)) ** p.n
    return _out(val, sx and st)


def torsion(p: FracParams, R: float, x):
    """Solution of (-Delta)^s phi = 1 in B_R, phi = 0 outside."""
    if R <= 0:
        raise DomainError("torsion needs R > 0")
    X, single = as_points(x, p.n)
    val = p.gamma_coeff * np.maximum(R * R - _sq(X), 0.0) ** p.s
    return _out(val, single)


def _green_closed(p: FracParams, X, Y):
    n, s = p.n, p.s
    b = n / 2 - s
    d2 = _sq(X - Y)
    num = (1 - _sq(X)) * (1 - _sq(Y))
    tot = num + d2
    # G = kappa d2^(-b) int_0^z u^(s-1) (1-u)^(b-1) du, z = num / (num + d2)
    z = num / tot
    w = d2 / tot
    out = np.empty(z.size)
    lo = z <= 0.5
    zl = z[lo]
    out[lo] = d2[lo] ** (-b) * zl**s / s * sps.hyp2f1(s, 1 - b, s + 1, zl)
    hi = ~lo
    if np.any(hi):
        wh, dh, th = w[hi], d2[hi], tot[hi]
        if abs(b) < 1e-12:
            # logarithmic case n = 2s: int_0^z u^(-1/2) (1-u)^(-1) du = 2 atanh(sqrt z)
            out[hi] = np.log((1 + np.sqrt(z[hi])) ** 2 / wh)
        else:
            # complement around u = 1, continued analytically in b when b < 0
            full = sps.gamma(s) * sps.gamma(b) / sps.gamma(s + b)
            out[hi] = full * dh ** (-b) - th ** (-b) / b * sps.hyp2f1(b, 1 - s, b + 1, wh)
    return p.green_const * out


def ball_green(p: FracParams, x, y, method: str = "closed", **rule_kw):
    """Green function of the unit ball, symmetric and nonnegative.

    ``method="closed"`` evaluates the classical closed form through a
    hypergeometric function (valid for every n, s).  ``method="subtract"``
    computes Gamma_s(x - y) - H(x, y), with H the s-harmonic extension of
    Gamma_s(x - .) evaluated at y by the Poisson rule (needs n > 2s).
    """
    X, sx = as_points(x, p.n)
    Y, sy = as_points(y, p.n)
    X, Y = np.broadcast_arrays(X, Y)
    single = sx and sy
    inside = (_sq(X) < 1) & (_sq(Y) < 1)
    if np.any(inside & (_sq(X - Y) == 0)):
        raise DomainError("ball_green is singular at x = y")
    out = np.zeros(X.shape[0])
    if not np.any(inside):
        return _out(out, single)
    Xi, Yi = X[inside], Y[inside]
    if method == "closed":
        out[inside] = _green_closed(p, Xi, Yi)
    elif method == "subtract":
        if p.n <= 2 * p.s:
            raise DomainError("the subtraction construction needs n > 2s; use method='closed'")
        vals = []
        for xi, yi in zip(Xi, Yi):
            rule = poisson_rule(p, yi, decay=(p.n - 2 * p.s) / 2, **rule_kw)
            H = rule.integrate(lambda z: fundamental_solution(p, z - xi))
            vals.append(fundamental_solution(p, xi - yi) - H)
        out[inside] = vals
    else:
        raise ValueError(f"unknown method {method!r}")
    return _out(out, single)


def green_lower_const(p: FracParams) -> float:
    """inf of G_B(x, y) / (delta(x) delta(y))^s over the ball, reached at antipodal boundary points."""
    return p.green_const * 4.0**p.s / (p.s * 2.0**p.n)


def explicit_usigma(p: FracParams, sigma: float, x):
    """The explicit s-harmonic family u_sigma; +inf on the unit sphere."""
    s = p.s
    if not (0 < sigma <= 1 - s + 1e-15):
        raise DomainError(f"sigma must lie in (0, 1-s] = (0, {1 - s}], got {sigma}")
    X, single = as_points(x, p.n)
    a = _sq(X)
    out = np.empty(a.size)
    inn, ext, on = a < 1, a > 1, a == 1
    out[inn] = p.c_ns / (1 - a[inn]) ** sigma
    if abs(sigma - (1 - s)) <= 1e-15:
        out[ext] = 0.0
    else:
        out[ext] = c_const(p.n, s + sigma) / (a[ext] - 1) ** sigma
    out[on] = np.inf
    return _out(out, single)


def g_sigma(p: FracParams, sigma: float):
    """Exterior datum of u_sigma as a vectorized field."""

    def g(y):
        Y, _ = as_points(y, p.n)
        a = _sq(Y)
        return c_const(p.n, p.s + sigma) / np.abs(a - 1) ** sigma

    return g

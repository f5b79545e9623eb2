"""Deterministic integration rules.

Everything here is a rule builder or an integrator for one of the integral
types that appear in potential theory on the unit ball:

* endpoint-singular 1-D rules (Gauss-Jacobi, geometrically graded composites),
* sphere rules and harmonic-measure rules on spheres,
* exterior integrals over {|y| > 1} with the (|y|^2 - 1)^(-s) edge singularity,
* Poisson-kernel rules for the exterior datum of the Dirichlet problem,
* polar rules about an interior point for Green potentials,
* ray integrals about a point for eta_r averages and the outer part of the
  principal-value fractional Laplacian.

Singularity exponents are always declared by the caller.  Nothing in this
module tries to detect them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import special as sps

from .special import DomainError, FracParams

Field = Callable[[np.ndarray], np.ndarray]


class AccuracyError(RuntimeError):
    """A refinement check disagreed by more than the requested tolerance."""


class NonIntegrableError(DomainError):
    """The declared boundary exponent makes the integral divergent."""


# ---------------------------------------------------------------------------
# 1-D rules
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _gauss_jacobi01(n: int, a: float, b: float):
    # weight t^a (1-t)^b on [0, 1]
    # scipy divides 0/0 in an unused branch when a + b = -1
    with np.errstate(invalid="ignore", divide="ignore"):
        x, w = sps.roots_jacobi(n, b, a)
    t = 0.5 * (x + 1.0)
    w = w * 0.5 ** (a + b + 1.0)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def gauss_jacobi01(n: int, a: float = 0.0, b: float = 0.0):
    """Nodes and weights for int_0^1 t^a (1-t)^b phi(t) dt."""
    if a <= -1 or b <= -1:
        raise NonIntegrableError(f"Jacobi exponents must exceed -1, got a={a}, b={b}")
    return _gauss_jacobi01(int(n), float(a), float(b))


def gauss_legendre01(n: int):
    return _gauss_jacobi01(int(n), 0.0, 0.0)


@dataclass(frozen=True)
class RadialRule:
    nodes: np.ndarray
    weights: np.ndarray
    jacobi_exponent: float


def beta_rule(s: float, n_nodes: int = 64) -> RadialRule:
    """Gauss-Jacobi rule in v for the weight v^(s-1) (1-v)^(-s) on (0, 1).

    This is the radial law of the exit density after the substitution
    v = |y|^-2; its total mass is B(s, 1-s) = pi / sin(pi s).
    """
    t, w = gauss_jacobi01(n_nodes, s - 1.0, -s)
    return RadialRule(np.array(t), np.array(w), -s)


def graded_rule(a: float, b: float, left: float | None = None, right: float | None = None,
                n: int = 12, ratio: float = 0.2, levels: int = 10):
    """Composite Gauss rule on [a, b] graded geometrically toward singular ends.

    ``left``/``right`` declare the integrand as (t-a)^left * smooth (resp.
    (b-t)^right * smooth).  ``None`` means the end is regular.  The innermost
    panel at a singular end is a Gauss-Jacobi panel with the declared weight,
    the others are Gauss-Legendre panels whose widths shrink by ``ratio``.
    The returned weights apply to the integrand itself.
    """
    a = float(a)
    b = float(b)
    L = b - a
    if L <= 0:
        return np.empty(0), np.empty(0)
    if left is not None and right is not None:
        mid = a + 0.5 * L
        t1, w1 = graded_rule(a, mid, left, None, n, ratio, levels)
        t2, w2 = graded_rule(mid, b, None, right, n, ratio, levels)
        return np.concatenate([t1, t2]), np.concatenate([w1, w2])
    if left is None and right is None:
        t, w = gauss_legendre01(n)
        return a + L * t, L * w
    flip = right is not None
    exp = right if flip else left
    if exp <= -1:
        raise NonIntegrableError(f"endpoint exponent {exp} is not integrable")
    # breakpoints measured from the singular end
    edges = L * ratio ** np.arange(levels + 1)
    ts, ws = [], []
    gl_t, gl_w = gauss_legendre01(n)
    for k in range(levels):
        lo, hi = edges[k + 1], edges[k]
        ts.append(lo + (hi - lo) * gl_t)
        ws.append((hi - lo) * gl_w)
    h = edges[-1]
    jt, jw = gauss_jacobi01(n, exp, 0.0)
    ts.append(h * jt)
    ws.append(h * jw * jt ** (-exp) if exp != 0 else h * jw)
    d = np.concatenate(ts)
    w = np.concatenate(ws)
    return (b - d if flip else a + d), w


def segment_rule(breaks: Sequence[float], left: float | None = None, right: float | None = None,
                 n: int = 12, ratio: float = 0.2, levels: int = 10, inner_n: int | None = None):
    """Rule on [breaks[0], breaks[-1]] with interior breakpoints.

    The first and last panels are graded toward singular ends; interior
    panels are plain Gauss-Legendre.
    """
    br = [float(v) for v in breaks]
    m = len(br) - 1
    if m == 1:
        return graded_rule(br[0], br[1], left, right, n, ratio, levels)
    inner_n = inner_n or 2 * n
    ts, ws = [], []
    for k in range(m):
        lo, hi = br[k], br[k + 1]
        if hi <= lo:
            continue
        le = left if k == 0 else None
        ri = right if k == m - 1 else None
        if le is None and ri is None:
            t, w = gauss_legendre01(inner_n)
            ts.append(lo + (hi - lo) * t)
            ws.append((hi - lo) * w)
        else:
            t, w = graded_rule(lo, hi, le, ri, n, ratio, levels)
            ts.append(t)
            ws.append(w)
    return np.concatenate(ts), np.concatenate(ws)


def pairwise_sum(values: np.ndarray) -> float:
    """Fixed-order pairwise summation (bit-stable for a given array length)."""
    v = np.asarray(values, dtype=float).ravel()
    while v.size > 1:
        if v.size % 2:
            v = np.append(v, 0.0)
        v = v[0::2] + v[1::2]
    return float(v[0]) if v.size else 0.0


# ---------------------------------------------------------------------------
# sphere rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SphereRule:
    directions: np.ndarray
    weights: np.ndarray


def _orthonormal_frame(axis: np.ndarray) -> np.ndarray:
    """Rows: axis, then an orthonormal completion."""
    n = axis.size
    e = axis / np.linalg.norm(axis)
    if n == 1:
        return e.reshape(1, 1)
    M = np.eye(n)
    M[:, 0] = e
    q, _ = np.linalg.qr(M)
    if q[:, 0] @ e < 0:
        q = -q
    return q.T


def sphere_rule(n: int, degree: int = 32) -> SphereRule:
    """Quadrature on S^{n-1} with weights summing to its surface measure.

    n = 2 uses ``degree`` equispaced points; n = 3 uses a product
    Gauss-Legendre (in cos of the polar angle) x trapezoid rule with
    ``degree`` azimuths and ``degree // 2`` polar nodes.
    """
    if n == 1:
        return SphereRule(np.array([[1.0], [-1.0]]), np.array([1.0, 1.0]))
    if n == 2:
        m = int(degree)
        phi = 2 * np.pi * (np.arange(m) + 0.5) / m
        d = np.column_stack([np.cos(phi), np.sin(phi)])
        return SphereRule(d, np.full(m, 2 * np.pi / m))
    if n == 3:
        m = int(degree)
        k = max(m // 2, 2)
        c, wc = sps.roots_legendre(k)
        phi = 2 * np.pi * (np.arange(m) + 0.5) / m
        C, P = np.meshgrid(c, phi, indexing="ij")
        S = np.sqrt(1 - C**2)
        d = np.column_stack([(S * np.cos(P)).ravel(), (S * np.sin(P)).ravel(), C.ravel()])
        w = (wc[:, None] * np.full(m, 2 * np.pi / m)[None, :]).ravel()
        return SphereRule(d, w)
    raise DomainError(f"unsupported dimension {n}")


def default_sphere_degree(n: int) -> int:
    return {1: 1, 2: 128, 3: 24}[n]


def axial_sphere_rule(n: int, axis: np.ndarray, cluster: float | None = None,
                      degree: int | None = None, n_panel: int = 8) -> SphereRule:
    """Sphere rule with polar axis ``axis``.

    Without ``cluster`` this is :func:`sphere_rule` rotated onto ``axis``.
    With ``cluster`` the polar angle is split into panels graded
    geometrically toward the equator, at scale ``cluster``.
    """
    axis = np.asarray(axis, dtype=float)
    if n == 1:
        e = np.sign(axis[0]) or 1.0
        return SphereRule(np.array([[e], [-e]]), np.array([1.0, 1.0]))
    frame = _orthonormal_frame(axis)
    degree = degree or default_sphere_degree(n)
    if cluster is None:
        rule = sphere_rule(n, degree)
        if n == 3:
            # put the polar axis (last coordinate) on frame[0]
            d = rule.directions[:, [2, 0, 1]] @ frame
        else:
            d = rule.directions @ frame
        return SphereRule(d, rule.weights)
    # polar angle panels graded toward the tangent cone phi = pi/2, where
    # the exit distance of a ray changes on the scale ``cluster``
    h = max(float(cluster), 1e-12)
    off = []
    while h < np.pi / 4:
        off.append(h)
        h *= 3.0
    off = np.array(off)
    edges = np.unique(np.concatenate([[0.0, np.pi / 2, np.pi], np.pi / 2 - off, np.pi / 2 + off]))
    gt, gw = gauss_legendre01(n_panel)
    phi = np.concatenate([lo + (hi - lo) * gt for lo, hi in zip(edges[:-1], edges[1:])])
    wphi = np.concatenate([(hi - lo) * gw for lo, hi in zip(edges[:-1], edges[1:])])
    if n == 2:
        phi = np.concatenate([phi, -phi])
        wphi = np.concatenate([wphi, wphi])
        local = np.column_stack([np.cos(phi), np.sin(phi)])
        return SphereRule(local @ frame, wphi)
    m = max(degree, 8)
    az = 2 * np.pi * (np.arange(m) + 0.5) / m
    P, A = np.meshgrid(phi, az, indexing="ij")
    W = (wphi * np.sin(phi))[:, None] * np.full(m, 2 * np.pi / m)[None, :]
    local = np.column_stack([np.cos(P).ravel(), (np.sin(P) * np.cos(A)).ravel(),
                             (np.sin(P) * np.sin(A)).ravel()])
    return SphereRule(local @ frame, W.ravel())


def harmonic_measure_rule(n: int, x: np.ndarray, rho: float, n_ang: int = 32,
                          n_az: int = 16) -> SphereRule:
    """Classical harmonic measure of the sphere |y| = rho seen from |x| < rho.

    Returns unit directions theta_j and probability weights so that
    sum_j w_j g(rho theta_j) approximates the average of g against
    (rho^2 - |x|^2) / (omega rho) |x - y|^{-n} dS(y).  The parametrizations
    are mass-uniform, so the rule stays accurate as |x| -> rho.
    """
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    axis = x / r if r > 0 else np.eye(n)[0]
    if n == 1:
        wp = (rho + r) / (2 * rho)
        return SphereRule(np.array([[axis[0]], [-axis[0]]]), np.array([wp, 1.0 - wp]))
    frame = _orthonormal_frame(axis)
    if n == 2:
        psi = -np.pi + 2 * np.pi * (np.arange(n_ang) + 0.5) / n_ang
        k = (rho - r) / (rho + r)
        phi = 2 * np.arctan(k * np.tan(psi / 2))
        local = np.column_stack([np.cos(phi), np.sin(phi)])
        return SphereRule(local @ frame, np.full(n_ang, 1.0 / n_ang))
    # n == 3: mass-uniform in q = |x - y|^{-1}, smoothed at both ends
    v, wv = gauss_legendre01(n_ang)
    U = 0.5 * (1 - np.cos(np.pi * v))
    dU = 0.5 * np.pi * np.sin(np.pi * v) * wv
    if r == 0:
        cphi = 1 - 2 * U
    else:
        q0, q1 = 1.0 / (rho - r), 1.0 / (rho + r)
        q = q0 - U * (q0 - q1)
        cphi = np.clip((rho**2 + r**2 - q**-2) / (2 * r * rho), -1.0, 1.0)
    sphi = np.sqrt(np.maximum(0.0, 1 - cphi**2))
    az = 2 * np.pi * (np.arange(n_az) + 0.5) / n_az
    C = np.repeat(cphi, n_az)
    S = np.repeat(sphi, n_az)
    A = np.tile(az, cphi.size)
    local = np.column_stack([C, S * np.cos(A), S * np.sin(A)])
    w = np.repeat(dU, n_az) / n_az
    return SphereRule(local @ frame, w)


# ---------------------------------------------------------------------------
# exterior integrals
# ---------------------------------------------------------------------------


def _apply(f: Field, pts: np.ndarray) -> np.ndarray:
    return np.asarray(f(pts), dtype=float).reshape(pts.shape[0])


def integrate_exterior(p: FracParams, f: Field, tol: float = 1e-8, *, edge_exp: float | None = None,
                       decay: float | None = None, n_nodes: int = 64,
                       sphere_degree: int | None = None) -> float:
    """Integral of ``f`` over {|y| > 1}.

    ``f`` must behave like (|y|^2 - 1)^(-edge_exp) at the unit sphere and like
    |y|^(-n - 2 decay) at infinity (both default to s).  After v = |y|^-2 the
    integral becomes int_0^1 v^(decay-1) (1-v)^(-edge_exp) phi(v) dv, done by
    Gauss-Jacobi; the result at ``n_nodes`` is checked against ``2 n_nodes``.
    """
    a = p.s if edge_exp is None else float(edge_exp)
    b = p.s if decay is None else float(decay)
    if a >= 1:
        raise NonIntegrableError(f"edge exponent {a} >= 1 is not integrable at |y| = 1")
    if b <= 0:
        raise AccuracyError(f"integrand must decay faster than |y|^-n (decay={b})")
    sph = sphere_rule(p.n, sphere_degree or default_sphere_degree(p.n))

    def run(m):
        v, w = gauss_jacobi01(m, b - 1.0, -a)
        rho = v ** -0.5
        pts = (rho[:, None, None] * sph.directions[None, :, :]).reshape(-1, p.n)
        F = _apply(f, pts).reshape(v.size, -1) @ sph.weights
        # (1/2) v^{-n/2-1} F  =  v^{b-1} (1-v)^{-a} * phi
        phi = 0.5 * v ** (-p.n / 2.0 - b) * (1 - v) ** a * F
        return pairwise_sum(w * phi)

    r1 = run(n_nodes)
    r2 = run(2 * n_nodes)
    if not np.isfinite(r2) or abs(r2 - r1) > tol * max(1.0, abs(r2)):
        raise AccuracyError(f"exterior integral not converged: {r1!r} vs {r2!r}")
    return r2


@dataclass(frozen=True)
class PointRule:
    """Nodes and weights; ``integrate(f)`` is sum w f(nodes)."""

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f: Field) -> float:
        return pairwise_sum(self.weights * _apply(f, self.nodes))


def poisson_rule(p: FracParams, x: np.ndarray, *, sigma: float = 0.0, decay: float = 0.0,
                 radial: bool = False, breaks: Sequence[float] = (), n_rad: int = 12,
                 levels: int = 10, n_ang: int | None = None) -> PointRule:
    """Rule for y -> int_{|y|>1} P_B(x, y) g(y) dy at an interior point x.

    Uses the exact factorization of the ball Poisson kernel into a
    Beta(1-s, s) law in w = t / (t + 1 - |x|^2), t = |y|^2 - 1, and the
    classical harmonic measure of the sphere |y| = sqrt(1 + t) seen from x.
    ``g`` is assumed to behave like t^(-sigma) near the sphere and like
    |y|^(-2 decay) at infinity.  ``breaks`` lists exterior radii where g is
    not smooth.  With ``radial`` the angular average is skipped.
    """
    n, s = p.n, p.s
    x = np.asarray(x, dtype=float).reshape(n)
    r2 = float(x @ x)
    eps = 1.0 - r2
    if eps <= 0:
        raise DomainError("poisson_rule needs |x| < 1")
    if sigma + s >= 1:
        raise NonIntegrableError(f"datum exponent sigma={sigma} is not admissible for s={s}")
    le = -s - sigma
    ri = s - 1.0 + decay
    wb = sorted({0.0, 1.0, *[(R * R - 1) / (R * R - 1 + eps) for R in breaks if R > 1]})
    if len(wb) > 2:
        # g keeps its t^-sigma profile past a break near the sphere: grade away from it
        wb = sorted(set(wb) | set(wb[1] * 3.0 ** np.arange(1, 60)[wb[1] * 3.0 ** np.arange(1, 60) < 0.5]))
    w, ww = segment_rule(wb, le, ri, n=n_rad, levels=levels)
    tau = w / (1 - w)
    rho = np.sqrt(1.0 + eps * tau)
    scale = p.c_ns * p.omega / 2.0
    ww = ww * w ** (-s) * (1 - w) ** (s - 1)
    if radial:
        axis = x / math.sqrt(r2) if r2 > 0 else np.eye(n)[0]
        nodes = rho[:, None] * axis[None, :]
        return PointRule(nodes, scale * ww)
    if n_ang is None:
        n_ang = {1: 1, 2: 48, 3: 24}[n]
    nodes, weights = [], []
    for rk, wk in zip(rho, ww):
        hm = harmonic_measure_rule(n, x, rk, n_ang=n_ang)
        nodes.append(rk * hm.directions)
        weights.append(scale * wk * hm.weights)
    return PointRule(np.concatenate(nodes), np.concatenate(weights))


# ---------------------------------------------------------------------------
# interior (ball) rules
# ---------------------------------------------------------------------------


def _exit_distance(x: np.ndarray, dirs: np.ndarray, R: float = 1.0) -> np.ndarray:
    b = dirs @ x
    return -b + np.sqrt(np.maximum(b * b + R * R - x @ x, 0.0))


def ball_polar_rule(n: int, x: np.ndarray, *, center_exp: float | None = None,
                    edge_exp: float | None = None, layers: Sequence[float] = (),
                    n_rad: int = 12, levels: int = 10, sphere_degree: int | None = None) -> PointRule:
    """Rule for int_B F(y) dy in polar coordinates about x in B.

    ``center_exp`` declares F(x + rho theta) rho^(n-1) ~ rho^center_exp at
    rho = 0 (e.g. 2s - 1 for a Green kernel); ``edge_exp`` declares
    F ~ delta(y)^edge_exp at the unit sphere.  ``layers`` adds breakpoints
    where delta(y) equals the listed values.  Near the sphere the polar angle
    is clustered toward the directions tangent to it.
    """
    x = np.asarray(x, dtype=float).reshape(n)
    r = float(np.linalg.norm(x))
    if r >= 1:
        raise DomainError("ball_polar_rule needs |x| < 1")
    delta = 1.0 - r
    axis = x / r if r > 0 else np.eye(n)[0]
    cluster = 0.5 * math.sqrt(1.0 - r * r) if (n > 1 and delta < 0.2) else None
    sph = axial_sphere_rule(n, axis, cluster=cluster, degree=sphere_degree)
    nodes, weights = [], []
    for th, wth in zip(sph.directions, sph.weights):
        rs = float(_exit_distance(x, th[None, :])[0])
        br = [0.0]
        for lay in sorted(layers, reverse=True):
            if lay >= delta or lay <= 0:
                continue
            rl = float(_exit_distance(x, th[None, :], 1.0 - lay)[0])
            if 0 < rl < rs:
                br.append(rl)
        br.append(rs)
        rho, w = segment_rule(br, center_exp, edge_exp, n=n_rad, levels=levels)
        nodes.append(x[None, :] + rho[:, None] * th[None, :])
        weights.append(wth * w * rho ** (n - 1))
    return PointRule(np.concatenate(nodes), np.concatenate(weights))


def integrate_ball(p: FracParams, f: Field, tol: float = 1e-8, *, beta: float = 0.0,
                   n_rad: int = 12) -> float:
    """Integral over the unit ball of f with f ~ delta(y)^(-beta) at the sphere.

    Requires beta < 1 + s (the admissible range for right-hand sides); the
    integral itself is computed about the origin with a graded radial rule.
    """
    if beta >= 1 + p.s:
        raise NonIntegrableError(f"datum exponent beta={beta} >= 1+s={1 + p.s}")
    if beta >= 1:
        raise NonIntegrableError(f"int_B delta^(-{beta}) diverges")

    def run(m):
        rule = ball_polar_rule(p.n, np.zeros(p.n), center_exp=None if p.n == 1 else p.n - 1.0,
                               edge_exp=-beta if beta else None, n_rad=m)
        return rule.integrate(f)

    r1, r2 = run(n_rad), run(2 * n_rad)
    if abs(r2 - r1) > tol * max(1.0, abs(r2)):
        raise AccuracyError(f"ball integral not converged: {r1!r} vs {r2!r}")
    return r2


# ---------------------------------------------------------------------------
# ray integrals about a point
# ---------------------------------------------------------------------------


def ray_integral(n: int, F: Field, x: np.ndarray, r0: float, kernel: Callable[[np.ndarray], np.ndarray],
                 *, kernel_left: float | None, kernel_decay: float, R: float = 1.0,
                 in_exp: float | None = 0.0, out_exp: float | None = 0.0, decay: float = 0.0,
                 outside_zero: bool = False, n_rad: int = 16, levels: int = 10,
                 sphere_degree: int | None = None) -> float:
    """int_{|y| > r0} K(|y|) F(x + y) dy for a field F structured by the sphere |z| = R.

    ``kernel(rho, d)`` must return K(rho) rho^(n-1), with d = rho - r0
    passed separately for accuracy near r0; it behaves like
    (rho - r0)^kernel_left at r0 and like rho^(-1 - kernel_decay) at infinity.
    F behaves like (R^2 - |z|^2)^in_exp inside, (|z|^2 - R^2)^out_exp outside,
    and like |z|^(-2 decay) at infinity.  Requires |x| + r0 < R; each ray is
    split where it crosses the sphere so that the angular integrand is smooth.
    """
    x = np.asarray(x, dtype=float).reshape(n)
    if np.linalg.norm(x) + r0 >= R:
        raise DomainError("ray_integral needs |x| + r0 < R")
    sph = sphere_rule(n, sphere_degree or default_sphere_degree(n))
    total = np.zeros(sph.weights.size)
    for j, th in enumerate(sph.directions):
        rs = float(_exit_distance(x, th[None, :], R)[0])
        # geometric panels keep a power-law kernel resolved when rs >> r0;
        # the rule lives in the offset d = rho - r0 so the kernel sees d exactly
        m = max(1, int(math.ceil(math.log(rs / r0) / math.log(3.0))))
        br = r0 * (np.geomspace(1.0, rs / r0, m + 1) - 1.0)
        br[-1] = rs - r0
        d, w = segment_rule(br, kernel_left, in_exp, n=n_rad, levels=levels)
        rho = r0 + d
        pts = x[None, :] + rho[:, None] * th[None, :]
        acc = pairwise_sum(w * kernel(rho, d) * _apply(F, pts))
        if not outside_zero:
            # rho = rs / t, t in (0, 1]
            t, wt = graded_rule(0.0, 1.0, kernel_decay + 2 * decay - 1.0, out_exp, n=n_rad, levels=levels)
            rho = rs / t
            pts = x[None, :] + rho[:, None] * th[None, :]
            acc += pairwise_sum(wt * rs / t**2 * kernel(rho, rho - r0) * _apply(F, pts))
        total[j] = acc
    return pairwise_sum(total * sph.weights)


def eta_average(p: FracParams, F: Field, x: np.ndarray, r: float, **kw) -> float:
    """(eta_r * F)(x) = int_{|y|>r} eta_r(y) F(x + y) dy (eta_r is even)."""
    n, s = p.n, p.s
    coef = p.c_ns * r ** (2 * s)

    def kern(rho, d):
        return coef / (rho * (d * (rho + r)) ** s)

    return ray_integral(n, F, x, r, kern, kernel_left=-s, kernel_decay=2 * s, **kw)


def frac_laplacian_pv(p: FracParams, u: Field, x: np.ndarray, h_cut: float | None = None, *,
                      R: float = 1.0, in_exp: float | None = 0.0, out_exp: float | None = 0.0,
                      decay: float = 0.0, outside_zero: bool = False, growth: float | None = None,
                      n_rad: int = 16, sphere_degree: int | None = None) -> float:
    """Principal-value fractional Laplacian of ``u`` at ``x``.

    Inner part (|y| < h_cut): symmetric second differences against
    |y|^(-n-2s).  Outer part: analytic constant term plus a ray integral of u
    split at the sphere |z| = R (see :func:`ray_integral` for the exponents).
    ``growth`` declares |u(z)| ~ |z|^growth at infinity; growth >= 2s
    diverges.
    """
    n, s = p.n, p.s
    x = np.asarray(x, dtype=float).reshape(n)
    if growth is not None and growth >= 2 * s:
        raise DomainError(f"u grows like |z|^{growth}: the outer integral diverges for s={s}")
    dist = R - float(np.linalg.norm(x))
    if h_cut is None:
        h_cut = min(0.1, dist / 2) if dist > 0 else 0.1
    ux = float(_apply(u, x[None, :])[0])
    sph = sphere_rule(n, sphere_degree or default_sphere_degree(n))
    # the bracket is even and O(rho^2): on [0, h0] integrate in v = (rho/h0)^2
    # against v^-s, which keeps nodes away from rho = 0 where it is pure rounding
    h0 = 0.25 * h_cut
    v, wv = gauss_jacobi01(n_rad, -s, 0.0)
    t_gl, w_gl = gauss_legendre01(n_rad)
    rho = np.concatenate([h0 * np.sqrt(v), h0 + (h_cut - h0) * t_gl])
    w = np.concatenate([0.5 * h0 ** (-2 * s) * wv / v * rho[: v.size] ** (1 + 2 * s),
                        (h_cut - h0) * w_gl])
    pts_p = x[None, None, :] + rho[:, None, None] * sph.directions[None, :, :]
    pts_m = x[None, None, :] - rho[:, None, None] * sph.directions[None, :, :]
    up = _apply(u, pts_p.reshape(-1, n)).reshape(rho.size, -1)
    um = _apply(u, pts_m.reshape(-1, n)).reshape(rho.size, -1)
    second = (2 * ux - up - um) @ sph.weights
    inner = pairwise_sum(w * second * rho ** (-1 - 2 * s))
    if outside_zero and dist <= 0:
        raise DomainError("outside_zero fields need x inside the sphere")
    outer_const = 2 * ux * p.omega * h_cut ** (-2 * s) / (2 * s)

    def kern(r_, d):
        return r_ ** (-1 - 2 * s)

    outer_int = ray_integral(n, u, x, h_cut, kern, kernel_left=None, kernel_decay=2 * s, R=R,
                             in_exp=in_exp, out_exp=out_exp, decay=decay, outside_zero=outside_zero,
                             n_rad=n_rad, sphere_degree=sphere_degree)
    return p.A_ns / 2.0 * (inner + outer_const - 2 * outer_int)

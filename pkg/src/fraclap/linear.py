"""Linear Dirichlet problem on the unit ball with data (f, g, h).

The solution is the superposition of a Green potential of the interior
right-hand side f, the s-harmonic extension of the exterior datum g, and a
Martin integral of the boundary trace h.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .kernels import as_points
from .quadrature import (AccuracyError, NonIntegrableError, ball_polar_rule, default_sphere_degree,
                         graded_rule, harmonic_measure_rule, pairwise_sum,
                         poisson_rule, sphere_rule)
from .special import DomainError, FracParams


class InadmissibleError(DomainError):
    """Exterior datum outside the admissible class; ``end`` is 'boundary' or 'infinity'."""

    def __init__(self, end: str, msg: str):
        super().__init__(msg)
        self.end = end


class NoTraceError(RuntimeError):
    """The weighted trace extrapolation failed to settle."""


@dataclass(frozen=True)
class DirichletData:
    """Data of the linear problem.

    ``f`` is a field on B with f ~ delta^(-beta_f); ``g`` a field on the
    complement with g ~ (|y|^2-1)^(-sigma_g) at the sphere and
    |y|^(-2 g_decay) at infinity; ``h`` a field on the unit sphere.  Fields
    take an (m, n) array of points and return m values.  ``h_atoms`` adds
    point masses sum a_i delta_{theta_i} to the boundary datum.
    """

    f: Callable | None = None
    beta_f: float = 0.0
    g: Callable | None = None
    sigma_g: float = 0.0
    g_decay: float = 0.0
    g_breaks: tuple = ()
    g_radial: bool = False
    h: Callable | None = None
    h_atoms: tuple = ()
    f_layers: tuple = ()
    description: str = ""

    def check(self, p: FracParams):
        if self.f is not None and self.beta_f >= 1 + p.s:
            raise NonIntegrableError(f"beta_f={self.beta_f} >= 1+s: the Green potential diverges")
        if self.g is not None:
            admissible_g_verdict(p, self.sigma_g, self.g_decay)

    def admissible_g(self, p: FracParams) -> bool:
        try:
            admissible_g_verdict(p, self.sigma_g, self.g_decay)
        except InadmissibleError:
            return False
        return True


@dataclass
class SolutionField:
    points: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def delta(self) -> np.ndarray:
        return np.abs(1.0 - np.linalg.norm(self.points, axis=1))

    def to_csv(self) -> str:
        n = self.points.shape[1]
        cols = [f"x{i}" for i in range(n)] + ["delta", "value"]
        if self.stderr is not None:
            cols.append("stderr")
        lines = [",".join(cols)]
        for i, pt in enumerate(self.points):
            row = [repr(float(c)) for c in pt] + [repr(float(self.delta[i])), repr(float(self.values[i]))]
            if self.stderr is not None:
                row.append(repr(float(self.stderr[i])))
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def admissible_g_verdict(p: FracParams, sigma: float, decay: float):
    if sigma + p.s >= 1:
        raise InadmissibleError("boundary", f"g ~ delta^-{sigma} is not integrable against delta^-s at the sphere (sigma+s >= 1)")
    if decay <= -p.s:
        raise InadmissibleError("infinity", f"g ~ |y|^{-2 * decay} is not integrable against |y|^(-n-2s) at infinity")


def check_admissible_g(p: FracParams, g: Callable, sigma: float = 0.0, decay: float = 0.0,
                       ) -> float:
    """Weighted mass int_{CB} |g| min(delta^-s, delta^(-n-2s)) dy, or an InadmissibleError."""
    admissible_g_verdict(p, sigma, decay)
    n, s = p.n, p.s
    # the weight switches branch at delta = 1, i.e. |y| = 2
    sph = sphere_rule(n, default_sphere_degree(n))
    rr, wr = graded_rule(1.0, 2.0, -(s + sigma), None, n=16)
    pts = (rr[:, None, None] * sph.directions[None]).reshape(-1, n)
    gv = np.abs(np.asarray(g(pts), dtype=float)).reshape(rr.size, -1) @ sph.weights
    near_mass = pairwise_sum(wr * gv * (rr - 1.0) ** (-s) * rr ** (n - 1))

    # far part in t = 2/|y|: integrand ~ t^(2s + 2 decay - 1) at t = 0
    tt, wt = graded_rule(0.0, 1.0, 2 * s + 2 * decay - 1, None, n=16)
    rho = 2.0 / tt
    pts = (rho[:, None, None] * sph.directions[None]).reshape(-1, n)
    gv = np.abs(np.asarray(g(pts), dtype=float)).reshape(tt.size, -1) @ sph.weights
    far_mass = pairwise_sum(wt * gv * (rho - 1.0) ** (-n - 2 * s) * rho ** (n - 1) * 2.0 / tt**2)
    return near_mass + far_mass


def harmonic_extension(p: FracParams, g: Callable, x, *, sigma: float = 0.0, decay: float = 0.0,
                       breaks: Sequence[float] = (), radial: bool = False, **rule_kw):
    """u(x) = int_{CB} P_B(x, y) g(y) dy inside, g(x) outside."""
    admissible_g_verdict(p, sigma, decay)
    X, single = as_points(x, p.n)
    out = np.empty(X.shape[0])
    for i, xi in enumerate(X):
        if xi @ xi >= 1:
            out[i] = float(np.asarray(g(xi[None, :])).ravel()[0])
            continue
        rule = poisson_rule(p, xi, sigma=sigma, decay=decay, radial=radial, breaks=breaks, **rule_kw)
        out[i] = rule.integrate(g)
    return float(out[0]) if single else out


def martin_mass(p: FracParams, x):
    """int_{dB} M_B(x, th) dH(th) = (c/2) omega (1-|x|^2)^(s-1)."""
    X, single = as_points(x, p.n)
    a = np.einsum("ij,ij->i", X, X)
    if np.any(a >= 1):
        raise DomainError("martin_mass needs |x| < 1")
    v = 0.5 * p.c_ns * p.omega * (1 - a) ** (p.s - 1)
    return float(v[0]) if single else v


def martin_solution(p: FracParams, h: Callable | None, x, atoms: Sequence = (), n_ang: int | None = None,
                    normalization: str = "half-c"):
    """u(x) = int_{dB} M_B(x, th) h(th) dH(th) + sum a_i M_B(x, th_i).

    The sphere integral is taken against the classical harmonic measure from
    x, which carries exactly the angular profile |x - th|^-n of the kernel.
    ``normalization="half-c"`` uses M_B = (c/2)(1-|x|^2)^s/|x-th|^n;
    ``"limit"`` uses the boundary limit of G_B(x, y)/delta(y)^s, which has
    the same profile and a different constant.
    """
    X, single = as_points(x, p.n)
    out = np.zeros(X.shape[0])
    scale = 1.0
    if normalization == "limit":
        scale = kernels.martin_limit_coeff(p) / (0.5 * p.c_ns)
    elif normalization != "half-c":
        raise ValueError(f"unknown normalization {normalization!r}")
    mass = scale * martin_mass(p, X)
    n_ang = n_ang or {1: 1, 2: 256, 3: 64}[p.n]
    for i, xi in enumerate(X):
        if h is not None:
            hm = harmonic_measure_rule(p.n, xi, 1.0, n_ang=n_ang, n_az=32)
            out[i] = mass[i] * pairwise_sum(hm.weights * np.asarray(h(hm.directions), dtype=float))
        for a, th in atoms:
            out[i] += scale * a * kernels.ball_martin(p, xi, np.asarray(th, dtype=float))
    return float(out[0]) if single else out


def green_center_exp(p: FracParams) -> float:
    """Exponent of G_B(x, x + rho th) rho^(n-1) at rho = 0."""
    return min(2 * p.s - p.n, 0.0) + p.n - 1


def green_solution(p: FracParams, f: Callable | None, x, *, beta: float = 0.0, layers: Sequence[float] = (),
                   **rule_kw):
    """u(x) = int_B G_B(x, y) f(y) dy for f ~ delta^-beta at the sphere."""
    if beta >= 1 + p.s:
        raise NonIntegrableError(f"beta={beta} >= 1+s={1 + p.s}: the Green potential diverges")
    X, single = as_points(x, p.n)
    out = np.zeros(X.shape[0])
    if f is None:
        return float(out[0]) if single else out
    for i, xi in enumerate(X):
        rule = ball_polar_rule(p.n, xi, center_exp=green_center_exp(p), edge_exp=p.s - beta,
                               layers=layers, **rule_kw)
        G = kernels.ball_green(p, np.broadcast_to(xi, rule.nodes.shape), rule.nodes)
        out[i] = pairwise_sum(rule.weights * G * np.asarray(f(rule.nodes), dtype=float))
    return float(out[0]) if single else out


def green_operator(p: FracParams, x, *, beta: float = 0.0, layers: Sequence[float] = (), **rule_kw):
    """The Green rule at x: (nodes, weights * G_B(x, nodes))."""
    xi = np.asarray(x, dtype=float).reshape(p.n)
    rule = ball_polar_rule(p.n, xi, center_exp=green_center_exp(p), edge_exp=p.s - beta, layers=layers, **rule_kw)
    G = kernels.ball_green(p, np.broadcast_to(xi, rule.nodes.shape), rule.nodes)
    return rule.nodes, rule.weights * G


def full_linear_solve(p: FracParams, data: DirichletData, points) -> SolutionField:
    """Superpose the three representation terms at each point."""
    data.check(p)
    X, _ = as_points(points, p.n)
    vals = np.zeros(X.shape[0])
    inside = np.einsum("ij,ij->i", X, X) < 1
    Xi = X[inside]
    terms = (
        ("f", lambda: green_solution(p, data.f, Xi, beta=data.beta_f, layers=data.f_layers) if data.f else 0.0),
        ("g", lambda: harmonic_extension(p, data.g, Xi, sigma=data.sigma_g, decay=data.g_decay,
                                         breaks=data.g_breaks, radial=data.g_radial) if data.g else 0.0),
        ("h", lambda: martin_solution(p, data.h, Xi, data.h_atoms) if (data.h or data.h_atoms) else 0.0),
    )
    if Xi.shape[0]:
        for name, fn in terms:
            try:
                vals[inside] += np.atleast_1d(fn()) if Xi.shape[0] > 1 else fn()
            except (DomainError, AccuracyError) as exc:
                raise type(exc)(f"term {name}: {exc}") from exc
    if data.g is not None and np.any(~inside):
        vals[~inside] = np.asarray(data.g(X[~inside]), dtype=float)
    return SolutionField(X, vals, None, {"n": p.n, "s": p.s, "data": data.description, "provenance": "quadrature"})


def ray_points(theta, deltas) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    th = th / np.linalg.norm(th)
    return (1.0 - np.asarray(deltas, dtype=float))[:, None] * th[None, :]


@dataclass(frozen=True)
class TraceResult:
    value: float
    error: float
    ratios: np.ndarray
    deltas: np.ndarray


def weighted_trace_E(p: FracParams, u: Callable, theta, deltas: Sequence[float] | None = None) -> TraceResult:
    """Weighted trace Eu(theta) = lim u(x) / int M_B(x, .) dH along the inward ray.

    ``u`` is evaluated at points (1 - delta) theta for a geometric sequence
    of delta down to 1e-4; the limit is extrapolated with three-point Aitken
    elimination on the last samples.
    """
    if deltas is None:
        deltas = np.geomspace(1e-1, 1e-4, 10)
    deltas = np.asarray(deltas, dtype=float)
    X = ray_points(theta, deltas)
    vals = np.atleast_1d(np.asarray(u(X), dtype=float))
    q = vals / martin_mass(p, X)
    if q.size < 3 or not np.all(np.isfinite(q)):
        raise NoTraceError("need at least three finite samples along the ray")
    d1, d2 = q[-2] - q[-3], q[-1] - q[-2]
    incs = np.diff(q)
    if abs(d2) > 0 and np.max(np.abs(incs[-4:])) > 10 * abs(d2) and np.any(np.sign(incs[-4:]) != np.sign(d2)):
        raise NoTraceError("ratio oscillates along the ray")
    denom = d2 - d1
    if denom == 0 or abs(d2) < 1e-15 * max(1.0, abs(q[-1])):
        est = q[-1]
    else:
        est = q[-1] - d2 * d2 / denom
    err = abs(est - q[-1])
    return TraceResult(float(est), float(err), q, deltas)


def truncation_radius(g: Callable, N: float, n: int, r_max: float = 1e6) -> float | None:
    """Exterior radius where a radial datum decreasing in |y| crosses level N."""
    e = np.eye(n)[0]

    def val(r):
        return float(np.asarray(g((r * e)[None, :])).ravel()[0])

    lo, hi = 1.0 + 1e-300, 2.0
    if val(1.0 + 1e-15) <= N:
        return None
    while val(hi) > N:
        hi *= 2
        if hi > r_max:
            return None
    lo = 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if val(mid) > N:
            lo = mid
        else:
            hi = mid
    return hi


def large_harmonic_truncation(p: FracParams, g: Callable, N_list: Sequence[float], x_grid, *,
                              sigma: float = 0.0, decay: float = 0.0, radial: bool = True):
    """Solutions u_N for the truncated data g_N = min(g, N) (radial, decreasing g).

    ``sigma`` is the blow-up exponent of g itself; the rule keeps it because
    for large N the level set |y| = R sits below double resolution.
    """
    out = []
    for N in N_list:
        R = truncation_radius(g, N, p.n)

        def gN(y, N=N):
            # nodes may round onto the sphere, where g = inf is cut to N
            with np.errstate(divide="ignore"):
                return np.minimum(np.asarray(g(y), dtype=float), N)

        vals = harmonic_extension(p, gN, x_grid, sigma=sigma, decay=decay, breaks=(R,) if R else (),
                                  radial=radial)
        X, _ = as_points(x_grid, p.n)
        out.append(SolutionField(X, np.atleast_1d(vals), None, {"N": N, "provenance": "quadrature"}))
    return out

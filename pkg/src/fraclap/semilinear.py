"""Semilinear Dirichlet problems (-Delta)^s u = -/+ f(x, u) on the unit ball.

All solvers work on a radial grid (radii clustered toward the sphere) with a
Nystrom discretization of the Green operator: the integrand F = f(u) is
represented by piecewise-linear interpolation in |y| of F delta^kappa,
where kappa is the declared boundary blow-up exponent of F.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linear import SolutionField, green_operator, harmonic_extension, martin_mass
from .quadrature import pairwise_sum
from .special import DomainError, FracParams

log = logging.getLogger(__name__)


class NonexistenceError(DomainError):
    """The data fall in a regime with no solution."""


class IterationError(RuntimeError):
    """An iterate left its bracket or the scheme broke down."""


@dataclass(frozen=True)
class Nonlinearity:
    """f(x, t) with optional structural declarations.

    ``eval`` maps (points (m, n), values (m,)) to (m,).  ``power`` declares
    growth like t^power (used to pick the interpolation exponent and the
    existence regime); ``lipschitz`` bounds |df/dt| on a value range.
    """

    eval: Callable
    monotone_in_t: bool = True
    power: float | None = None
    a1: float = 1.0
    a2: float = 1.0
    lipschitz: Callable | None = None
    envelope_derivative: Callable | None = None
    name: str = "f"

    def __call__(self, x, t):
        return np.asarray(self.eval(x, t), dtype=float)

    def spot_check(self, n: int, rng=None, m: int = 64):
        """f(x, 0) = 0 and f(x, t) >= 0 for t > 0 at random samples."""
        rng = np.random.default_rng(0) if rng is None else rng
        x = rng.uniform(-1, 1, (m, n)) / np.sqrt(n)
        t = rng.uniform(0, 10, m)
        return bool(np.all(self(x, np.zeros(m)) == 0) and np.all(self(x, t) >= 0))


def power_nonlinearity(q: float, coef: float = 1.0) -> Nonlinearity:
    return Nonlinearity(
        eval=lambda x, t: coef * np.maximum(t, 0.0) ** q,
        power=q,
        a1=coef,
        a2=coef,
        lipschitz=lambda tmax: coef * q * max(tmax, 0.0) ** (q - 1) if q >= 1 else np.inf,
        name=f"{coef}*t^{q}",
    )


def sqrt_nonlinearity() -> Nonlinearity:
    """f(t) = sqrt(1 + t) - 1, concave with derivative 1/(2 sqrt(1 + t))."""
    return Nonlinearity(
        eval=lambda x, t: np.sqrt(1.0 + np.maximum(t, 0.0)) - 1.0,
        power=0.5,
        lipschitz=lambda tmax: 0.5,
        envelope_derivative=lambda m: 0.5 / np.sqrt(1.0 + m),
        name="sqrt(1+t)-1",
    )


def truncated(f: Nonlinearity, k: float) -> Nonlinearity:
    """f_k = min(f, k)."""
    lip = f.lipschitz
    return Nonlinearity(
        eval=lambda x, t: np.minimum(f(x, t), k),
        monotone_in_t=f.monotone_in_t,
        power=f.power,
        lipschitz=lip,
        name=f"min({f.name},{k})",
    )


@dataclass
class IterationReport:
    converged: bool
    iterations: int
    final_residual: float
    increment: float = float("nan")
    divergence_flag: bool = False
    bracket: tuple | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bracket"] = None if self.bracket is None else [np.asarray(b).tolist() for b in self.bracket]
        return d


class RadialGrid:
    """Radii r_i = sin(pi t_i / 2), t_i = (i + 1/2)/m, and the Nystrom Green matrix.

    ``kappa`` is the exponent with F ~ delta^-kappa for the integrands the
    matrix will be applied to.
    """

    def __init__(self, p: FracParams, m: int = 256, kappa: float = 0.0, theta=None):
        if kappa >= 1 + p.s:
            raise DomainError(f"integrand exponent {kappa} >= 1+s is not integrable against G")
        self.p = p
        self.m = m
        self.kappa = kappa
        t = (np.arange(m) + 0.5) / m
        self.r = np.sin(0.5 * np.pi * t)
        self.theta = np.eye(p.n)[0] if theta is None else np.asarray(theta, float) / np.linalg.norm(theta)
        self.points = self.r[:, None] * self.theta[None, :]
        self.delta = 1.0 - self.r
        self._W = None

    def hat_matrix(self, radii: np.ndarray) -> np.ndarray:
        """Rows: interpolation weights onto the grid (constant beyond the ends)."""
        r = self.r
        rr = np.clip(radii, r[0], r[-1])
        j = np.clip(np.searchsorted(r, rr) - 1, 0, self.m - 2)
        lam = (rr - r[j]) / (r[j + 1] - r[j])
        H = np.zeros((radii.size, self.m))
        idx = np.arange(radii.size)
        H[idx, j] = 1 - lam
        H[idx, j + 1] += lam
        return H

    @property
    def W(self) -> np.ndarray:
        if self._W is None:
            p, k = self.p, self.kappa
            rows = []
            for x in self.points:
                nodes, wg = green_operator(p, x, beta=k)
                rad = np.linalg.norm(nodes, axis=1)
                dq = np.maximum(1.0 - rad, 1e-300)
                rows.append((wg * dq ** (-k)) @ self.hat_matrix(rad))
            self._W = np.array(rows) * self.delta[None, :] ** k
        return self._W

    def apply(self, F: np.ndarray) -> np.ndarray:
        return self.W @ F

    def ball_integral(self, F: np.ndarray, weight_exp: float = 0.0) -> float:
        """int_B F(|y|) delta^weight_exp dy for grid values F (radial)."""
        from .quadrature import graded_rule

        p = self.p
        rr, wr = graded_rule(0.0, 1.0, None if p.n == 1 else p.n - 1.0, p.s - self.kappa + weight_exp, n=16)
        vals = self.hat_matrix(rr) @ (F * self.delta**self.kappa)
        d = 1.0 - rr
        area = p.omega if p.n > 1 else 2.0
        return float(area * pairwise_sum(wr * vals * d ** (weight_exp - self.kappa) * rr ** (p.n - 1)))


def _field(grid: RadialGrid, values, meta) -> SolutionField:
    return SolutionField(grid.points.copy(), np.asarray(values, dtype=float), None, meta)


def linear_base(p: FracParams, grid: RadialGrid, g=None, h=None, *, sigma: float = 0.0, decay: float = 0.0,
                breaks=()) -> np.ndarray:
    """u0 on the grid: the linear solution with data (0, g, h) (radial data)."""
    u0 = np.zeros(grid.m)
    if g is not None:
        u0 += harmonic_extension(p, g, grid.points, sigma=sigma, decay=decay, breaks=breaks, radial=True)
    if h is not None:
        # radial boundary datum: constant value h on the sphere
        u0 += float(h) * martin_mass(p, grid.points)
    return u0


def _resolve(p, grid, u0, g, h, sigma, decay):
    if u0 is not None:
        return np.asarray(u0, dtype=float)
    return linear_base(p, grid, g, h, sigma=sigma, decay=decay)


def solve_damping(p: FracParams, f: Nonlinearity, g=None, h=None, grid: RadialGrid | None = None,
                  tol: float = 1e-8, *, sigma: float = 0.0, decay: float = 0.0, u0=None,
                  start: str = "upper", shift: float | None = None, max_iter: int = 2000):
    """Fixed point of u = u0 - G f(u) with 0 <= u <= u0.

    Uses the shifted monotone scheme (I + K W) u_{k+1} = u0 + W (K u_k - f(u_k))
    with K >= the Lipschitz constant of f on [0, max u0]; for monotone f the
    iterates are monotone and stay in the bracket.  ``start`` picks the
    bracket end ('upper' = u0, 'lower' = 0).  K = 0 is plain Picard.
    """
    if h is not None and h != 0 and f.power is not None and f.power >= (1 + p.s) / (1 - p.s):
        raise NonexistenceError(
            f"growth t^{f.power} >= t^((1+s)/(1-s)) with a nonzero boundary trace: no solution exists")
    if grid is None:
        kappa = 0.0
        if h:
            kappa = (f.power or 1.0) * (1 - p.s)
        elif sigma:
            kappa = (f.power or 1.0) * sigma
        grid = RadialGrid(p, kappa=kappa)
    u0 = _resolve(p, grid, u0, g, h, sigma, decay)
    W = grid.W
    umax = float(np.max(u0))
    if shift is None:
        shift = float(f.lipschitz(umax)) if f.lipschitz is not None else 0.0
    K = shift
    A = np.eye(grid.m) + K * W
    u = u0.copy() if start == "upper" else np.zeros_like(u0)
    X = grid.points
    converged = False
    inc = np.inf
    slack = 1e-12 * max(1.0, umax)
    for it in range(1, max_iter + 1):
        rhs = u0 + W @ (K * u - f(X, u))
        un = np.linalg.solve(A, rhs) if K else rhs
        if np.any(un < -slack) or np.any(un > u0 + slack):
            raise IterationError(f"iterate {it} left the bracket [0, u0]")
        inc = float(np.max(np.abs(un - u)))
        u = un
        res = float(np.max(np.abs(u - u0 + W @ f(X, u))))
        if inc < tol and res < 10 * tol:
            converged = True
            break
    res = float(np.max(np.abs(u - u0 + W @ f(X, u))))
    rep = IterationReport(converged, it, res, inc, False, (np.zeros_like(u0), u0),
                          {"shift": K, "start": start})
    return _field(grid, u, {"n": p.n, "s": p.s, "sign": "damping", "f": f.name}), rep


def sublinear_m_threshold(p: FracParams, f: Nonlinearity, m_cap: float = 2.0**40) -> float:
    """Smallest m in {0, 1, 2, 4, ...} with ||torsion||_inf Lambda'(m) < 1."""
    if f.envelope_derivative is None:
        raise DomainError("a concave envelope derivative is required")
    zeta = p.gamma_coeff
    m = 0.0
    while m <= m_cap:
        if zeta * f.envelope_derivative(m) < 1:
            return m
        m = 1.0 if m == 0 else 2 * m
    raise DomainError("envelope violation: contraction constant >= 1 for every m up to the cap")


def solve_sublinear(p: FracParams, f: Nonlinearity, g=None, h=None, grid: RadialGrid | None = None,
                    tol: float = 1e-8, *, sigma: float = 0.0, decay: float = 0.0, u0=None,
                    max_iter: int = 5000):
    """Increasing Picard iteration u_k = u0 + G f(u_{k-1}) from u0."""
    m_thr = sublinear_m_threshold(p, f)
    if grid is None:
        grid = RadialGrid(p, kappa=(f.power or 1.0) * sigma if sigma else 0.0)
    u0 = _resolve(p, grid, u0, g, h, sigma, decay)
    W = grid.W
    X = grid.points
    u = u0.copy()
    monotone = True
    converged = False
    inc = np.inf
    for it in range(1, max_iter + 1):
        un = u0 + W @ f(X, u)
        if np.any(un - u < -1e-13 * np.maximum(1.0, np.abs(u))):
            monotone = False
        inc = float(np.max(np.abs(un - u)))
        u = un
        if inc < tol:
            converged = True
            break
    res = float(np.max(np.abs(u - u0 - W @ f(X, u))))
    converged = converged and res < 10 * tol
    rep = IterationReport(converged, it, res, inc, False, None, {"m_threshold": m_thr, "monotone": monotone})
    return _field(grid, u, {"n": p.n, "s": p.s, "sign": "source", "f": f.name}), rep


def gamma_selection(p: FracParams, power: float, beta: float, eps: float = 0.05) -> float:
    """Exponent of the supersolution ansatz (-Delta)^s zeta = delta^-gamma."""
    s = p.s
    if power > (1 + s) / (1 - s):
        return max(2 * s * power / (power - 1), beta + 2 * s + eps)
    return power * beta


def exterior_power_datum(beta: float):
    """g(y) = delta(y)^-beta = (|y| - 1)^-beta on the complement of B."""

    def g(y):
        return (np.linalg.norm(y, axis=1) - 1.0) ** (-beta)

    return g


def solve_superlinear(p: FracParams, f: Nonlinearity, beta: float, lam: float, grid: RadialGrid | None = None,
                      guard: float = 1e8, *, q: float | None = None, tol: float = 1e-8, max_iter: int = 500):
    """Picard iteration u_{k+1} = u0 + lam G f(u_k) with g = delta^-beta."""
    s = p.s
    if not (0 < beta < 1 - s):
        raise DomainError(f"beta must lie in (0, 1-s), got {beta}")
    if q is not None and q * beta > 1 + s:
        raise NonexistenceError(
            f"q*beta = {q * beta:g} > 1+s = {1 + s:g}: a weak solution exists only for lambda = 0")
    pw = f.power or 1.0
    if grid is None:
        grid = RadialGrid(p, kappa=min(pw * beta, 1 + s - 1e-3))
    g = exterior_power_datum(beta)
    u0 = linear_base(p, grid, g, sigma=beta, decay=beta / 2)
    X = grid.points
    u = u0.copy()
    incs = []
    converged = diverged = False
    res = np.inf
    it = 0
    if lam == 0:
        converged, res = True, 0.0
    else:
        W = grid.W
        for it in range(1, max_iter + 1):
            un = u0 + lam * (W @ f(X, u))
            inc = float(np.max(np.abs(un - u)))
            u = un
            incs.append(inc)
            if not np.all(np.isfinite(u)) or np.max(u) > guard:
                diverged = True
                break
            if len(incs) >= 6 and all(incs[-i] > incs[-i - 1] for i in range(1, 6)):
                diverged = True
                break
            if inc < tol * max(1.0, float(np.max(np.abs(u)))):
                converged = True
                break
        if converged:
            res = float(np.max(np.abs(u - u0 - lam * (W @ f(X, u)))))
    rep = IterationReport(converged, it, float(res), incs[-1] if incs else 0.0, diverged, None,
                          {"lambda": lam, "beta": beta, "gamma": gamma_selection(p, pw, beta)})
    return _field(grid, u, {"n": p.n, "s": s, "sign": "source", "lambda": lam}), rep


def lambda_bracket(p: FracParams, f: Nonlinearity, beta: float, lo: float = 0.01, hi: float = 100.0,
                   iters: int = 12, grid: RadialGrid | None = None):
    """Bisection (in log lambda) between a converging and a diverging lambda.

    Returns (lam_conv, lam_div); raises when the ends do not straddle.
    """
    pw = f.power or 1.0
    grid = grid or RadialGrid(p, kappa=min(pw * beta, 1 + p.s - 1e-3))

    def ok(lam):
        _, rep = solve_superlinear(p, f, beta, lam, grid)
        if not (rep.converged or rep.divergence_flag):
            return None
        return rep.converged

    if ok(lo) is not True or ok(hi) is not False:
        raise IterationError("lambda ends do not bracket a convergence/divergence transition")
    for _ in range(iters):
        mid = float(np.sqrt(lo * hi))
        r = ok(mid)
        if r is None:
            break
        if r:
            lo = mid
        else:
            hi = mid
    return lo, hi


@dataclass
class BlowupSeries:
    k: list
    weighted_mass: list
    min_ratio: list
    iterations: list

    def to_dict(self) -> dict:
        return asdict(self)


def blowup_probe(p: FracParams, f: Nonlinearity, beta: float, k_list: Sequence[float] = (1, 2, 4, 8, 16, 32, 64),
                 grid: RadialGrid | None = None, tol: float = 1e-9, max_iter: int = 20000) -> BlowupSeries:
    """Solve u_k = u0 + G f_k(u_k) with f_k = min(f, k), g = delta^-beta, for each k.

    Records int_B f_k(u_k) delta^s and min over the grid of u_k / delta^s.
    """
    grid = grid or RadialGrid(p, kappa=0.0)
    g = exterior_power_datum(beta)
    u0 = linear_base(p, grid, g, sigma=beta, decay=beta / 2)
    W = grid.W
    X = grid.points
    out = BlowupSeries([], [], [], [])
    u = u0.copy()
    for k in k_list:
        fk = truncated(f, k)
        # warm start from the previous k keeps the iteration increasing
        for it in range(1, max_iter + 1):
            un = u0 + W @ fk(X, u)
            inc = float(np.max(np.abs(un - u)))
            u = un
            if inc < tol * max(1.0, float(np.max(u))):
                break
        else:
            raise IterationError(f"truncated problem k={k} did not converge")
        out.k.append(float(k))
        out.weighted_mass.append(grid.ball_integral(fk(X, u), weight_exp=p.s) if grid.kappa == 0
                                 else float("nan"))
        out.min_ratio.append(float(np.min(u / grid.delta**p.s)))
        out.iterations.append(it)
    return out


def h_datum_rhs(h: Callable, r: float, n: int):
    """f_r(y) = h(theta(y)) phi(delta(y)/r) / K_r with the bump phi(t) = exp(1 - 1/(1-t^2)).

    K_r = int_0^r rho^s phi(rho/r) d rho is applied by :func:`h_datum_solution`.
    """

    def f(y):
        rad = np.linalg.norm(y, axis=1)
        d = 1.0 - rad
        t = d / r
        ph = np.zeros_like(t)
        m = np.abs(t) < 1
        ph[m] = np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
        th = y / np.where(rad > 0, rad, 1.0)[:, None]
        return np.asarray(h(th), dtype=float) * ph

    return f


def bump_moment(s: float) -> float:
    """int_0^1 t^s phi(t) dt for phi(t) = exp(1 - 1/(1-t^2))."""
    from scipy.integrate import quad

    val, _ = quad(lambda t: t**s * np.exp(1.0 - 1.0 / (1.0 - t * t)) if t < 1 else 0.0, 0.0, 1.0,
                  epsabs=1e-14, epsrel=1e-13)
    return val


def h_datum_solution(p: FracParams, h: Callable, r: float, x):
    """Green potential of f_r, normalized so it tends to the Martin integral of h as r -> 0."""
    from .linear import green_solution

    K = r ** (1 + p.s) * bump_moment(p.s)
    f = h_datum_rhs(h, r, p.n)
    return np.asarray(green_solution(p, f, x, layers=(r,))) / K

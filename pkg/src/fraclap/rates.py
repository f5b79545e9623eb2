"""Boundary-rate estimation along inward rays.

Exponents are least-squares slopes of log(value) against log(delta).  A
logarithmic factor is detected by comparing the pure power model with the
model C delta^a log(1/delta).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from . import kernels
from .linear import green_solution, harmonic_extension, ray_points
from .quadrature import NonIntegrableError
from .special import DomainError, FracParams, c_const


@dataclass(frozen=True)
class RateFit:
    exponent: float
    log_factor: bool
    prefactor: float
    r_squared: float
    window: tuple
    power_exponent: float = float("nan")
    log_exponent: float = float("nan")
    low_confidence: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def default_deltas(m: int = 12) -> np.ndarray:
    return np.geomspace(1e-4, 1e-2, m)


def _lsq(X, y):
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - X @ coef
    return coef, float(res @ res)


def fit_boundary_rate(deltas, values, *, rss_drop: float = 0.2, agree: float = 0.1,
                      allow_negative: bool = False) -> RateFit:
    """Fit v ~ C delta^a, optionally with a log(1/delta) factor.

    The log model is accepted when it lowers the residual sum of squares by
    at least ``rss_drop`` and its exponent matches the power-model exponent
    after the shift -1/<log(1/delta)> that a true logarithm induces on a
    pure power fit (within ``agree``).  With ``allow_negative`` values of one
    sign are fitted through their absolute value.
    """
    d = np.asarray(deltas, dtype=float)
    v = np.asarray(values, dtype=float)
    if d.size < 3 or d.size != v.size:
        raise DomainError("need matching delta/value arrays with at least 3 samples")
    if not np.all(np.isfinite(v)):
        raise DomainError("values must be finite")
    if allow_negative and np.all(v < 0):
        v = -v
    if np.any(v <= 0) or np.any(d <= 0):
        raise DomainError("values and deltas must be positive for a log-log fit")
    x = np.log(d)
    y = np.log(v)
    X = np.column_stack([x, np.ones_like(x)])
    (a_pow, c_pow), rss_pow = _lsq(X, y)
    L = np.log(1.0 / d)
    (a_log, c_log), rss_log = _lsq(X, y - np.log(L))
    tss = float(((y - y.mean()) ** 2).sum())
    shift = 1.0 / float(np.mean(L))
    use_log = rss_log <= (1 - rss_drop) * rss_pow and abs((a_log - a_pow) - shift) < agree
    r2 = 1.0 - (rss_log if use_log else rss_pow) / tss if tss > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    window = (float(d.min()), float(d.max()))
    return RateFit(
        exponent=float(a_log if use_log else a_pow),
        log_factor=bool(use_log),
        prefactor=float(np.exp(c_log if use_log else c_pow)),
        r_squared=float(r2),
        window=window,
        power_exponent=float(a_pow),
        log_exponent=float(a_log),
        low_confidence=bool(r2 < 0.99),
    )


def expected_rhs_rate(s: float, beta: float) -> tuple[float, bool]:
    """Three-branch boundary law for (-Delta)^s u = delta^-beta."""
    if beta >= 1 + s:
        raise NonIntegrableError(f"beta={beta} >= 1+s")
    if abs(beta - s) < 1e-12:
        return s, True
    if beta < s:
        return s, False
    return 2 * s - beta, False


def rhs_rate_samples(p: FracParams, beta: float, deltas=None, theta=None):
    if beta >= 1 + p.s:
        raise NonIntegrableError(f"beta={beta} >= 1+s={1 + p.s}: the right-hand side is not admissible")
    deltas = default_deltas() if deltas is None else np.asarray(deltas, dtype=float)
    theta = np.eye(p.n)[0] if theta is None else np.asarray(theta, dtype=float)

    def f(y):
        return np.maximum(1.0 - np.linalg.norm(y, axis=1), 1e-300) ** (-beta)

    X = ray_points(theta, deltas)
    return deltas, np.atleast_1d(green_solution(p, f, X, beta=beta))


def rhs_rate_experiment(p: FracParams, beta: float, deltas=None) -> RateFit:
    """Solve (-Delta)^s u = delta^-beta in B, u = 0 outside, and fit the rate."""
    d, v = rhs_rate_samples(p, beta, deltas)
    return _flag_unstable(fit_boundary_rate(d, v), d, v)


def _flag_unstable(fit: RateFit, d, v, limit: float = 0.02) -> RateFit:
    """Mark the fit low-confidence when the narrow window moves the exponent by >= limit."""
    try:
        moved = window_stability(d, v)
    except DomainError:
        return fit
    if moved >= limit:
        return replace(fit, low_confidence=True)
    return fit


def datum_rate_samples(p: FracParams, sigma: float, deltas=None, kind: str = "power"):
    """Harmonic extension of g = delta^-sigma (``kind='power'``) or of u_sigma's exterior branch."""
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    if sigma + p.s >= 1:
        from .linear import InadmissibleError

        raise InadmissibleError("boundary", f"sigma={sigma} >= 1-s is not an admissible datum exponent")
    deltas = default_deltas() if deltas is None else np.asarray(deltas, dtype=float)
    if kind == "power":
        def g(y):
            return (np.linalg.norm(y, axis=1) - 1.0) ** (-sigma)

        decay = sigma / 2
    elif kind == "usigma":
        if sigma == 0:
            raise DomainError("u_sigma needs sigma > 0")
        g = kernels.g_sigma(p, sigma)
        decay = sigma
    else:
        raise ValueError(f"unknown datum kind {kind!r}")
    X = ray_points(np.eye(p.n)[0], deltas)
    v = harmonic_extension(p, g, X, sigma=sigma, decay=decay, radial=True)
    return deltas, np.atleast_1d(v)


def datum_rate_experiment(p: FracParams, tau: float, sigma: float, deltas=None, kind: str = "power"):
    """Interior explosion exponents for data delta^-sigma and delta^-tau (0 <= tau <= sigma < 1-s)."""
    if not (0 <= tau <= sigma):
        raise DomainError("need 0 <= tau <= sigma")
    d, v = datum_rate_samples(p, sigma, deltas, kind)
    fit_sigma = _flag_unstable(fit_boundary_rate(d, v), d, v)
    d, v = datum_rate_samples(p, tau, deltas, kind if tau > 0 else "power")
    fit_tau = _flag_unstable(fit_boundary_rate(d, v), d, v)
    return fit_sigma, fit_tau


def usigma_prefactor_ratio(p: FracParams, sigma: float, fit: RateFit) -> float:
    """Fitted prefactor of u over that of its datum, both against delta^-sigma."""
    return fit.prefactor / (c_const(p.n, p.s + sigma) * 2.0 ** (-sigma))


def window_stability(deltas, values, wide=(1e-4, 1e-2), narrow=(1e-4, 1e-3)) -> float:
    d = np.asarray(deltas)
    v = np.asarray(values)
    mw = (d >= wide[0] * (1 - 1e-12)) & (d <= wide[1] * (1 + 1e-12))
    mn = (d >= narrow[0] * (1 - 1e-12)) & (d <= narrow[1] * (1 + 1e-12))
    return abs(fit_boundary_rate(d[mw], v[mw]).exponent - fit_boundary_rate(d[mn], v[mn]).exponent)

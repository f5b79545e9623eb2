"""Walk-on-spheres Monte Carlo for the exterior-datum problem on the unit ball.

Each step jumps from the current point X to X + rho theta, the exact exit
position of the 2s-stable process from the ball B_{1-|X|}(X): theta is
uniform on the sphere and rho = r / sqrt(v) with v ~ Beta(s, 1-s).

Paths are processed in fixed-size blocks, each drawing from its own Philox
stream keyed by (seed, block index).  Block results are merged in block order,
so the estimate does not depend on how blocks are spread over workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import special as sps

from .special import DomainError, FracParams


class UnreliableEstimateError(RuntimeError):
    """Too many paths hit the step cap."""


@dataclass(frozen=True)
class WosConfig:
    n_paths: int = 100_000
    max_steps: int = 10_000
    seed: int = 0
    rhs_mode: str = "off"
    block_size: int = 8192
    workers: int = 1

    def __post_init__(self):
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if self.rhs_mode not in ("off", "center-approximation"):
            raise DomainError(f"unknown rhs_mode {self.rhs_mode!r}")


@dataclass(frozen=True)
class WosEstimate:
    mean: float
    stderr: float
    mean_steps: float
    truncated_paths: int
    n_paths: int

    def to_dict(self) -> dict:
        return asdict(self)


def block_rng(seed: int, block: int) -> np.random.Generator:
    key = (int(seed) % 2**64) << 64 | int(block)
    return np.random.Generator(np.random.Philox(key=key))


def uniform_directions(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    if n == 1:
        return np.where(rng.random(size) < 0.5, -1.0, 1.0)[:, None]
    z = rng.standard_normal((size, n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_beta(s: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Beta(s, 1-s) through two Gamma draws."""
    a = rng.standard_gamma(s, size)
    b = rng.standard_gamma(1.0 - s, size)
    return a / (a + b)


def sample_exit(p: FracParams, center, r, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Exit positions from B_r(center); r may be an array matching ``size``."""
    c = np.asarray(center, dtype=float)
    m = 1 if size is None else size
    v = sample_beta(p.s, m, rng)
    rho = np.asarray(r, dtype=float) / np.sqrt(v)
    out = c + rho[:, None] * uniform_directions(p.n, m, rng)
    return out[0] if size is None else out


def exit_radius_cdf(p: FracParams, rho, r: float = 1.0):
    """P(|exit - center| <= rho) for the exit law of B_r."""
    rho = np.asarray(rho, dtype=float)
    v = np.clip((r / np.maximum(rho, r)) ** 2, 0.0, 1.0)
    return 1.0 - sps.betainc(p.s, 1.0 - p.s, v)


def _run_block(p, g, f, x, size, rng, max_steps, gamma_coeff):
    n = p.n
    X = np.broadcast_to(np.asarray(x, dtype=float), (size, n)).copy()
    acc = np.zeros(size)
    steps = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    for _ in range(max_steps):
        if active.size == 0:
            break
        Xa = X[active]
        r = 1.0 - np.linalg.norm(Xa, axis=1)
        if f is not None:
            acc[active] += gamma_coeff * r ** (2 * p.s) * np.asarray(f(Xa), dtype=float)
        Y = sample_exit(p, np.zeros(n), r, rng, active.size) + Xa
        steps[active] += 1
        out = np.einsum("ij,ij->i", Y, Y) >= 1.0
        if np.any(out):
            idx = active[out]
            if g is not None:
                acc[idx] += np.asarray(g(Y[out]), dtype=float)
        X[active[~out]] = Y[~out]
        active = active[~out]
    trunc = active.size
    keep = np.ones(size, dtype=bool)
    keep[active] = False
    vals = acc[keep]
    cnt = vals.size
    mean = float(vals.mean()) if cnt else 0.0
    m2 = float(((vals - mean) ** 2).sum()) if cnt else 0.0
    return cnt, mean, m2, int(steps.sum()), trunc


def _merge(a, b):
    na, ma, qa = a
    nb, mb, qb = b
    nt = na + nb
    if nt == 0:
        return 0, 0.0, 0.0
    d = mb - ma
    return nt, ma + d * nb / nt, qa + qb + d * d * na * nb / nt


def wos_with_rhs(p: FracParams, f: Callable | None, g: Callable | None, x, cfg: WosConfig = WosConfig()) -> WosEstimate:
    """Estimate u(x) for (-Delta)^s u = f in B, u = g outside.

    Per step the remainder gamma(n, s, r) f(center) is accumulated; this is
    exact in expectation for constant f and biased otherwise.
    """
    x = np.asarray(x, dtype=float).reshape(p.n)
    if x @ x >= 1:
        raise DomainError("wos needs |x| < 1")
    if f is not None and cfg.rhs_mode == "off":
        raise DomainError("a right-hand side needs rhs_mode='center-approximation' (biased for nonconstant f)")
    nb = -(-cfg.n_paths // cfg.block_size)
    sizes = [min(cfg.block_size, cfg.n_paths - i * cfg.block_size) for i in range(nb)]

    def job(i):
        return _run_block(p, g, f, x, sizes[i], block_rng(cfg.seed, i), cfg.max_steps, p.gamma_coeff)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            results = list(ex.map(job, range(nb)))
    else:
        results = [job(i) for i in range(nb)]
    # pairwise merge in block order
    stats = [(c, m, q) for c, m, q, _, _ in results]
    while len(stats) > 1:
        nxt = [_merge(stats[i], stats[i + 1]) for i in range(0, len(stats) - 1, 2)]
        if len(stats) % 2:
            nxt.append(stats[-1])
        stats = nxt
    cnt, mean, m2 = stats[0]
    steps = sum(r[3] for r in results)
    trunc = sum(r[4] for r in results)
    if trunc >= 1e-3 * cfg.n_paths:
        raise UnreliableEstimateError(f"{trunc} of {cfg.n_paths} paths exceeded {cfg.max_steps} steps")
    sd = np.sqrt(m2 / (cnt - 1)) if cnt > 1 else 0.0
    return WosEstimate(float(mean), float(sd / np.sqrt(max(cnt, 1))), steps / cfg.n_paths, int(trunc), cfg.n_paths)


def wos_estimate(p: FracParams, g: Callable, x, cfg: WosConfig = WosConfig()) -> WosEstimate:
    """Estimate the s-harmonic extension of g at x."""
    f = None
    return wos_with_rhs(p, f, g, x, cfg)

"""Gamma-function machinery and the normalization constants of the fractional Laplacian.

All constants are functions of the dimension ``n`` and the order ``s`` only, and
are collected in :class:`FracParams` so that every other module reads them from a
single place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


def gamma_fn(x: float) -> float:
    """Euler Gamma function for positive real arguments."""
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise DomainError(f"gamma_fn requires a finite positive argument, got {x!r}")
    return math.gamma(x)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (counting measure for n = 1)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def c_const(n: int, s: float) -> float:
    """Normalization of the exit density: Gamma(n/2) sin(pi s) / pi^(1+n/2)."""
    return math.gamma(n / 2.0) * math.sin(math.pi * s) / math.pi ** (1.0 + n / 2.0)


@dataclass(frozen=True)
class FracParams:
    """Dimension ``n`` in {1, 2, 3} and fractional order ``s`` in (0, 1)."""

    n: int
    s: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n not in (1, 2, 3):
            raise DomainError(f"dimension n must be 1, 2 or 3, got {self.n!r}")
        s = float(self.s)
        if not (0.0 < s < 1.0):
            raise DomainError(f"order s must lie in the open interval (0, 1), got {self.s!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "s", s)

    @cached_property
    def c_ns(self) -> float:
        return c_const(self.n, self.s)

    @cached_property
    def A_ns(self) -> float:
        n, s = self.n, self.s
        return 4.0**s * s * math.gamma((n + 2 * s) / 2.0) / (math.pi ** (n / 2.0) * math.gamma(1.0 - s))

    @cached_property
    def gamma_coeff(self) -> float:
        n, s = self.n, self.s
        return math.gamma(n / 2.0) / (4.0**s * math.gamma((n + 2 * s) / 2.0) * math.gamma(1.0 + s))

    @cached_property
    def omega(self) -> float:
        """Surface measure of the unit sphere S^{n-1}."""
        return sphere_area(self.n)

    @cached_property
    def riesz_const(self) -> float:
        """Coefficient of |x|^(2s-n) in the fundamental solution (n > 2s only)."""
        n, s = self.n, self.s
        if n <= 2 * s:
            raise DomainError(
                f"fundamental solution is not a Riesz kernel for n <= 2s (n={n}, s={s}); "
                "use kernels.ball_green, which does not factor through it"
            )
        return math.gamma((n - 2 * s) / 2.0) / (4.0**s * math.pi ** (n / 2.0) * math.gamma(s))

    @cached_property
    def green_const(self) -> float:
        """Prefactor of the closed-form ball Green function."""
        n, s = self.n, self.s
        return math.gamma(n / 2.0) / (4.0**s * math.pi ** (n / 2.0) * math.gamma(s) ** 2)

    def with_s(self, s: float) -> "FracParams":
        return FracParams(self.n, s)

    def table(self) -> dict:
        """Named constants as a plain dict (the ``constants`` CLI payload)."""
        out = {
            "n": self.n,
            "s": self.s,
            "c": self.c_ns,
            "A": self.A_ns,
            "gamma_coeff": self.gamma_coeff,
            "omega_nm1": self.omega,
            "green_const": self.green_const,
            "martin_coeff": self.c_ns / 2.0,
            "c_n_half": c_const(self.n, 0.5),
        }
        if self.n > 2 * self.s:
            out["riesz_const"] = self.riesz_const
        return out


def kernel_const_c(p: FracParams) -> float:
    return p.c_ns


def norm_const_A(p: FracParams) -> float:
    """A(n,s) = 4^s s Gamma((n+2s)/2) / (pi^(n/2) Gamma(1-s)).

    This is the constant for which the operator has Fourier symbol |xi|^(2s).
    """
    return p.A_ns


def mv_const_gamma(p: FracParams, r: float) -> float:
    """Mean-value remainder coefficient gamma(n, s, r) = gamma_coeff * r^(2s)."""
    if r < 0:
        raise DomainError(f"radius must be nonnegative, got {r!r}")
    return p.gamma_coeff * r ** (2.0 * p.s)

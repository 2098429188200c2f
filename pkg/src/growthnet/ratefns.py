"""Limiting log-MGFs and left-tail rate functions for Poisson plus geometric sums.

All functions use the per-monomer scaling: ``kbar1`` is the Poisson mean
divided by ``m`` and ``fbar`` is a class size divided by ``m``. Only the left
tail (``theta >= 0``) is represented.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, GrowthNetError
from .model import ScaledParams

__all__ = [
    "RateFamily",
    "lambda_M",
    "lambda_S_class",
    "dlambda_M",
    "dlambda_S_class",
    "ell_M",
    "ell_S_class",
    "solve_theta",
    "ell_sum",
    "log_falling_factorial",
    "ell_sum_split",
    "NEG_INF_SLOPE",
]

#: Sentinel reported for the derivative of the rate function at ``x = 0``.
NEG_INF_SLOPE = -math.inf

_THETA_TOL = 1e-12
_MAX_ITER = 200


def _check_theta(theta):
    if theta < 0 or math.isnan(theta):
        raise DomainError(f"theta must be >= 0, got {theta!r}")


def _check_varrho(varrho):
    if not 0 < varrho < 1:
        raise DomainError(f"varrho must lie in (0, 1), got {varrho!r}")


def lambda_M(theta: float, kbar1: float) -> float:
    _check_theta(theta)
    return kbar1 * math.expm1(-theta)


def dlambda_M(theta: float, kbar1: float) -> float:
    return -kbar1 * math.exp(-theta)


def lambda_S_class(theta: float, fbar: float, varrho: float) -> float:
    _check_theta(theta)
    _check_varrho(varrho)
    if fbar == 0:
        return 0.0
    return fbar * (math.log1p(-varrho) - math.log1p(-varrho * math.exp(-theta)))


def dlambda_S_class(theta: float, fbar: float, varrho: float) -> float:
    z = varrho * math.exp(-theta)
    return -fbar * z / (1.0 - z)


def ell_M(x: float, kbar1: float) -> float:
    """Cramer rate function of the scaled Poisson pool variable."""
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x!r}")
    if kbar1 == 0 or x >= kbar1:
        return 0.0
    if x == 0:
        return kbar1
    return kbar1 - x + x * math.log(x / kbar1)


def ell_S_class(x: float, fbar: float, varrho: float) -> float:
    """Cramer rate function of a scaled sum of ``fbar * m`` geometric variables."""
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x!r}")
    _check_varrho(varrho)
    if fbar == 0:
        if x > 0:
            raise DomainError("empty class (fbar = 0) has no mass at x > 0")
        return 0.0
    if x >= fbar * varrho / (1.0 - varrho):
        return 0.0
    head = 0.0 if x == 0 else x * math.log(x / (varrho * (fbar + x)))
    return head + fbar * math.log(fbar / ((1.0 - varrho) * (fbar + x)))


@dataclass(frozen=True)
class RateFamily:
    """Poisson(kbar1 m) plus independent negative-binomial class sums."""

    kbar1: float
    class_terms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        terms = tuple((float(f), float(r)) for f, r in self.class_terms)
        object.__setattr__(self, "class_terms", terms)
        if self.kbar1 < 0:
            raise DomainError("kbar1 must be >= 0")
        for f, r in terms:
            if f < 0:
                raise DomainError("class fbar must be >= 0")
            _check_varrho(r)

    @classmethod
    def from_params(cls, params: ScaledParams) -> "RateFamily":
        return cls(params.kbar1, tuple(params.class_terms))

    @property
    def mean(self) -> float:
        return self.kbar1 + sum(f * r / (1.0 - r) for f, r in self.class_terms)

    def lam(self, theta: float) -> float:
        return lambda_M(theta, self.kbar1) + sum(
            lambda_S_class(theta, f, r) for f, r in self.class_terms)

    def dlam(self, theta: float) -> float:
        """Derivative of the log-MGF; increasing from ``-mean`` to 0."""
        e = math.exp(-theta)
        total = -self.kbar1 * e
        for f, r in self.class_terms:
            z = r * e
            total -= f * z / (1.0 - z)
        return total

    def dlam_parts(self, theta: float) -> tuple[float, list[float]]:
        """Pool and per-class contributions to ``dlam``."""
        return (dlambda_M(theta, self.kbar1),
                [dlambda_S_class(theta, f, r) for f, r in self.class_terms])


def solve_theta(family: RateFamily, x: float) -> float:
    """Tilt ``theta > 0`` with ``x + dLambda(theta) = 0`` by bracketed bisection."""
    mean = family.mean
    if not 0 < x < mean:
        raise DomainError(f"x must lie in (0, {mean}), got {x!r}")

    def g(theta):
        return x + family.dlam(theta)

    lo, hi = 0.0, 1.0
    while g(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e6:
            raise GrowthNetError(f"could not bracket theta for x={x}")
    # run to machine precision; _THETA_TOL is the guaranteed floor
    for _ in range(_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    if hi - lo > _THETA_TOL:
        raise GrowthNetError(f"theta bisection did not converge for x={x}")
    return 0.5 * (lo + hi)


def ell_sum(family: RateFamily, x: float) -> tuple[float, float]:
    """Rate function of the pool-plus-classes sum and its derivative at ``x``.

    Returns ``(value, slope)``. The slope at ``x = 0`` is ``NEG_INF_SLOPE``.
    """
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x!r}")
    mean = family.mean
    if x >= mean:
        return 0.0, 0.0
    if x == 0:
        value = family.kbar1 - sum(f * math.log1p(-r) for f, r in family.class_terms)
        return value, NEG_INF_SLOPE
    theta = solve_theta(family, x)
    return -theta * x - family.lam(theta), -theta


def log_falling_factorial(n, k):
    """``log((n)_k)`` for ``n >= k >= 0``; vectorizes over numpy arrays."""
    n_arr = np.asarray(n, dtype=float)
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0) or np.any(k_arr > n_arr):
        raise DomainError(f"log_falling_factorial needs n >= k >= 0, got n={n}, k={k}")
    out = gammaln(n_arr + 1.0) - gammaln(n_arr - k_arr + 1.0)
    return float(out) if out.ndim == 0 else out


def ell_sum_split(family: RateFamily, x: float) -> tuple[float, list[float]]:
    """Optimal split of ``x`` between the pool and each class at the tilt ``theta_x``."""
    theta = solve_theta(family, x)
    pool, parts = family.dlam_parts(theta)
    return -pool, [-p for p in parts]


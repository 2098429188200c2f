"""Limit laws of filament lengths and of the free pool as ``m`` grows.

Three regimes, by how the bottleneck class size ``f1`` scales with ``m``:

* ``f1`` linear in ``m``: every class is geometric, with a parameter fixed by
  the concentration point ``psi`` of the representation expectations;
* ``f1 = o(m)`` and more mean demand than monomers: every class is geometric
  with parameter set by the rate-function slope at 1;
* ``1 << f1 << m`` and fewer: bottleneck lengths are exponential on the scale
  ``(m - E[M + S]) / f1``, the rest keep their open-network law.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RegimeError
from .model import NetworkModel, Regime, RegimeThresholds, ScaledParams, classify_regime, scale
from .ratefns import RateFamily, ell_sum, solve_theta

__all__ = [
    "Geometric",
    "ScaledExponential",
    "RegimeResult",
    "solve_psi_linear",
    "psi_residuals",
    "marginals_linear",
    "solve_overloaded",
    "solve_underloaded",
    "homogeneous_psi",
    "two_type_psi",
    "asymptotic_result",
]

_EDGE = 1e-14


@dataclass(frozen=True)
class Geometric:
    """Law with ``P[L >= l] = q**l``."""

    q: float

    def pmf(self, upto: int) -> np.ndarray:
        l = np.arange(upto + 1)
        return (1.0 - self.q) * self.q ** l

    def sf(self, l) -> np.ndarray:
        return self.q ** np.asarray(l, dtype=float)

    def mean(self) -> float:
        return self.q / (1.0 - self.q)

    def to_dict(self) -> dict:
        return {"law": "geometric", "q": self.q, "mean": self.mean()}


@dataclass(frozen=True)
class ScaledExponential:
    """Length ``L`` with ``P[L >= x * scale] -> exp(-x)``; ``scale`` is the mean length."""

    scale: float

    def sf(self, x) -> np.ndarray:
        return np.exp(-np.asarray(x, dtype=float) / self.scale)

    def pmf(self, upto: int) -> np.ndarray:
        """Integer discretization, ``P[L = l] = sf(l) - sf(l + 1)``."""
        l = np.arange(upto + 1)
        return self.sf(l) - self.sf(l + 1)

    def mean(self) -> float:
        return self.scale

    def to_dict(self) -> dict:
        return {"law": "scaled_exponential", "scale": self.scale, "mean": self.scale}


@dataclass(frozen=True)
class RegimeResult:
    regime: Regime
    psi: float | None
    per_class_law: tuple
    pool_fraction: float
    allocation: tuple[float, float, float]  # (pool, class 1, other classes)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        pool, c1, rest = self.allocation
        return {
            "regime": self.regime.value,
            "psi": self.psi,
            "per_class_law": [law.to_dict() for law in self.per_class_law],
            "pool_fraction": self.pool_fraction,
            "allocation": {"pool": pool, "class1": c1, "rest": rest},
            "diagnostics": dict(self.diagnostics),
        }


def _q_of_psi(fbar1: float, psi: float) -> float:
    return (1.0 - psi) / (fbar1 + 1.0 - psi)


def _bisect_increasing(g, lo: float, hi: float) -> float:
    glo, ghi = g(lo), g(hi)
    if not (glo < 0 < ghi):
        if glo == 0:
            return lo
        if ghi == 0:
            return hi
        raise ArithmeticError(f"no sign change on [{lo}, {hi}]: g={glo}, {ghi}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_psi_linear(params: ScaledParams) -> float:
    """Concentration point ``psi`` for a bottleneck class linear in ``m``."""
    fbar1 = params.fbar[0]
    if fbar1 <= 0:
        raise RegimeError("the linear regime needs fbar1 > 0")
    family = RateFamily.from_params(params)
    mean = family.mean
    if mean == 0:
        return 0.0

    def g(psi):
        q = _q_of_psi(fbar1, psi)
        # q = 0 at psi = 1: infinite tilt, where the log-MGF slope vanishes
        return psi + (family.dlam(-math.log(q)) if q > 0 else 0.0)

    cap = min(mean, 1.0)
    # g(0) < 0 < g(cap) analytically; the shrunken bracket is only used when it is nonempty
    if cap > 4 * _EDGE:
        return _bisect_increasing(g, _EDGE, cap - _EDGE)
    return _bisect_increasing(g, 0.0, cap)


def psi_residuals(params: ScaledParams, psi: float) -> tuple[float, float]:
    """Residuals of the two equivalent conditions on ``psi``.

    Returns ``(|psi + Lambda'(theta)|, |log q - ell'(psi)|)`` with
    ``q = (1 - psi)/(fbar1 + 1 - psi)`` and ``theta = -log q``.
    """
    family = RateFamily.from_params(params)
    q = _q_of_psi(params.fbar[0], psi)
    r_lambda = abs(psi + family.dlam(-math.log(q)))
    if 0 < psi < family.mean:
        r_ell = abs(math.log(q) - ell_sum(family, psi)[1])
    else:
        r_ell = 0.0 if psi == 0 and family.mean == 0 else math.inf
    return r_lambda, r_ell


def marginals_linear(params: ScaledParams, psi: float) -> RegimeResult:
    fbar1 = params.fbar[0]
    family = RateFamily.from_params(params)
    q = _q_of_psi(fbar1, psi)
    laws = tuple(Geometric(r * q) for r in params.varrho)
    if 0 < psi < family.mean:
        slope = ell_sum(family, psi)[1]
    else:
        slope = math.log(q)
    pool = params.kbar1 * math.exp(slope)
    r_lambda, r_ell = psi_residuals(params, psi)
    return RegimeResult(
        regime=Regime.LINEAR_BOTTLENECK,
        psi=psi,
        per_class_law=laws,
        pool_fraction=params.kbar1 * q,
        allocation=(pool, 1.0 - psi, psi - pool),
        diagnostics={"ell_prime_at_psi": slope, "theta": -math.log(q),
                     "residual_lambda_form": r_lambda, "residual_ell_form": r_ell,
                     "load": family.mean},
    )


def solve_overloaded(params: ScaledParams) -> RegimeResult:
    family = RateFamily.from_params(params)
    if family.mean <= 1:
        raise RegimeError(f"overloaded regime needs kbar1 + sbar > 1, got {family.mean}")
    theta1 = solve_theta(family, 1.0)
    e = math.exp(-theta1)
    pool = params.kbar1 * e
    return RegimeResult(
        regime=Regime.SUBLINEAR_OVERLOADED,
        psi=None,
        per_class_law=tuple(Geometric(r * e) for r in params.varrho),
        pool_fraction=pool,
        allocation=(pool, 0.0, max(0.0, 1.0 - pool)),
        diagnostics={"ell_prime_at_1": -theta1,
                     "residual": abs(1.0 + family.dlam(theta1)),
                     "load": family.mean},
    )


def solve_underloaded(params: ScaledParams, m: int, f1: int, EMS: float,
                      thresholds: RegimeThresholds = RegimeThresholds()) -> RegimeResult:
    """Exponential bottleneck law for ``1 << f1 << m`` with spare monomers.

    ``EMS`` is the finite-m mean ``E[M + S]``; the length scale is
    ``(m - EMS) / f1``.
    """
    load = params.mean
    if load >= 1:
        raise RegimeError(f"underloaded regime needs kbar1 + sbar < 1, got {load}")
    if EMS >= m:
        raise RegimeError(f"underloaded regime needs E[M+S] < m, got {EMS} >= {m}")
    if f1 < thresholds.count or f1 / m > thresholds.linear:
        warnings.warn(f"f1={f1}, m={m} is far from 1 << f1 << m; the exponential "
                      "limit may be inaccurate", stacklevel=2)
    laws = (ScaledExponential((m - EMS) / f1),) + tuple(
        Geometric(r) for r in params.varrho[1:])
    return RegimeResult(
        regime=Regime.SUBLINEAR_UNDERLOADED,
        psi=None,
        per_class_law=laws,
        pool_fraction=params.kbar1,
        allocation=(params.kbar1, 1.0 - load, params.sbar),
        diagnostics={"length_scale": (m - EMS) / f1, "load": load},
    )


def _smaller_root(b: float, c: float) -> float:
    """Smaller root of ``x**2 - b x + c`` (``b > 0``, ``c >= 0``), cancellation-free."""
    disc = b * b - 4.0 * c
    if disc < 0:
        raise ArithmeticError("quadratic has no real roots")
    return 2.0 * c / (b + math.sqrt(disc))


def homogeneous_psi(kbar: float, fbar: float) -> float:
    """``psi`` for identical filaments: the root of ``psi^2 - psi(1 + fbar + kbar) + kbar``."""
    if fbar <= 0 or kbar < 0:
        raise DomainError("need fbar > 0 and kbar >= 0")
    if kbar == 0:
        return 0.0
    psi = _smaller_root(1.0 + fbar + kbar, kbar)
    if not 0 < psi < min(kbar, 1.0):
        raise ArithmeticError(f"root {psi} outside (0, min(kbar, 1))")
    return psi


def two_type_psi(fbar1: float, fbar2: float, rho_f: float) -> float:
    """``psi`` for two classes with the pool mean negligible against ``m``."""
    if fbar1 <= 0 or fbar2 <= 0:
        raise DomainError("need fbar1, fbar2 > 0")
    if not 0 < rho_f < 1:
        raise DomainError(f"rho_f must lie in (0, 1), got {rho_f}")
    c = rho_f / (1.0 - rho_f) * fbar2
    b = 1.0 + fbar1 / (1.0 - rho_f) + c
    psi = _smaller_root(b, c)
    if not 0 < psi < min(c, 1.0):
        raise ArithmeticError(f"root {psi} outside (0, min(sbar, 1))")
    return psi


def asymptotic_result(model: NetworkModel, regime: Regime | None = None,
                      thresholds: RegimeThresholds = RegimeThresholds()) -> RegimeResult:
    """Dispatch a concrete model to the applicable limit law.

    ``regime=None`` classifies automatically; ``Regime.EXACT`` (or an
    automatic classification landing there) raises ``RegimeError``.
    """
    params = scale(model)
    if regime is None:
        regime = classify_regime(params, thresholds)
    if regime is Regime.LINEAR_BOTTLENECK:
        return marginals_linear(params, solve_psi_linear(params))
    if regime is Regime.SUBLINEAR_OVERLOADED:
        return solve_overloaded(params)
    if regime is Regime.SUBLINEAR_UNDERLOADED:
        return solve_underloaded(params, model.m, model.classes[0].count,
                                 model.mean_poisson_plus_geometric(), thresholds)
    load = params.mean
    why = "critical load" if abs(load - 1.0) < 1e-12 else "no asymptotic regime applies"
    raise RegimeError(f"{why} (kbar1 + sbar = {load:.6g}, fbar1 = {params.fbar[0]:.3g}); "
                      "use the exact engine")

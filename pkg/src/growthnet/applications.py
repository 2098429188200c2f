"""Fleet dimensioning and the single-bottleneck marginal.

A car-rental network (cars = customers, rental locations = single-server
queues, routes = infinite-server queues) has the same location-length law as
a homogeneous growth network with ``kappa = E[cars in transit]``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .asymptotic import homogeneous_psi
from .errors import DomainError, ValidationError
from .exact import (DEFAULT_CELL_CAP, LogPmf, log_geometric_pmf,
                    log_pmf_poisson_plus_negbin)
from .model import NetworkModel, build_model

__all__ = [
    "FleetProblem",
    "FleetSizing",
    "ServiceLevel",
    "BottleneckSystem",
    "fleet_sizing",
    "fleet_min_customers",
    "fleet_service_level",
    "service_level_details",
    "bottleneck_marginal",
    "bottleneck_translated_model",
]

# both fleet formulas are used near alpha = 1; above this the larger wins
HIGH_ALPHA = 0.95
# absorbs roundoff such as 0.9 / (1 - 0.9) = 9.000000000000002 before ceil
_CEIL_SLACK = 1e-9


@dataclass(frozen=True)
class FleetProblem:
    route_load: float   # expected number of cars in transit
    locations: int
    target_alpha: float

    def __post_init__(self):
        if not self.route_load >= 0:
            raise ValidationError("route_load must be >= 0")
        if int(self.locations) != self.locations or self.locations < 1:
            raise ValidationError("locations must be a positive integer")
        if not 0 < self.target_alpha < 1:
            raise DomainError("target_alpha must lie in (0, 1)")


@dataclass(frozen=True)
class FleetSizing:
    m: int
    m_linear: int
    m_high_alpha: int | None
    heuristic: bool   # True when the two formulas were reconciled by taking the max

    def to_dict(self) -> dict:
        return {"m": self.m, "m_linear": self.m_linear,
                "m_high_alpha": self.m_high_alpha, "heuristic": self.heuristic}


def _ceil(x: float) -> int:
    return max(1, math.ceil(x - _CEIL_SLACK))


def fleet_sizing(problem: FleetProblem) -> FleetSizing:
    a, load, f = problem.target_alpha, problem.route_load, problem.locations
    m_lin = _ceil(a * load + a / (1.0 - a) * f)
    if a < HIGH_ALPHA:
        return FleetSizing(m_lin, m_lin, None, False)
    m_high = _ceil(load + f / (1.0 - a))
    return FleetSizing(max(m_lin, m_high), m_lin, m_high, True)


def fleet_min_customers(problem: FleetProblem) -> int:
    """Smallest fleet for which a location is nonempty with probability ``target_alpha``."""
    return fleet_sizing(problem).m


@dataclass(frozen=True)
class ServiceLevel:
    alpha: float
    psi: float | None
    no_transit: bool  # route_load == 0: alpha = 1 by convention

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "psi": self.psi, "no_transit": self.no_transit}


def service_level_details(m: int, route_load: float, f: int) -> ServiceLevel:
    if m < 1 or f < 1:
        raise ValidationError("m and f must be >= 1")
    if route_load < 0:
        raise ValidationError("route_load must be >= 0")
    if route_load == 0:
        return ServiceLevel(1.0, None, True)
    # psi^2 m - psi (m + f + E) + E = 0 is the homogeneous quadratic scaled by m
    psi = homogeneous_psi(route_load / m, f / m)
    alpha = min(1.0, max(0.0, m * psi / route_load))
    return ServiceLevel(alpha, psi, False)


def fleet_service_level(m: int, route_load: float, f: int) -> float:
    """Approximate probability that a location holds at least one car."""
    out = service_level_details(m, route_load, f)
    if out.no_transit:
        warnings.warn("route_load = 0: service level is 1 by convention", stacklevel=2)
    return out.alpha


@dataclass(frozen=True)
class BottleneckSystem:
    """One bottleneck queue, ``h`` infinite-server and ``f - 1`` other single-server queues."""

    m: int
    poisson_means: tuple[float, ...]
    geo_utilizations: tuple[float, ...]   # rho_2 .. rho_f

    def __post_init__(self):
        object.__setattr__(self, "poisson_means", tuple(float(x) for x in self.poisson_means))
        object.__setattr__(self, "geo_utilizations",
                           tuple(float(x) for x in self.geo_utilizations))
        if int(self.m) != self.m or self.m < 1:
            raise ValidationError("m must be a positive integer")
        if any(not x >= 0 for x in self.poisson_means):
            raise ValidationError("poisson means must be >= 0")
        if any(not 0 < r < 1 for r in self.geo_utilizations):
            raise ValidationError("utilizations must lie in (0, 1)")

    @property
    def f(self) -> int:
        return 1 + len(self.geo_utilizations)

    def mean_total(self) -> float:
        return sum(self.poisson_means) + sum(r / (1 - r) for r in self.geo_utilizations)


def _grouped(utilizations: Sequence[float], skip: int | None = None) -> list[tuple[float, int]]:
    groups: dict[float, int] = {}
    for idx, r in enumerate(utilizations):
        if idx != skip:
            groups[r] = groups.get(r, 0) + 1
    return list(groups.items())


def bottleneck_marginal(system: BottleneckSystem, j: int,
                        cell_cap: int = DEFAULT_CELL_CAP) -> LogPmf:
    """Length law of single-server node ``j`` (``2 <= j <= f``) at population ``m``.

    Only truncated probabilities of the Poisson-plus-geometric total appear,
    since there is a single bottleneck.
    """
    if not 2 <= j <= system.f:
        raise DomainError(f"j must lie in [2, {system.f}], got {j}")
    m = system.m
    theta = sum(system.poisson_means)
    rho = system.geo_utilizations[j - 2]
    full = log_pmf_poisson_plus_negbin(theta, _grouped(system.geo_utilizations), m, cell_cap)
    reduced = log_pmf_poisson_plus_negbin(
        theta, _grouped(system.geo_utilizations, skip=j - 2), m, cell_cap)
    log_cdf_reduced = np.logaddexp.accumulate(reduced)
    log_cdf_full_m = float(np.logaddexp.reduce(full))
    l = np.arange(m + 1)
    log_p = log_geometric_pmf(rho, m) + log_cdf_reduced[m - l] - log_cdf_full_m
    return LogPmf.normalized(log_p)


def bottleneck_translated_model(system: BottleneckSystem) -> NetworkModel:
    """The equivalent growth network: pool mean = total Poisson mean, one bottleneck filament.

    Node ``j`` maps to the class with ``kappa = kappa_1 / rho_j``.
    """
    theta = sum(system.poisson_means)
    if theta <= 0:
        raise DomainError("the translated model needs a positive total Poisson mean")
    specs = [(theta, 1)] + [(theta / r, 1) for r in system.geo_utilizations]
    return build_model(system.m, specs)

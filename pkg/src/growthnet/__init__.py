"""Stationary length distributions of closed growth networks.

Filaments draw monomers from a shared pool; the stationary law is product
form but its normalizer is intractable at scale. This package evaluates the
marginals exactly through an independent-variable representation, gives
their large-``m`` limits, and simulates the chain as an independent check.
"""
from importlib.metadata import PackageNotFoundError, version

from ._backend import BACKEND
from .applications import (BottleneckSystem, FleetProblem, bottleneck_marginal,
                           fleet_min_customers, fleet_service_level)
from .asymptotic import (Geometric, RegimeResult, ScaledExponential, asymptotic_result,
                         homogeneous_psi, marginals_linear, solve_overloaded,
                         solve_psi_linear, solve_underloaded, two_type_psi)
from .errors import CapacityError, DomainError, GrowthNetError, RegimeError, ValidationError
from .exact import (ExactMarginals, LogPmf, brute_force_joint, exact_marginals,
                    marginal_filament, marginal_free_pool, partition_function, pmf_M_plus_S,
                    weighted_truncated_moment)
from .model import (FilamentClass, NetworkModel, Regime, RegimeThresholds, ScaledParams,
                    build_model, classify_regime, scale)
from .ratefns import RateFamily, ell_M, ell_S_class, ell_sum, solve_theta
from .simulate import SimConfig, SimEstimate, compare_distributions, gillespie_run

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

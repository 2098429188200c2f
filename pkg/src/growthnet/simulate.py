"""Event-driven simulation of the attach/detach chain.

Monomers attach to filament ``i`` at rate ``M * lambda_i`` (``M`` free
monomers) and detach at rate ``mu_i = lambda_i * kappa_i`` while the filament
is nonempty. Occupancy is accumulated in simulated time after a burn-in, and
pooled over the filaments of a class.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend, _fallback
from .errors import DomainError, ValidationError
from .model import NetworkModel

__all__ = [
    "SimConfig",
    "SimEstimate",
    "RNG_ALGORITHM",
    "gillespie_run",
    "merge_estimates",
    "compare_distributions",
]

RNG_ALGORITHM = "PCG64"


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    events: int = 1_000_000
    burnin_events: int = 10_000
    lambda_scale: float = 1.0
    # per-class attach rates; only changes mixing speed, never the stationary law
    class_lambdas: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.events < 1:
            raise ValidationError("events must be >= 1")
        if self.burnin_events < 0:
            raise ValidationError("burnin_events must be >= 0")
        if not self.lambda_scale > 0:
            raise ValidationError("lambda_scale must be > 0")
        if self.class_lambdas is not None:
            object.__setattr__(self, "class_lambdas", tuple(float(x) for x in self.class_lambdas))
            if any(not x > 0 for x in self.class_lambdas):
                raise ValidationError("class_lambdas must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must fit in 64 bits")

    def to_dict(self) -> dict:
        return {"seed": self.seed, "events": self.events,
                "burnin_events": self.burnin_events, "lambda_scale": self.lambda_scale,
                "class_lambdas": list(self.class_lambdas) if self.class_lambdas else None}


@dataclass(frozen=True)
class SimEstimate:
    free_pool_pmf: np.ndarray
    filament_pmf: tuple[np.ndarray, ...]
    total_sim_time: float
    events_used: int
    seed: int
    rng_algorithm: str = RNG_ALGORITHM
    backend: str = ""

    def to_dict(self) -> dict:
        return {
            "free_pool_pmf": self.free_pool_pmf.tolist(),
            "filament_pmf": [p.tolist() for p in self.filament_pmf],
            "total_sim_time": self.total_sim_time,
            "events_used": self.events_used,
            "seed": self.seed,
            "rng_algorithm": self.rng_algorithm,
            "backend": self.backend,
        }


def gillespie_run(model: NetworkModel, config: SimConfig, backend: str | None = None) -> SimEstimate:
    """Simulate ``config.events`` transitions after ``config.burnin_events``.

    ``backend`` may force ``"python"``; by default the compiled loop is used
    when available. Both give identical output for the same seed.
    """
    if config.class_lambdas is not None:
        if len(config.class_lambdas) != model.K:
            raise ValidationError("class_lambdas needs one entry per class")
        lam = np.asarray(config.class_lambdas, dtype=np.float64)
    else:
        lam = np.full(model.K, config.lambda_scale, dtype=np.float64)
    mu = lam * np.asarray(model.kappas, dtype=np.float64)
    counts = np.asarray(model.counts, dtype=np.int64)
    kernels = _fallback if backend == "python" else _backend.kernels
    bitgen = np.random.PCG64(config.seed)
    pool, occ, t = kernels.gillespie_loop(counts, lam, mu, model.m,
                                          config.burnin_events, config.events, bitgen)
    pool = np.asarray(pool) / t
    occ = np.asarray(occ)
    filaments = tuple(occ[k] / (counts[k] * t) for k in range(model.K))
    return SimEstimate(pool, filaments, float(t), config.events, config.seed,
                       backend=kernels.BACKEND)


def merge_estimates(estimates: Sequence[SimEstimate]) -> SimEstimate:
    """Combine independent runs by weighting each with its simulated time."""
    if not estimates:
        raise ValidationError("nothing to merge")
    total = sum(e.total_sim_time for e in estimates)
    pool = sum(e.free_pool_pmf * e.total_sim_time for e in estimates) / total
    K = len(estimates[0].filament_pmf)
    fil = tuple(sum(e.filament_pmf[k] * e.total_sim_time for e in estimates) / total
                for k in range(K))
    return SimEstimate(pool, fil, total, sum(e.events_used for e in estimates),
                       estimates[0].seed, estimates[0].rng_algorithm, estimates[0].backend)


def _as_pmf(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-9:
        raise DomainError(f"{name} is not a normalized pmf")
    return arr


def compare_distributions(a, b) -> tuple[float, float]:
    """Total-variation distance and largest pointwise gap between two pmfs on 0..n."""
    a = _as_pmf(a, "a")
    b = _as_pmf(b, "b")
    n = max(len(a), len(b))
    a = np.pad(a, (0, n - len(a)))
    b = np.pad(b, (0, n - len(b)))
    diff = np.abs(a - b)
    return 0.5 * float(diff.sum()), float(diff.max())

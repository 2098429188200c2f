"""Exact finite-m marginals through the Poisson/negative-binomial representation.

The closed network's marginals are ratios of expectations over independent
variables: a Poisson pool variable with mean ``kappa_1`` and, for every
non-bottleneck filament, a geometric variable with ratio ``kappa_1/kappa_i``.
Every such expectation is a truncated sum over ``{0, ..., m}`` of the law of
their total, computed here in log domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln, logsumexp

from ._backend import log_convolve
from .errors import CapacityError, DomainError
from .model import NetworkModel
from .ratefns import log_falling_factorial

__all__ = [
    "LogPmf",
    "ExactMarginals",
    "BruteForceJoint",
    "DEFAULT_CELL_CAP",
    "DEFAULT_STATE_CAP",
    "log_poisson_pmf",
    "log_negbin_pmf",
    "log_geometric_pmf",
    "log_pmf_poisson_plus_negbin",
    "pmf_M_plus_S",
    "weighted_truncated_moment",
    "partition_function",
    "marginal_free_pool",
    "marginal_filament",
    "exact_marginals",
    "brute_force_joint",
]

DEFAULT_CELL_CAP = 10_000_000
DEFAULT_STATE_CAP = 2_000_000

# renormalization residual above which the representation is considered broken
_RESIDUAL_LIMIT = 1e-9


@dataclass(frozen=True)
class LogPmf:
    """A pmf on ``{0, ..., n}`` stored as log-probabilities.

    ``truncated`` pmfs are the head of a longer law; ``tail_bound`` bounds
    the mass beyond ``n``. ``residual`` is ``|sum p - 1|`` before the final
    renormalization, when one was applied.
    """

    log_p: np.ndarray
    truncated: bool = False
    tail_bound: float = 0.0
    residual: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.log_p, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "log_p", arr)

    @property
    def support_max(self) -> int:
        return len(self.log_p) - 1

    @property
    def p(self) -> np.ndarray:
        return np.exp(self.log_p)

    def log_total(self) -> float:
        return float(logsumexp(self.log_p))

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.log_p)), self.p))

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.p)

    def prob_positive(self) -> float:
        """``P[X > 0]`` computed without cancellation."""
        if len(self.log_p) == 1:
            return 0.0
        return float(np.exp(logsumexp(self.log_p[1:])))

    @classmethod
    def normalized(cls, log_p: np.ndarray) -> "LogPmf":
        total = logsumexp(log_p)
        residual = abs(math.expm1(total))
        return cls(log_p - total, residual=residual)


@dataclass(frozen=True)
class ExactMarginals:
    """Free-pool law, one filament law per class, and ``log c_{m,f}``."""

    model: NetworkModel
    free_pool: LogPmf
    filament: tuple[LogPmf, ...]
    log_partition: float

    def mean_conservation_gap(self) -> float:
        """Relative gap in ``E[M] + sum_i f_i E[L_i] = m``."""
        total = self.free_pool.mean() + sum(
            c.count * pmf.mean() for c, pmf in zip(self.model.classes, self.filament))
        return abs(total - self.model.m) / self.model.m

    def flow_conservation_gaps(self) -> list[float]:
        """Relative gaps in ``kappa_i P[L_i > 0] = E[M]`` per class."""
        em = self.free_pool.mean()
        return [abs(c.kappa * pmf.prob_positive() - em) / em
                for c, pmf in zip(self.model.classes, self.filament)]


def log_poisson_pmf(mean: float, upto: int) -> np.ndarray:
    j = np.arange(upto + 1, dtype=np.float64)
    if mean == 0:
        out = np.full(upto + 1, -np.inf)
        out[0] = 0.0
        return out
    return j * math.log(mean) - mean - gammaln(j + 1.0)


def log_negbin_pmf(count: int, varrho: float, upto: int) -> np.ndarray:
    """Law of a sum of ``count`` i.i.d. geometrics with ``P[L >= l] = varrho**l``."""
    j = np.arange(upto + 1, dtype=np.float64)
    if count == 0:
        out = np.full(upto + 1, -np.inf)
        out[0] = 0.0
        return out
    return (gammaln(count + j) - gammaln(count) - gammaln(j + 1.0)
            + j * math.log(varrho) + count * math.log1p(-varrho))


def log_geometric_pmf(varrho: float, upto: int) -> np.ndarray:
    return log_negbin_pmf(1, varrho, upto)


def _log_mgf(theta, poisson_mean, terms):
    val = poisson_mean * math.expm1(theta)
    for varrho, count in terms:
        val += count * (math.log1p(-varrho) - math.log1p(-varrho * math.exp(theta)))
    return val


def _chernoff_right_tail(poisson_mean, terms, threshold) -> float:
    """Upper bound on ``P[Z >= threshold]`` by optimizing the exponential moment."""
    terms = [(r, c) for r, c in terms if c > 0]
    mean = poisson_mean + sum(c * r / (1 - r) for r, c in terms)
    if threshold <= mean:
        return 1.0
    theta_max = -math.log(max(r for r, _ in terms)) if terms else 700.0
    res = minimize_scalar(
        lambda th: _log_mgf(th, poisson_mean, terms) - th * threshold,
        bounds=(0.0, theta_max * (1 - 1e-9)), method="bounded")
    return float(min(1.0, math.exp(min(0.0, res.fun))))


def log_pmf_poisson_plus_negbin(poisson_mean: float, terms, upto: int,
                                cell_cap: int = DEFAULT_CELL_CAP) -> np.ndarray:
    """Log pmf of Poisson(mean) plus independent NB(count, varrho) terms on ``{0..upto}``.

    ``terms`` is a sequence of ``(varrho, count)``. Intermediate results are
    truncated at ``upto``, which is exact for every entry that is kept.
    """
    terms = [(float(r), int(c)) for r, c in terms if int(c) > 0]
    required = (upto + 1) * (1 + len(terms))
    if required > cell_cap:
        raise CapacityError(
            f"pmf on {{0..{upto}}} with {len(terms)} class factor(s) needs "
            f"{required} cells, cap is {cell_cap}", required=required, cap=cell_cap)
    acc = log_poisson_pmf(poisson_mean, upto)
    for varrho, count in terms:
        acc = log_convolve(acc, log_negbin_pmf(count, varrho, upto), upto + 1)
    return acc


def _representation_terms(model: NetworkModel, exclude_one_of_class=None):
    k1 = model.classes[0].kappa
    terms = []
    for i, c in enumerate(model.classes[1:], start=1):
        count = c.count - (1 if exclude_one_of_class == i else 0)
        terms.append((k1 / c.kappa, count))
    return terms


def pmf_M_plus_S(model: NetworkModel, upto: int | None = None,
                 exclude_one_of_class: int | None = None,
                 cell_cap: int = DEFAULT_CELL_CAP) -> LogPmf:
    """Law of the pool variable plus all non-bottleneck geometric variables.

    ``exclude_one_of_class`` (a class index >= 1, zero-based) drops one
    filament of that class from the sum.
    """
    if upto is None:
        upto = model.m
    if upto < 0:
        raise DomainError("upto must be >= 0")
    if exclude_one_of_class is not None and not 1 <= exclude_one_of_class < model.K:
        raise DomainError("exclude_one_of_class must index a non-bottleneck class")
    terms = _representation_terms(model, exclude_one_of_class)
    k1 = model.classes[0].kappa
    log_p = log_pmf_poisson_plus_negbin(k1, terms, upto, cell_cap)
    tail = _chernoff_right_tail(k1, terms, upto + 1)
    return LogPmf(log_p, truncated=True, tail_bound=tail)


def _check_cover(pmf: LogPmf, n: int):
    if pmf.support_max < n:
        raise DomainError(f"pmf covers {{0..{pmf.support_max}}}, need {{0..{n}}}")


def weighted_truncated_moment(n: int, k: int, pmf: LogPmf) -> float:
    """``log E[(n + k - Z)_k ; Z <= n]`` for ``Z`` distributed as ``pmf``."""
    _check_cover(pmf, n)
    j = np.arange(n + 1)
    terms = log_falling_factorial(n + k - j, k) + pmf.log_p[: n + 1]
    return float(logsumexp(terms))


def _log_rising_weights(order: int, upto: int) -> np.ndarray:
    """``log (r + order)_order`` for ``r = 0..upto``."""
    r = np.arange(upto + 1)
    return log_falling_factorial(r + order, order)


class _Representation:
    """Shared pieces of the representation formulas for one model."""

    def __init__(self, model: NetworkModel, cell_cap: int = DEFAULT_CELL_CAP):
        self.model = model
        self.cell_cap = cell_cap
        self.m = model.m
        self.f1 = model.classes[0].count
        self.k1 = model.classes[0].kappa

    @cached_property
    def pmf_Z(self) -> LogPmf:
        return pmf_M_plus_S(self.model, cell_cap=self.cell_cap)

    @cached_property
    def log_denominator(self) -> float:
        return weighted_truncated_moment(self.m, self.f1 - 1, self.pmf_Z)

    def _tail_sums(self, order: int, log_pmf: np.ndarray) -> np.ndarray:
        """``out[r] = log sum_{j<=r} (r - j + order)_order P[j]`` for ``r = 0..m``."""
        w = _log_rising_weights(order, self.m)
        return log_convolve(w, log_pmf, self.m + 1)

    def log_partition(self) -> float:
        m = self.m
        log_poisson_at_m = m * math.log(self.k1) - self.k1 - gammaln(m + 1.0)
        log_s0 = sum(count * math.log1p(-r)
                     for r, count in _representation_terms(self.model))
        return (self.log_denominator - gammaln(self.f1) - log_poisson_at_m - log_s0)

    def free_pool(self) -> LogPmf:
        m = self.m
        log_S = log_pmf_poisson_plus_negbin(0.0, _representation_terms(self.model), m,
                                            self.cell_cap)
        tail = self._tail_sums(self.f1 - 1, log_S)
        n = np.arange(m + 1)
        log_p = log_poisson_pmf(self.k1, m) + tail[m - n] - self.log_denominator
        return LogPmf.normalized(log_p)

    def filament(self, i: int) -> LogPmf:
        m = self.m
        l = np.arange(m + 1)
        if i == 0 and self.f1 == 1:
            log_Z = self.pmf_Z.log_p
            log_p = log_Z[m - l] - self.log_denominator
        elif i == 0:
            tail = self._tail_sums(self.f1 - 2, self.pmf_Z.log_p)
            log_p = math.log(self.f1 - 1) + tail[m - l] - self.log_denominator
        else:
            varrho = self.k1 / self.model.classes[i].kappa
            reduced = pmf_M_plus_S(self.model, exclude_one_of_class=i,
                                   cell_cap=self.cell_cap)
            tail = self._tail_sums(self.f1 - 1, reduced.log_p)
            log_p = log_geometric_pmf(varrho, m) + tail[m - l] - self.log_denominator
        return LogPmf.normalized(log_p)


def _check_residual(pmf: LogPmf, what: str) -> LogPmf:
    if pmf.residual > _RESIDUAL_LIMIT:
        raise ArithmeticError(f"{what}: normalization residual {pmf.residual:.3e}")
    return pmf


def partition_function(model: NetworkModel, cell_cap: int = DEFAULT_CELL_CAP) -> float:
    """``log c_{m,f}``, the log normalizer of the product-form law."""
    return _Representation(model, cell_cap).log_partition()


def marginal_free_pool(model: NetworkModel, cell_cap: int = DEFAULT_CELL_CAP) -> LogPmf:
    return _check_residual(_Representation(model, cell_cap).free_pool(), "free pool")


def marginal_filament(model: NetworkModel, class_index: int,
                      cell_cap: int = DEFAULT_CELL_CAP) -> LogPmf:
    """Length law of one filament of class ``class_index`` (zero-based)."""
    if not 0 <= class_index < model.K:
        raise DomainError(f"class_index must lie in [0, {model.K}), got {class_index}")
    rep = _Representation(model, cell_cap)
    return _check_residual(rep.filament(class_index), f"class {class_index}")


def exact_marginals(model: NetworkModel, cell_cap: int = DEFAULT_CELL_CAP) -> ExactMarginals:
    rep = _Representation(model, cell_cap)
    pool = _check_residual(rep.free_pool(), "free pool")
    fil = tuple(_check_residual(rep.filament(i), f"class {i}") for i in range(model.K))
    return ExactMarginals(model, pool, fil, rep.log_partition())


@dataclass(frozen=True)
class BruteForceJoint:
    """Every state of the product-form law with its probability."""

    model: NetworkModel
    states: np.ndarray      # (n_states, f) filament lengths
    log_prob: np.ndarray
    log_normalizer: float = field(default=0.0)

    @property
    def prob(self) -> np.ndarray:
        return np.exp(self.log_prob)

    def free_pool_pmf(self) -> np.ndarray:
        pool = self.model.m - self.states.sum(axis=1)
        return np.bincount(pool, weights=self.prob, minlength=self.model.m + 1)

    def filament_pmf(self, filament: int) -> np.ndarray:
        return np.bincount(self.states[:, filament], weights=self.prob,
                           minlength=self.model.m + 1)

    def class_pmf(self, class_index: int) -> np.ndarray:
        first = sum(self.model.counts[:class_index])
        return self.filament_pmf(first)


def _enumerate_states(m: int, f: int) -> np.ndarray:
    states = np.zeros((1, 0), dtype=np.int64)
    used = np.zeros(1, dtype=np.int64)
    for _ in range(f):
        reps = m - used + 1
        parent = np.repeat(np.arange(len(states)), reps)
        starts = np.repeat(np.cumsum(reps) - reps, reps)
        new = np.arange(reps.sum()) - starts
        states = np.column_stack([states[parent], new])
        used = used[parent] + new
    return states


def brute_force_joint(model: NetworkModel, state_cap: int = DEFAULT_STATE_CAP) -> BruteForceJoint:
    """Enumerate the joint law directly from the product form."""
    m, f = model.m, model.f
    n_states = math.comb(m + f, f)
    if n_states > state_cap:
        raise CapacityError(f"{n_states} states exceed the cap {state_cap}",
                            required=n_states, cap=state_cap)
    states = _enumerate_states(m, f)
    log_kappa = np.repeat(np.log(model.kappas), model.counts)
    total = states.sum(axis=1)
    log_w = gammaln(m + 1.0) - states @ log_kappa - gammaln(m - total + 1.0)
    log_c = float(logsumexp(log_w))
    return BruteForceJoint(model, states, log_w - log_c, log_c)

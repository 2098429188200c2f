"""Closed growth-network description, scaling and regime selection."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ValidationError

__all__ = [
    "FilamentClass",
    "NetworkModel",
    "ScaledParams",
    "Regime",
    "RegimeThresholds",
    "build_model",
    "scale",
    "classify_regime",
]


@dataclass(frozen=True)
class FilamentClass:
    """Filaments sharing one dissociation constant (detach/attach rate ratio)."""

    kappa: float
    count: int

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValidationError(f"kappa must be positive and finite, got {self.kappa!r}")
        if int(self.count) != self.count or self.count < 1:
            raise ValidationError(f"count must be a positive integer, got {self.count!r}")
        object.__setattr__(self, "count", int(self.count))


@dataclass(frozen=True)
class NetworkModel:
    """``m`` monomers shared by filament classes sorted by increasing kappa."""

    m: int
    classes: tuple[FilamentClass, ...]

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValidationError(f"m must be a nonnegative integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.classes:
            raise ValidationError("at least one filament class is required")
        kappas = [c.kappa for c in self.classes]
        if any(b <= a for a, b in zip(kappas, kappas[1:])):
            raise ValidationError("classes must be strictly increasing in kappa")

    @property
    def K(self) -> int:
        return len(self.classes)

    @property
    def f(self) -> int:
        return sum(c.count for c in self.classes)

    @property
    def kappas(self) -> list[float]:
        return [c.kappa for c in self.classes]

    @property
    def counts(self) -> list[int]:
        return [c.count for c in self.classes]

    @property
    def varrho(self) -> list[float]:
        k1 = self.classes[0].kappa
        return [1.0] + [k1 / c.kappa for c in self.classes[1:]]

    def mean_poisson_plus_geometric(self) -> float:
        """E[M + S] of the independent representation variables (finite m)."""
        k1 = self.classes[0].kappa
        total = k1
        for c in self.classes[1:]:
            r = k1 / c.kappa
            total += c.count * r / (1.0 - r)
        return total

    def to_dict(self) -> dict:
        return {"m": self.m,
                "classes": [{"kappa": c.kappa, "count": c.count} for c in self.classes]}


def build_model(m: int, class_specs: Iterable[tuple[float, int]]) -> NetworkModel:
    """Validate, merge equal kappas and sort the classes ascending.

    >>> build_model(10, [(2.0, 1), (1.0, 3)]).counts
    [3, 1]
    """
    if isinstance(m, bool) or not float(m).is_integer() or m < 1:
        raise ValidationError(f"m must be a positive integer, got {m!r}")
    merged: dict[float, int] = {}
    for spec in class_specs:
        kappa, count = spec
        FilamentClass(float(kappa), count)  # validates
        merged[float(kappa)] = merged.get(float(kappa), 0) + int(count)
    if not merged:
        raise ValidationError("at least one filament class is required")
    classes = tuple(FilamentClass(k, merged[k]) for k in sorted(merged))
    return NetworkModel(int(m), classes)


@dataclass(frozen=True)
class ScaledParams:
    """Quantities normalized by ``m`` that enter the limit formulas.

    ``varrho[0]`` is always 1 (the bottleneck class itself). ``m`` is kept
    when the parameters come from a concrete model and is ``None`` for
    parameters specified directly at the limit.
    """

    kbar1: float
    fbar: tuple[float, ...]
    varrho: tuple[float, ...]
    sbar: float = field(default=None)
    m: int | None = None

    def __post_init__(self):
        fbar = tuple(float(x) for x in self.fbar)
        varrho = tuple(float(x) for x in self.varrho)
        object.__setattr__(self, "fbar", fbar)
        object.__setattr__(self, "varrho", varrho)
        if len(fbar) != len(varrho) or not fbar:
            raise ValidationError("fbar and varrho must be nonempty and of equal length")
        if self.kbar1 < 0 or any(x < 0 for x in fbar):
            raise ValidationError("kbar1 and fbar must be nonnegative")
        if varrho[0] != 1.0:
            raise ValidationError("varrho[0] must equal 1")
        if any(not 0 < r < 1 for r in varrho[1:]):
            raise ValidationError("varrho[i] must lie in (0, 1) for i >= 2")
        if any(b >= a for a, b in zip(varrho, varrho[1:])):
            raise ValidationError("varrho must be strictly decreasing")
        sbar = sum(f * r / (1.0 - r) for f, r in zip(fbar[1:], varrho[1:]))
        if self.sbar is None:
            object.__setattr__(self, "sbar", sbar)
        elif not math.isclose(self.sbar, sbar, rel_tol=1e-12, abs_tol=1e-15):
            raise ValidationError(f"sbar={self.sbar} inconsistent with classes ({sbar})")

    @property
    def mean(self) -> float:
        return self.kbar1 + self.sbar

    @property
    def class_terms(self) -> list[tuple[float, float]]:
        return list(zip(self.fbar[1:], self.varrho[1:]))

    @classmethod
    def from_limits(cls, kbar1: float, fbar: Sequence[float],
                    varrho: Sequence[float]) -> "ScaledParams":
        return cls(float(kbar1), tuple(fbar), tuple(varrho))


def scale(model: NetworkModel) -> ScaledParams:
    m = model.m
    k1 = model.classes[0].kappa
    return ScaledParams(
        kbar1=k1 / m,
        fbar=tuple(c.count / m for c in model.classes),
        varrho=tuple(model.varrho),
        m=m,
    )


class Regime(enum.Enum):
    LINEAR_BOTTLENECK = "LinearBottleneck"
    SUBLINEAR_OVERLOADED = "SublinearOverloaded"
    SUBLINEAR_UNDERLOADED = "SublinearUnderloaded"
    EXACT = "Exact"


@dataclass(frozen=True)
class RegimeThresholds:
    # finite-m proxies for "f1 linear in m" and "1 << f1"; not limit statements
    linear: float = 0.05
    count: int = 10


def classify_regime(params: ScaledParams,
                    thresholds: RegimeThresholds = RegimeThresholds(),
                    f1: int | None = None) -> Regime:
    """Pick the asymptotic regime a finite instance most resembles.

    ``f1`` (the bottleneck filament count) defaults to ``fbar[0] * m`` when
    the params carry ``m``; without either, the count test is skipped.
    """
    fbar1 = params.fbar[0]
    if fbar1 >= thresholds.linear:
        return Regime.LINEAR_BOTTLENECK
    load = params.mean
    if load > 1:
        return Regime.SUBLINEAR_OVERLOADED
    if f1 is None and params.m is not None:
        f1 = round(fbar1 * params.m)
    if load < 1 and (f1 is None or f1 >= thresholds.count):
        return Regime.SUBLINEAR_UNDERLOADED
    return Regime.EXACT

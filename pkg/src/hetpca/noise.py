"""Heteroscedastic noise mixtures and model parameters.

A mixture is a finite list of noise levels, each a ``(proportion, variance)``
pair. Variances are stored squared; conversion from standard deviations
happens at the input boundary (see :mod:`hetpca.config`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

from .errors import (
    EmptyMixture,
    InvalidParams,
    InvalidProportions,
    NegativeVariance,
    NonpositiveScale,
    ProportionSumInvalid,
)

SUM_TOL = 1e-12
MERGE_RTOL = 1e-12


@dataclass(frozen=True)
class NoiseMixture:
    """Noise levels sorted by strictly increasing variance.

    Build instances with :func:`validate_and_normalize`; the constructor does
    not check invariants.
    """

    proportions: Tuple[float, ...]
    variances: Tuple[float, ...]

    @property
    def levels(self) -> Tuple[Tuple[float, float], ...]:
        return tuple(zip(self.proportions, self.variances))

    @property
    def num_levels(self) -> int:
        return len(self.variances)

    @property
    def max_variance(self) -> float:
        return self.variances[-1]

    @property
    def is_noiseless(self) -> bool:
        return self.variances[-1] == 0.0


@dataclass(frozen=True)
class ModelParams:
    sample_ratio: float
    amplitude: float

    def __post_init__(self):
        c, theta = self.sample_ratio, self.amplitude
        if not (math.isfinite(c) and c > 1):
            raise InvalidParams(f"sample ratio c must satisfy c > 1, got c={c!r}")
        if not (math.isfinite(theta) and theta > 0):
            raise InvalidParams(f"amplitude theta must be > 0, got theta={theta!r}")


def _same_variance(a: float, b: float) -> bool:
    return abs(a - b) <= MERGE_RTOL * max(abs(a), abs(b))


def validate_and_normalize(levels: Iterable[Sequence[float]]) -> NoiseMixture:
    """Validate ``(proportion, variance)`` pairs and return a canonical mixture.

    Proportions must be positive and sum to one within ``1e-12``; they are
    never rescaled. Levels whose variances agree to a relative ``1e-12`` are
    merged and the result is sorted by ascending variance.
    """
    pairs = [(float(p), float(v)) for p, v in levels]
    if not pairs:
        raise EmptyMixture("noise mixture needs at least one level")
    for p, v in pairs:
        if not (math.isfinite(p) and p > 0):
            raise InvalidProportions(f"proportions must be > 0, got {p!r}")
        if not math.isfinite(v):
            raise NegativeVariance(f"variance must be finite, got {v!r}")
        if v < 0:
            raise NegativeVariance(f"variance must be >= 0, got {v!r}")
    total = math.fsum(p for p, _ in pairs)
    if abs(total - 1.0) > SUM_TOL:
        raise ProportionSumInvalid(f"proportions sum to {total!r}, expected 1")

    pairs.sort(key=lambda pv: pv[1])
    merged: list[list[float]] = []
    for p, v in pairs:
        if merged and _same_variance(merged[-1][1], v):
            merged[-1][0] += p
        else:
            merged.append([p, v])
    return NoiseMixture(
        proportions=tuple(p for p, _ in merged),
        variances=tuple(v for _, v in merged),
    )


def homoscedastic(variance: float) -> NoiseMixture:
    return validate_and_normalize([(1.0, variance)])


def average_variance(mix: NoiseMixture) -> float:
    return math.fsum(p * v for p, v in mix.levels)


def lambda_split(lam: float, avg_variance: float, proportions: Sequence[float]) -> NoiseMixture:
    """Two-level mixture with fixed average variance, split by ``lam``.

    ``lam = 0.5`` is homoscedastic; ``lam = 1`` puts all the noise on the
    first group and leaves the second noiseless.
    """
    if len(proportions) != 2:
        raise InvalidProportions("lambda split needs exactly two proportions")
    p1, p2 = (float(p) for p in proportions)
    if not (p1 > 0 and p2 > 0) or abs(p1 + p2 - 1.0) > SUM_TOL:
        raise InvalidProportions(f"need p1, p2 > 0 with p1 + p2 = 1, got {(p1, p2)}")
    if not 0.0 <= lam <= 1.0:
        raise InvalidProportions(f"lambda must lie in [0, 1], got {lam!r}")
    if avg_variance < 0:
        raise NegativeVariance(f"average variance must be >= 0, got {avg_variance!r}")
    denom = p1 * lam + p2 * (1.0 - lam)
    v1 = lam / denom * avg_variance
    v2 = (1.0 - lam) / denom * avg_variance
    return validate_and_normalize([(p1, v1), (p2, v2)])


def balanced_split(avg_variance: float, proportions: Sequence[float]) -> NoiseMixture:
    """Mixture where every group contributes equally to the average variance,
    i.e. ``variance_l = avg / (L * p_l)``."""
    L = len(proportions)
    return validate_and_normalize(
        [(p, avg_variance / (L * p)) for p in proportions]
    )


def scale_mixture(mix: NoiseMixture, params: ModelParams, t: float):
    """Scale noise standard deviations and the amplitude by ``t``."""
    if not (math.isfinite(t) and t > 0):
        raise NonpositiveScale(f"scale must be > 0, got {t!r}")
    scaled = NoiseMixture(
        proportions=mix.proportions,
        variances=tuple(v * t * t for v in mix.variances),
    )
    return scaled, ModelParams(params.sample_ratio, params.amplitude * t)

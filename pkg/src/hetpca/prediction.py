"""Asymptotic recovery of a rank-one subspace by PCA under heteroscedastic noise.

With ``c`` samples per dimension, amplitude ``theta`` and noise levels
``(p_l, s_l)`` (``s_l`` a variance), define

    A(x) = 1 - c * sum_l p_l s_l^2 / (x - s_l)^2
    B(x) = 1 - c theta^2 * sum_l p_l / (x - s_l)

The squared inner product between the true and estimated subspace converges
to ``max(0, A(beta) / (beta B'(beta)))`` where ``beta`` is the largest real
root of ``B``. Both functions increase from -inf to 1 to the right of the
largest variance, so each has exactly one root there.

Scalar work is done in plain Python floats; L is small and call overhead
dominates any vectorization gain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NoRoot, NoTransition, PoleEvaluation
from .noise import ModelParams, NoiseMixture, homoscedastic

BISECT_RTOL = 1e-6
RESIDUAL_RTOL = 1e-12
MAX_NEWTON = 100


@dataclass(frozen=True)
class SecularFunctions:
    mixture: NoiseMixture
    params: ModelParams

    @property
    def _scale(self) -> float:
        return self.params.sample_ratio * self.params.amplitude ** 2

    def _check_pole(self, x: float):
        for s in self.mixture.variances:
            if x == s:
                raise PoleEvaluation(f"x={x!r} coincides with the pole at variance {s!r}")

    def A(self, x: float) -> float:
        self._check_pole(x)
        c = self.params.sample_ratio
        acc = math.fsum(p * s * s / ((x - s) * (x - s)) for p, s in self.mixture.levels)
        return 1.0 - c * acc

    def B(self, x: float) -> float:
        self._check_pole(x)
        return 1.0 - self._scale * math.fsum(p / (x - s) for p, s in self.mixture.levels)

    def B_prime(self, x: float) -> float:
        self._check_pole(x)
        return self._scale * math.fsum(p / ((x - s) * (x - s)) for p, s in self.mixture.levels)

    def A_prime(self, x: float) -> float:
        self._check_pole(x)
        c = self.params.sample_ratio
        return 2.0 * c * math.fsum(
            p * s * s / ((x - s) * (x - s) * (x - s)) for p, s in self.mixture.levels
        )

    def pole_sum(self, x: float) -> float:
        """``sum_l p_l / (x - s_l)``; roots of B are where this equals 1/(c theta^2)."""
        self._check_pole(x)
        return math.fsum(p / (x - s) for p, s in self.mixture.levels)

    def _B_scale(self, x: float) -> float:
        # magnitude of the terms in B, used to make residuals relative
        return 1.0 + self._scale * math.fsum(abs(p / (x - s)) for p, s in self.mixture.levels)

    def _A_scale(self, x: float) -> float:
        c = self.params.sample_ratio
        return 1.0 + c * math.fsum(p * s * s / ((x - s) * (x - s)) for p, s in self.mixture.levels)


def evaluate_A(sf: SecularFunctions, x: float) -> float:
    return sf.A(x)


def evaluate_B(sf: SecularFunctions, x: float) -> float:
    return sf.B(x)


def evaluate_B_prime(sf: SecularFunctions, x: float) -> float:
    return sf.B_prime(x)


def _bisect(f, lo: float, hi: float, rtol: float) -> tuple[float, float, float]:
    """Shrink ``(lo, hi]`` around the sign change of an increasing ``f``.

    The initial ``lo`` is never evaluated, so it may sit on a pole; bisection
    continues until some point with ``f < 0`` has been seen. Returns
    ``(lo, f(lo), hi)`` with ``f(lo) < 0 <= f(hi)``.
    """
    f_lo = None
    while f_lo is None or hi - lo > rtol * abs(hi):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid < 0:
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    if f_lo is None:
        # root is within one ulp of the pole
        return hi, f(hi), hi
    return lo, f_lo, hi


def _newton_from_left(f, fprime, scale, x: float, fx: float, hi: float) -> float:
    """Newton polish of an increasing concave function starting at ``f(x) < 0``.

    Tangents lie above a concave function, so the iterates increase
    monotonically towards the root and never leave ``(x, hi]``.
    """
    for _ in range(MAX_NEWTON):
        if abs(fx) <= RESIDUAL_RTOL * scale(x):
            break
        x_new = min(x - fx / fprime(x), hi)
        if x_new == x:
            break
        x = x_new
        fx = f(x)
        if fx >= 0:
            break
    return x


def largest_root_B(sf: SecularFunctions) -> float:
    """beta: the unique root of B to the right of the largest variance."""
    pole = sf.mixture.max_variance
    # sum_l p_l/(x - s_l) <= 1/(x - s_max), hence B(s_max + c theta^2) >= 0
    x, fx, hi = _bisect(sf.B, pole, pole + sf._scale, BISECT_RTOL)
    return _newton_from_left(sf.B, sf.B_prime, sf._B_scale, x, fx, hi)


def largest_root_A(sf: SecularFunctions) -> float:
    """alpha: the unique root of A to the right of the largest variance."""
    pole = sf.mixture.max_variance
    if pole == 0.0:
        raise NoRoot("A is identically 1 for a noiseless mixture")
    c = sf.params.sample_ratio
    # s^2/(x - s)^2 grows with s below x, so A(s_max (1 + sqrt c)) >= 0
    hi = pole * (1.0 + math.sqrt(c))
    while sf.A(hi) < 0:
        hi = pole + 2.0 * (hi - pole)
    x, fx, hi = _bisect(sf.A, pole, hi, BISECT_RTOL)
    return _newton_from_left(sf.A, sf.A_prime, sf._A_scale, x, fx, hi)


def _root_in_interval(f, lo: float, hi: float) -> float:
    # f increases from -inf at lo+ to +inf at hi-; bisect to machine precision
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        fm = f(mid)
        if fm == 0:
            return mid
        if fm < 0:
            lo = mid
        else:
            hi = mid


def all_real_roots_B(sf: SecularFunctions) -> list[float]:
    """All L real roots of B in ascending order.

    B is increasing between consecutive poles, running from -inf to +inf, and
    has no root left of the smallest variance.
    """
    variances = sf.mixture.variances
    roots = [_root_in_interval(sf.B, a, b) for a, b in zip(variances[:-1], variances[1:])]
    roots.append(largest_root_B(sf))
    return roots


@dataclass(frozen=True)
class PredictionResult:
    beta: float
    alpha: float | None
    a_at_beta: float
    b_prime_at_beta: float
    raw_value: float
    value: float
    above_transition: bool


def predict(mixture: NoiseMixture, params: ModelParams) -> PredictionResult:
    """Asymptotic ``|u^T u_hat|^2`` for the given noise mixture and model."""
    sf = SecularFunctions(mixture, params)
    beta = largest_root_B(sf)
    alpha = None if mixture.is_noiseless else largest_root_A(sf)
    a_beta = sf.A(beta)
    bp_beta = sf.B_prime(beta)
    raw = a_beta / (beta * bp_beta)
    value = min(1.0, max(0.0, raw))
    return PredictionResult(
        beta=beta,
        alpha=alpha,
        a_at_beta=a_beta,
        b_prime_at_beta=bp_beta,
        raw_value=raw,
        value=value,
        above_transition=a_beta > 0,
    )


def homoscedastic_closed_form(c: float, theta: float, variance: float) -> float:
    """Single noise level: ``(1 - s^2/(c theta^4)) / (1 + s/(c theta^2))`` above
    the transition ``c theta^4 > s^2``, else 0."""
    ct2 = c * theta * theta
    ct4 = ct2 * theta * theta
    s2 = variance * variance
    if ct4 <= s2:
        return 0.0
    return (1.0 - s2 / ct4) / (1.0 + variance / ct2)


def _a_at_beta(mixture: NoiseMixture, c: float, theta: float) -> float:
    sf = SecularFunctions(mixture, _UncheckedParams(c, theta))
    return sf.A(largest_root_B(sf))


@dataclass(frozen=True)
class _UncheckedParams:
    # the phase-boundary search evaluates at c = 1, outside ModelParams' domain
    sample_ratio: float
    amplitude: float


def critical_sample_ratio(mixture: NoiseMixture, theta: float, rtol: float = 1e-12) -> float:
    """Smallest ``c* >= 1`` with a positive prediction for every ``c > c*``.

    Bisection on the sign of ``A(beta)`` as a function of ``c``; returns 1
    when the prediction is already positive at ``c = 1``.
    """
    if mixture.is_noiseless:
        raise NoTransition("a noiseless mixture has prediction 1 for every c")
    if not theta > 0:
        raise ValueError(f"theta must be > 0, got {theta!r}")
    if _a_at_beta(mixture, 1.0, theta) > 0:
        return 1.0
    lo, hi = 1.0, 2.0
    while _a_at_beta(mixture, hi, theta) <= 0:
        lo, hi = hi, 2.0 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _a_at_beta(mixture, mid, theta) > 0:
            hi = mid
        else:
            lo = mid
    return hi


def critical_sample_ratio_homoscedastic(variance: float, theta: float) -> float:
    return max(1.0, variance * variance / theta ** 4)


__all__ = [
    "SecularFunctions",
    "PredictionResult",
    "evaluate_A",
    "evaluate_B",
    "evaluate_B_prime",
    "largest_root_A",
    "largest_root_B",
    "all_real_roots_B",
    "predict",
    "homoscedastic_closed_form",
    "critical_sample_ratio",
    "critical_sample_ratio_homoscedastic",
    "homoscedastic",
]

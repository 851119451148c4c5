"""Finite-size Monte Carlo simulation of PCA on heteroscedastic data.

Samples follow ``y_i = theta * u * z_i + eta_i * eps_i`` with ``u`` drawn with
variance ``1/d`` per entry, unit-variance coefficients ``z_i`` and unit-variance
noise ``eps_i``; ``eta_i`` is the noise standard deviation of the level that
sample ``i`` belongs to.

Random streams
--------------
Trial ``t`` of a run seeded with ``seed`` draws from
``PCG64(SeedSequence(entropy=seed, spawn_key=(t,)))``. Within a trial the draw
order is fixed: ``u`` (d values), then ``z`` (n values), then the noise matrix
column by column (sample by sample). Trials share no generator state, so they
can run in any order or concurrently and still reproduce bit for bit.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidParams, NotConverged, ZeroTrueSubspace
from .noise import NoiseMixture

DISTRIBUTIONS = ("gaussian", "rademacher", "uniform")
EIG_RTOL = 1e-12
VEC_TOL = 1e-10
_START_SEED = 0x5EED


def derive_seed_sequence(seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(trial,))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed_sequence(seed, trial)))


def draw(rng: np.random.Generator, kind: str, size) -> np.ndarray:
    """Zero-mean, unit-variance draws from one of :data:`DISTRIBUTIONS`."""
    if kind == "gaussian":
        return rng.standard_normal(size)
    if kind == "rademacher":
        return rng.integers(0, 2, size=size).astype(float) * 2.0 - 1.0
    if kind == "uniform":
        r = math.sqrt(3.0)
        return rng.uniform(-r, r, size=size)
    raise InvalidParams(f"unknown distribution {kind!r}; expected one of {DISTRIBUTIONS}")


def apportion(n: int, proportions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of ``n`` items; ties go to the earlier level."""
    quotas = [n * p for p in proportions]
    counts = [int(math.floor(q)) for q in quotas]
    short = n - sum(counts)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


@dataclass(frozen=True)
class DatasetSpec:
    dimension: int
    num_samples: int
    mixture: NoiseMixture
    amplitude: float
    distributions: tuple[str, str, str] = ("gaussian", "gaussian", "gaussian")
    seed: int = 0

    def __post_init__(self):
        if self.dimension < 1:
            raise InvalidParams(f"dimension must be positive, got {self.dimension}")
        if self.num_samples <= self.dimension:
            raise InvalidParams(
                f"need n > d, got n={self.num_samples}, d={self.dimension}"
            )
        if not self.amplitude > 0:
            raise InvalidParams(f"amplitude must be > 0, got {self.amplitude!r}")
        if len(self.distributions) != 3:
            raise InvalidParams("distributions must name (subspace, coefficients, noise)")
        for kind in self.distributions:
            if kind not in DISTRIBUTIONS:
                raise InvalidParams(f"unknown distribution {kind!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidParams(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def sample_ratio(self) -> float:
        return self.num_samples / self.dimension

    def level_counts(self) -> list[int]:
        return apportion(self.num_samples, self.mixture.proportions)

    def level_assignment(self) -> np.ndarray:
        counts = self.level_counts()
        return np.repeat(np.arange(len(counts)), counts)


@dataclass(frozen=True)
class Dataset:
    data_matrix: np.ndarray
    true_subspace: np.ndarray
    coefficients: np.ndarray
    level_assignment: np.ndarray


def generate_dataset(spec: DatasetSpec, rng: np.random.Generator | None = None) -> Dataset:
    """Draw one ``d x n`` data matrix. Defaults to stream 0 of ``spec.seed``."""
    if rng is None:
        rng = trial_rng(spec.seed, 0)
    d, n = spec.dimension, spec.num_samples
    f_sub, f_coef, f_noise = spec.distributions
    u = draw(rng, f_sub, d) / math.sqrt(d)
    z = draw(rng, f_coef, n)
    # rows of the (n, d) draw are the noise columns, i.e. column-major order
    noise = draw(rng, f_noise, (n, d)).T
    levels = spec.level_assignment()
    eta = np.sqrt(np.asarray(spec.mixture.variances))[levels]
    Y = spec.amplitude * np.outer(u, z) + noise * eta
    return Dataset(data_matrix=Y, true_subspace=u, coefficients=z, level_assignment=levels)


@dataclass(frozen=True)
class EigResult:
    vector: np.ndarray
    singular_value: float
    iterations: int
    converged: bool


def _fix_sign(x: np.ndarray) -> np.ndarray:
    big = np.abs(x) > 1e-8 * np.max(np.abs(x))
    first = int(np.argmax(big))
    return -x if x[first] < 0 else x


def top_left_singular_vector(
    matrix, tol: float = EIG_RTOL, max_iter: int | None = None, strict: bool = False
) -> EigResult:
    """Leading left singular vector by power iteration on the Gram matrix ``Y Y^T``.

    The iteration matrix is squared after every step, so step ``k`` holds
    ``G^(2^k - 1) x0`` and the error contracts doubly exponentially even when
    the top two eigenvalues are close. Stops once the Rayleigh quotient
    changes by less than ``tol`` (relative) and the iterate moves by less
    than ``VEC_TOL``; capped at ``50 * d`` steps. On hitting the cap the best
    iterate is returned with ``converged=False``, or :class:`NotConverged`
    is raised when ``strict``.
    """
    Y = np.asarray(matrix, dtype=float)
    d = Y.shape[0]
    if max_iter is None:
        max_iter = 50 * d
    G = Y @ Y.T
    g_norm = np.linalg.norm(G)
    if g_norm == 0.0:
        raise ValueError("matrix is zero")
    P = G / g_norm
    x = np.random.default_rng(_START_SEED).standard_normal(d)
    x /= np.linalg.norm(x)
    rq = float(x @ G @ x)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        y = P @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            # start vector fell in the null space
            y = np.zeros(d)
            y[int(np.argmax(np.diag(G)))] = 1.0
            norm = 1.0
        x_new = y / norm
        rq_new = float(x_new @ G @ x_new)
        done = (
            abs(rq_new - rq) <= tol * abs(rq_new)
            and np.linalg.norm(x_new - x) <= VEC_TOL
        )
        x, rq = x_new, rq_new
        if done:
            converged = True
            break
        P = P @ P
        P /= np.linalg.norm(P)
    x = _fix_sign(x)
    result = EigResult(
        vector=x,
        singular_value=float(np.linalg.norm(Y.T @ x)),
        iterations=it,
        converged=converged,
    )
    if strict and not converged:
        raise NotConverged(f"power iteration did not converge in {max_iter} steps", result)
    return result


def recovery_metric(true_subspace, estimate) -> tuple[float, float]:
    """``(|u^T u_hat|^2, |u^T u_hat|^2 / |u|^2)``; the first may exceed one."""
    u = np.asarray(true_subspace, dtype=float)
    uhat = np.asarray(estimate, dtype=float)
    norm2 = float(u @ u)
    if norm2 == 0.0:
        raise ZeroTrueSubspace("true subspace vector is zero")
    if abs(float(np.linalg.norm(uhat)) - 1.0) > 1e-10:
        raise ValueError("estimate must have unit norm")
    raw = float(u @ uhat) ** 2
    return raw, min(1.0, raw / norm2)


@dataclass(frozen=True)
class TrialSummary:
    raw_sq_inner: float
    normalized_sq_inner: float
    top_singular_value: float
    iterations: int
    converged: bool


def run_trial(spec: DatasetSpec, trial: int) -> TrialSummary:
    data = generate_dataset(spec, trial_rng(spec.seed, trial))
    eig = top_left_singular_vector(data.data_matrix)
    raw, normalized = recovery_metric(data.true_subspace, eig.vector)
    return TrialSummary(
        raw_sq_inner=raw,
        normalized_sq_inner=normalized,
        top_singular_value=eig.singular_value,
        iterations=eig.iterations,
        converged=eig.converged,
    )


@dataclass(frozen=True)
class MonteCarloResult:
    mean: float
    q25: float
    median: float
    q75: float
    normalized_mean: float
    trials: tuple[TrialSummary, ...] = field(repr=False)
    convergence_failures: int = 0

    @property
    def num_trials(self) -> int:
        return len(self.trials)


def run_monte_carlo(spec: DatasetSpec, trials: int, workers: int = 1) -> MonteCarloResult:
    """Run ``trials`` independent trials and summarize ``|u^T u_hat|^2``.

    Results are reduced in trial order, so the output does not depend on
    ``workers``.
    """
    if trials < 1:
        raise InvalidParams(f"trials must be >= 1, got {trials}")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            summaries = tuple(pool.map(lambda t: run_trial(spec, t), range(trials)))
    else:
        summaries = tuple(run_trial(spec, t) for t in range(trials))
    raw = np.array([s.raw_sq_inner for s in summaries])
    normalized = np.array([s.normalized_sq_inner for s in summaries])
    q25, median, q75 = np.quantile(raw, [0.25, 0.5, 0.75], method="linear")
    return MonteCarloResult(
        mean=float(raw.mean()),
        q25=float(q25),
        median=float(median),
        q75=float(q75),
        normalized_mean=float(normalized.mean()),
        trials=summaries,
        convergence_failures=sum(not s.converged for s in summaries),
    )

"""Parameter sweeps over the prediction, with optional Monte Carlo overlay.

Each sweep kind maps a grid point to a ``(mixture, params)`` pair:

``proportion_sweep``
    two fixed noise levels, ``p2`` swept and ``p1 = 1 - p2``
``lambda_sweep``
    two fixed proportions, fixed average variance split by ``lambda``
``sigma_heatmap``
    two fixed proportions, both variances swept independently
``phase_heatmap``
    ``c`` and the average variance swept; each group gets variance
    ``avg / (L p_l)`` so all groups contribute equally (``p = [1]`` is
    homoscedastic)

Heatmaps are long-form: one record per cell, first axis outermost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

from . import config as cfgmod
from .config import Axis, ConfigError, SimSettings
from .noise import (
    ModelParams,
    NoiseMixture,
    balanced_split,
    lambda_split,
    validate_and_normalize,
)
from .prediction import PredictionResult, predict
from .simulation import DatasetSpec, MonteCarloResult, run_monte_carlo

SWEEP_KINDS = ("proportion_sweep", "lambda_sweep", "sigma_heatmap", "phase_heatmap")

PREDICTION_COLUMNS = ("pred_value", "beta", "alpha", "above_transition")
SIMULATION_COLUMNS = (
    "sim_mean",
    "sim_q25",
    "sim_q75",
    "sim_trials",
    "sim_failures",
    "sim_median",
    "sim_norm_mean",
)


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    axes: tuple[Axis, ...]
    theta: float
    sample_ratio: float | None = None
    variances: tuple[float, ...] = ()
    proportions: tuple[float, ...] = ()
    avg_variance: float | None = None
    simulate: SimSettings | None = None

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ConfigError("sweep.kind", f"expected one of {SWEEP_KINDS}, got {self.kind!r}")
        for ax in self.axes:
            if ax.num < 2 or not ax.min < ax.max:
                raise ConfigError(f"sweep.{ax.name}", "axis needs >= 2 points and min < max")

    @property
    def columns(self) -> tuple[str, ...]:
        cols = tuple(ax.name for ax in self.axes) + PREDICTION_COLUMNS
        if self.simulate is not None:
            cols += SIMULATION_COLUMNS
        return cols

    def grid(self) -> Iterator[tuple[float, ...]]:
        if len(self.axes) == 1:
            for v in self.axes[0].values():
                yield (v,)
        else:
            outer, inner = self.axes
            for a in outer.values():
                for b in inner.values():
                    yield (a, b)

    def point(self, coords: tuple[float, ...]) -> tuple[NoiseMixture, ModelParams]:
        """Mixture and model parameters at one grid point."""
        kind = self.kind
        if kind == "proportion_sweep":
            (p2,) = coords
            pairs = [(1.0 - p2, self.variances[0]), (p2, self.variances[1])]
            # an endpoint of the sweep leaves one group empty
            mix = validate_and_normalize([(p, v) for p, v in pairs if p > 0])
            return mix, ModelParams(self.sample_ratio, self.theta)
        if kind == "lambda_sweep":
            (lam,) = coords
            return (
                lambda_split(lam, self.avg_variance, self.proportions),
                ModelParams(self.sample_ratio, self.theta),
            )
        if kind == "sigma_heatmap":
            v1, v2 = coords
            mix = validate_and_normalize(
                [(self.proportions[0], v1), (self.proportions[1], v2)]
            )
            return mix, ModelParams(self.sample_ratio, self.theta)
        avg, c = coords
        return balanced_split(avg, self.proportions), ModelParams(c, self.theta)


@dataclass(frozen=True)
class SweepRecord:
    coords: tuple[float, ...]
    prediction: PredictionResult
    simulation: MonteCarloResult | None = field(default=None, repr=False)

    def row(self) -> tuple:
        p = self.prediction
        out = tuple(self.coords) + (p.value, p.beta, p.alpha, p.above_transition)
        if self.simulation is not None:
            s = self.simulation
            out += (
                s.mean,
                s.q25,
                s.q75,
                s.num_trials,
                s.convergence_failures,
                s.median,
                s.normalized_mean,
            )
        return out


def simulate_point(
    mix: NoiseMixture, params: ModelParams, sim: SimSettings
) -> MonteCarloResult:
    d = sim.dimension
    n = int(round(params.sample_ratio * d))
    spec = DatasetSpec(
        dimension=d,
        num_samples=n,
        mixture=mix,
        amplitude=params.amplitude,
        distributions=sim.distributions,
        seed=sim.seed,
    )
    return run_monte_carlo(spec, sim.trials, workers=sim.workers)


def run_sweep(spec: SweepSpec) -> list[SweepRecord]:
    records = []
    for coords in spec.grid():
        mix, params = spec.point(coords)
        pred = predict(mix, params)
        sim = simulate_point(mix, params, spec.simulate) if spec.simulate else None
        records.append(SweepRecord(coords, pred, sim))
    return records


def _pair(cfg: dict, what: str) -> tuple[float, float]:
    vals = [v for _, v in cfgmod.levels(cfg, need_p=False)] if what == "variances" else cfgmod.proportions(cfg)
    if len(vals) != 2:
        raise ConfigError("noise.levels", f"this sweep needs exactly two levels, got {len(vals)}")
    return tuple(vals)


def build_sweep(cfg: dict) -> SweepSpec:
    """Interpret the ``[sweep]`` table of a config document."""
    kind = cfgmod.get(cfg, "sweep.kind")
    if kind not in SWEEP_KINDS:
        raise ConfigError("sweep.kind", f"expected one of {SWEEP_KINDS}, got {kind!r}")
    sim = cfgmod.simulation(cfg)

    if kind == "phase_heatmap":
        theta = cfgmod.model(cfg, need_c=False)
        props = tuple(cfgmod.proportions(cfg))
        if any(p <= 0 for p in props) or abs(math.fsum(props) - 1.0) > 1e-12:
            raise ConfigError("noise.levels", "proportions must be positive and sum to 1")
        avg_axis = _variance_axis(cfg, "sweep.avg_noise", "avg_variance")
        c_axis = cfgmod.axis(cfg, "sweep.c", "c")
        if not c_axis.min > 1:
            raise ConfigError("sweep.c.min", f"sample ratio must satisfy c > 1, got {c_axis.min!r}")
        return SweepSpec(kind, (avg_axis, c_axis), theta, proportions=props, simulate=sim)

    params = cfgmod.model(cfg)
    common = dict(theta=params.amplitude, sample_ratio=params.sample_ratio, simulate=sim)
    if kind == "proportion_sweep":
        ax = cfgmod.axis(cfg, "sweep.p2", "p2", {"min": 0.0, "max": 1.0, "num": 11})
        if ax.min < 0 or ax.max > 1:
            raise ConfigError("sweep.p2", "proportions must lie in [0, 1]")
        return SweepSpec(kind, (ax,), variances=_pair(cfg, "variances"), **common)

    props = _pair(cfg, "proportions")
    if kind == "lambda_sweep":
        ax = cfgmod.axis(cfg, "sweep.lambda", "lambda", {"min": 0.0, "max": 1.0})
        if ax.min < 0 or ax.max > 1:
            raise ConfigError("sweep.lambda", "lambda must lie in [0, 1]")
        avg = cfgmod.to_variance(cfg, cfgmod._number(cfg, "sweep.avg_noise"))
        if avg < 0:
            raise ConfigError("sweep.avg_noise", "average noise must be >= 0")
        return SweepSpec(kind, (ax,), proportions=props, avg_variance=avg, **common)

    ax1 = _variance_axis(cfg, "sweep.sigma1", "var1")
    ax2 = _variance_axis(cfg, "sweep.sigma2", "var2")
    return SweepSpec(kind, (ax1, ax2), proportions=props, **common)


def _variance_axis(cfg: dict, key: str, name: str) -> Axis:
    """Axis given in ``noise.sigma_is`` units, converted to a variance grid.

    A standard-deviation axis is squared point by point, so the variance grid
    is the square of a linear grid.
    """
    ax = cfgmod.axis(cfg, key, name)
    if ax.min < 0:
        raise ConfigError(f"{key}.min", "noise magnitudes must be >= 0")
    if cfgmod.sigma_is(cfg) == "stddev":
        return _SquaredAxis(name, ax.min, ax.max, ax.num)
    return ax


@dataclass(frozen=True)
class _SquaredAxis(Axis):
    def values(self) -> list[float]:
        return [v * v for v in super().values()]

    def describe(self) -> str:
        return f"{self.name} squares of linear stddev grid min={self.min!r} max={self.max!r} num={self.num}"

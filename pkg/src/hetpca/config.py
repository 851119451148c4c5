"""Config file parsing.

Configs are TOML documents addressed by dotted keys (``model.c``,
``noise.levels``, ``simulate.trials`` ...). Command-line flags are written
into the parsed document before it is interpreted, which gives the
precedence flag > config > default. See README for the full schema.
"""
from __future__ import annotations

import copy
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import HetPCAError
from .noise import ModelParams, NoiseMixture, validate_and_normalize
from .simulation import DISTRIBUTIONS

DEFAULT_GRID_POINTS = 101
_MISSING = object()


class ConfigError(HetPCAError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def load(path) -> dict:
    """Parse a TOML file. ``OSError`` propagates; syntax errors become ConfigError."""
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(str(path), f"invalid TOML: {exc}") from None


def get(cfg: dict, key: str, default: Any = _MISSING) -> Any:
    node: Any = cfg
    for part in key.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is _MISSING:
                raise ConfigError(key, "required key is missing")
            return default
        node = node[part]
    return node


def with_overrides(cfg: dict, overrides: dict[str, Any]) -> dict:
    """Copy of ``cfg`` with dotted-key values replaced; ``None`` values are skipped."""
    out = copy.deepcopy(cfg)
    for key, value in overrides.items():
        if value is None:
            continue
        node = out
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(key, f"{part!r} is not a table")
        node[leaf] = value
    return out


def _number(cfg: dict, key: str, default: Any = _MISSING) -> float:
    value = get(cfg, key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    return float(value)


def _integer(cfg: dict, key: str, default: Any = _MISSING) -> int:
    value = get(cfg, key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return value


def sigma_is(cfg: dict) -> str:
    mode = get(cfg, "noise.sigma_is")
    if mode not in ("stddev", "variance"):
        raise ConfigError("noise.sigma_is", f'must be "stddev" or "variance", got {mode!r}')
    return mode


def to_variance(cfg: dict, value: float) -> float:
    """Interpret a noise magnitude according to ``noise.sigma_is``."""
    if sigma_is(cfg) == "stddev":
        if value < 0:
            raise ConfigError("noise.sigma_is", f"standard deviation {value!r} is negative")
        return value * value
    return value


def levels(cfg: dict, need_p: bool = True) -> list[tuple[float | None, float]]:
    """``(p, variance)`` pairs from ``noise.levels`` with sigmas converted."""
    raw = get(cfg, "noise.levels")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("noise.levels", "expected a non-empty array of {p, sigma} tables")
    out = []
    for i, entry in enumerate(raw):
        key = f"noise.levels[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(key, "expected a table with keys p and sigma")
        if "sigma" not in entry:
            raise ConfigError(f"{key}.sigma", "required key is missing")
        sigma = entry["sigma"]
        if isinstance(sigma, bool) or not isinstance(sigma, (int, float)):
            raise ConfigError(f"{key}.sigma", f"expected a number, got {sigma!r}")
        p = entry.get("p")
        if need_p and p is None:
            raise ConfigError(f"{key}.p", "required key is missing")
        if p is not None and (isinstance(p, bool) or not isinstance(p, (int, float))):
            raise ConfigError(f"{key}.p", f"expected a number, got {p!r}")
        out.append((None if p is None else float(p), to_variance(cfg, float(sigma))))
    return out


def proportions(cfg: dict) -> list[float]:
    return [p for p, _ in levels(cfg)]


def mixture(cfg: dict) -> NoiseMixture:
    try:
        return validate_and_normalize(levels(cfg))
    except ConfigError:
        raise
    except HetPCAError as exc:
        raise ConfigError("noise.levels", str(exc)) from None


def model(cfg: dict, need_c: bool = True) -> ModelParams | float:
    theta = _number(cfg, "model.theta")
    if not need_c:
        if not theta > 0:
            raise ConfigError("model.theta", f"amplitude must be > 0, got {theta!r}")
        return theta
    c = _number(cfg, "model.c")
    if not c > 1:
        raise ConfigError("model.c", f"sample ratio must satisfy c > 1, got {c!r}")
    if not theta > 0:
        raise ConfigError("model.theta", f"amplitude must be > 0, got {theta!r}")
    return ModelParams(c, theta)


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    num: int = DEFAULT_GRID_POINTS

    def values(self) -> list[float]:
        return [float(v) for v in np.linspace(self.min, self.max, self.num)]

    def describe(self) -> str:
        return f"{self.name} linear min={self.min!r} max={self.max!r} num={self.num}"


def axis(cfg: dict, key: str, name: str, default: dict | None = None) -> Axis:
    table = get(cfg, key, default)
    if not isinstance(table, dict):
        raise ConfigError(key, "expected a table {min, max, num}")
    lo = _axis_bound(table, key, "min")
    hi = _axis_bound(table, key, "max")
    num = table.get("num", DEFAULT_GRID_POINTS)
    if isinstance(num, bool) or not isinstance(num, int) or num < 2:
        raise ConfigError(f"{key}.num", f"need an integer >= 2, got {num!r}")
    if not lo < hi:
        raise ConfigError(key, f"need min < max, got min={lo!r}, max={hi!r}")
    return Axis(name, lo, hi, num)


def _axis_bound(table: dict, key: str, bound: str) -> float:
    if bound not in table:
        raise ConfigError(f"{key}.{bound}", "required key is missing")
    value = table[bound]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}.{bound}", f"expected a number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class SimSettings:
    dimension: int
    trials: int
    seed: int = 0
    distributions: tuple[str, str, str] = ("gaussian", "gaussian", "gaussian")
    workers: int = 1


def simulation(cfg: dict, required: bool = False) -> SimSettings | None:
    if "simulate" not in cfg:
        if required:
            raise ConfigError("simulate", "required table is missing")
        return None
    d = _integer(cfg, "simulate.d")
    trials = _integer(cfg, "simulate.trials")
    seed = _integer(cfg, "simulate.seed", 0)
    workers = _integer(cfg, "simulate.workers", 1)
    dists = get(cfg, "simulate.distributions", ["gaussian"] * 3)
    if d < 1:
        raise ConfigError("simulate.d", f"dimension must be positive, got {d}")
    if trials < 1:
        raise ConfigError("simulate.trials", f"need at least one trial, got {trials}")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("simulate.seed", f"seed must be an unsigned 64-bit integer, got {seed}")
    if workers < 1:
        raise ConfigError("simulate.workers", f"need at least one worker, got {workers}")
    if isinstance(dists, str):
        dists = [dists] * 3
    if not isinstance(dists, list) or len(dists) != 3 or any(x not in DISTRIBUTIONS for x in dists):
        raise ConfigError(
            "simulate.distributions",
            f"expected three names from {DISTRIBUTIONS}, got {dists!r}",
        )
    return SimSettings(d, trials, seed, tuple(dists), workers)

"""Command-line interface: ``hetpca {predict,sweep,simulate,root-plot}``.

Exit codes: 0 success, 2 config or validation error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from . import config as cfgmod
from .config import ConfigError
from .errors import HetPCAError
from .prediction import SecularFunctions, all_real_roots_B, predict
from .sweep import build_sweep, run_sweep, simulate_point

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
LONG_RUNNING_DIM = 1000


class IOFailure(Exception):
    pass


def fmt(value) -> str:
    """CSV cell: 17 significant digits round-trip every float exactly."""
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(value, ".17g")


def short(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return "true" if value else "false"
    return format(value, ".6g")


def header_lines(command: str, cfg: dict, axes=()) -> list[str]:
    # the worker count never changes results, so it stays out of the header
    cfg = cfgmod.with_overrides(cfg, {})
    cfg.get("simulate", {}).pop("workers", None)
    lines = [
        f"# hetpca {__version__} {command}",
        "# config: " + json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str),
    ]
    lines.extend(f"# grid: {ax.describe()}" for ax in axes)
    return lines


def _parse_level(text: str) -> dict:
    try:
        p, sigma = text.split(":")
        return {"p": float(p), "sigma": float(sigma)}
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected P:SIGMA, got {text!r}") from None


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument("--sigma-is", choices=("stddev", "variance"), dest="sigma_is",
                        help="overrides noise.sigma_is")
    parser.add_argument("--level", action="append", type=_parse_level, metavar="P:SIGMA",
                        help="noise level (repeatable); replaces noise.levels")
    parser.add_argument("--c", type=float, help="overrides model.c")
    parser.add_argument("--theta", type=float, help="overrides model.theta")


def _sim_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, help="overrides simulate.seed")
    parser.add_argument("--trials", type=int, help="overrides simulate.trials")
    parser.add_argument("--d", type=int, help="overrides simulate.d")
    parser.add_argument("--workers", type=int, help="overrides simulate.workers")
    parser.add_argument("--long-running", action="store_true", dest="long_running",
                        help=f"allow simulations with d >= {LONG_RUNNING_DIM}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetpca",
        description="Asymptotic and simulated PCA subspace recovery under heteroscedastic noise.",
    )
    parser.add_argument("--version", action="version", version=f"hetpca {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="evaluate the asymptotic prediction")
    _common(p)
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("sweep", help="sweep a parameter grid and write CSV")
    _common(p)
    _sim_flags(p)
    p.add_argument("--kind", help="overrides sweep.kind")

    p = sub.add_parser("simulate", help="Monte Carlo check of one parameter point")
    _common(p)
    _sim_flags(p)
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("root-plot", help="sample B's pole sum and list its real roots")
    _common(p)
    return parser


def _resolve_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            cfg = cfgmod.load(args.config)
        except OSError as exc:
            raise IOFailure(f"cannot read config {args.config}: {exc.strerror or exc}") from None
    overrides = {
        "model.c": args.c,
        "model.theta": args.theta,
        "noise.sigma_is": args.sigma_is,
        "noise.levels": args.level,
    }
    for flag, key in (("seed", "simulate.seed"), ("trials", "simulate.trials"),
                      ("d", "simulate.d"), ("workers", "simulate.workers"),
                      ("kind", "sweep.kind")):
        overrides[key] = getattr(args, flag, None)
    return cfgmod.with_overrides(cfg, overrides)


def _check_long_running(sim, args):
    if sim is not None and sim.dimension >= LONG_RUNNING_DIM and not args.long_running:
        raise ConfigError(
            "simulate.d",
            f"d={sim.dimension} >= {LONG_RUNNING_DIM} needs --long-running",
        )


def cmd_predict(cfg: dict, args) -> str:
    params = cfgmod.model(cfg)
    mix = cfgmod.mixture(cfg)
    r = predict(mix, params)
    fields = {
        "value": r.value,
        "beta": r.beta,
        "alpha": r.alpha,
        "A_at_beta": r.a_at_beta,
        "B_prime_at_beta": r.b_prime_at_beta,
        "above_transition": r.above_transition,
    }
    if getattr(args, "json", False):
        return json.dumps(fields, sort_keys=False) + "\n"
    return "".join(f"{k} = {short(v)}\n" for k, v in fields.items())


def cmd_sweep(cfg: dict, args) -> str:
    spec = build_sweep(cfg)
    _check_long_running(spec.simulate, args)
    records = run_sweep(spec)
    lines = header_lines("sweep", cfg, spec.axes)
    lines.append(",".join(spec.columns))
    lines.extend(",".join(fmt(v) for v in rec.row()) for rec in records)
    return "\n".join(lines) + "\n"


def cmd_simulate(cfg: dict, args) -> str:
    params = cfgmod.model(cfg)
    mix = cfgmod.mixture(cfg)
    sim = cfgmod.simulation(cfg, required=True)
    _check_long_running(sim, args)
    pred = predict(mix, params)
    mc = simulate_point(mix, params, sim)
    fields = {
        "d": sim.dimension,
        "n": int(round(params.sample_ratio * sim.dimension)),
        "trials": mc.num_trials,
        "seed": sim.seed,
        "mean": mc.mean,
        "q25": mc.q25,
        "median": mc.median,
        "q75": mc.q75,
        "normalized_mean": mc.normalized_mean,
        "prediction": pred.value,
        "abs_deviation": abs(mc.mean - pred.value),
        "convergence_failures": mc.convergence_failures,
    }
    if args.json:
        return json.dumps(fields) + "\n"
    return "".join(f"{k} = {short(v)}\n" for k, v in fields.items())


def cmd_root_plot(cfg: dict, args) -> str:
    params = cfgmod.model(cfg)
    mix = cfgmod.mixture(cfg)
    sf = SecularFunctions(mix, params)
    roots = all_real_roots_B(sf)
    beta = roots[-1]
    default_lo = min(0.0, mix.variances[0])
    ax = cfgmod.axis(cfg, "root_plot.x", "x", {"min": default_lo, "max": 1.25 * beta, "num": 1001})
    threshold = 1.0 / (params.sample_ratio * params.amplitude ** 2)
    lines = header_lines("root-plot", cfg, (ax,))
    lines.append("x,sum_term,threshold")
    for x in ax.values():
        # skip grid points on a pole, where the sum is undefined
        if any(abs(x - s) <= 1e-12 * max(1.0, abs(s)) for s in mix.variances):
            continue
        lines.append(",".join(fmt(v) for v in (x, sf.pole_sum(x), threshold)))
    lines.append("# roots")
    lines.extend(f"# root,{fmt(r)}" for r in roots)
    lines.append(f"# largest_root,{fmt(beta)}")
    return "\n".join(lines) + "\n"


COMMANDS = {
    "predict": cmd_predict,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "root-plot": cmd_root_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        text = COMMANDS[args.command](cfg, args)
    except IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (HetPCAError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

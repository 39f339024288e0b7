"""Command-line interface.

Exit codes: 0 on success (whether or not a test rejects), 2 for usage or
input errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import csvio, limits
from .mc import McConfig, McFailure, mc_moments, mc_size_power
from .models import (
    MODEL_NAMES,
    TooFewEvents,
    build_model,
    cox_spec,
    gaussian_mean_spec,
    gaussian_meanvar_spec,
    meanvar_start,
    ou_drift_spec,
    ou_pairs,
)
from .numerics import NumericalError, RngStream
from .zcore import InsufficientData, information_hat, run_test, solve_z_estimator, z_process

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("zchange")


class UsageError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, choices=MODEL_NAMES)
    p.add_argument("--sigma", type=float, default=1.0, help="known noise/diffusion scale")
    p.add_argument("--delta", type=float, default=None, help="OU sampling step (default: from t column)")
    p.add_argument("--mode", choices=("outer", "jacobian"), default="outer", help="information estimator")
    p.add_argument("--clock", choices=("events", "information"), default="events", help="Cox Z-process clock")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--grid-n", type=int, default=limits.DEFAULT_GRID_N, help="table grid (dim > 1)")
    p.add_argument("--table-reps", type=int, default=limits.DEFAULT_REPS, help="table size (dim > 1)")
    p.add_argument("--table-seed", type=int, default=limits.DEFAULT_SEED)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zchange", description="Z-process change-point tests for estimating-equation models."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a data set in the model's CSV schema")
    p.add_argument("--model", required=True, choices=MODEL_NAMES)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mu0", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--shift", type=float, default=0.0)
    p.add_argument("--change-u", type=float, default=None)
    p.add_argument("--theta", type=_floats, default=None, help="OU rate or Cox coefficients (comma list)")
    p.add_argument("--theta-post", type=_floats, default=None)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--censor-rate", type=float, default=0.0)
    p.add_argument("--out", type=Path, default=None)

    for name, help_ in (("test", "run the Z-process change-point test"), ("zpath", "dump the Z-process")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("input", type=Path)
        _add_model_flags(p)
        p.add_argument("--out", type=Path, default=None, required=name == "zpath")

    p = sub.add_parser("critval", help="simulate or load a sup-bridge critical-value table")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--grid-n", type=int, default=limits.DEFAULT_GRID_N)
    p.add_argument("--reps", type=int, default=limits.DEFAULT_REPS)
    p.add_argument("--seed", type=int, default=limits.DEFAULT_SEED)

    for name, what in (("mc-size", "size/power"), ("mc-moments", "moment")):
        p = sub.add_parser(name, help=f"Monte Carlo {what} study from a JSON config")
        p.add_argument("config", type=Path)
        p.add_argument("--out", type=Path, default=None, help="write the JSON report here")
        p.add_argument("--text", action="store_true", help="print an aligned text table")
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_simulate(args) -> int:
    params: dict = {}
    if args.model in ("gaussian-mean", "gaussian-meanvar"):
        params = dict(mu0=args.mu0, sigma=args.sigma, shift=args.shift, change_u=args.change_u)
    elif args.model == "ou":
        params = dict(
            theta=(args.theta or [1.0])[0], sigma=args.sigma, delta=args.delta, x0=args.x0,
            theta_post=args.theta_post[0] if args.theta_post else None, change_u=args.change_u,
        )
    else:
        params = dict(
            theta=args.theta or [0.0], censor_rate=args.censor_rate,
            change_u=args.change_u, theta_post=args.theta_post,
        )
    adapter = build_model(args.model, args.n, **params)
    raw = adapter.simulate(RngStream(args.seed))
    if args.model == "ou":
        text = csvio.to_string(csvio.write_path, raw, args.delta)
    elif args.model == "cox":
        text = csvio.to_string(csvio.write_surv, raw)
    else:
        text = csvio.to_string(csvio.write_series, raw)
    _emit(text, args.out)
    return EXIT_OK


def _load(args):
    """Parse the input CSV; return ``(spec, observations, start, extras)``."""
    if args.model == "gaussian-mean":
        x = csvio.read_series(args.input)
        return gaussian_mean_spec(args.sigma), x, np.array([np.median(x)]), {}
    if args.model == "gaussian-meanvar":
        x = csvio.read_series(args.input)
        return gaussian_meanvar_spec(), x, meanvar_start(x), {}
    if args.model == "ou":
        x, delta = csvio.read_path(args.input, args.delta)
        return ou_drift_spec(args.sigma, delta), ou_pairs(x), np.array([1.0]), {"delta": delta}
    data = csvio.read_surv(args.input)
    return cox_spec(data.dim, args.clock), data, np.zeros(data.dim), {
        "clock": args.clock,
        "n_subjects": len(data),
        "n_events": data.n_events,
    }


def _table_for(dim: int, args):
    if dim == 1:
        return None
    table, cached = limits.load_or_simulate(dim, args.grid_n, args.table_reps, args.table_seed)
    log.info("using sup-bridge table dim=%d (cached=%s)", dim, cached)
    return table


def cmd_test(args) -> int:
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    spec, obs, start, extras = _load(args)
    table = _table_for(spec.dim, args)
    report = run_test(spec, obs, start, args.mode, table)
    out = report.to_dict()
    out["alpha"] = args.alpha
    out["reject"] = bool(report.p_value <= args.alpha)
    out["calibration"] = (
        {"method": "kolmogorov-series"}
        if table is None
        else {"method": "table", "grid_n": table.grid_n, "reps": table.reps, "seed": table.seed}
    )
    out.update(extras)
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_zpath(args) -> int:
    spec, obs, start, _ = _load(args)
    fit = solve_z_estimator(spec, obs, start)
    info = information_hat(spec, obs, fit.x, args.mode)
    path = z_process(spec, obs, fit.x, info)
    args.out.write_text(csvio.to_string(csvio.write_zpath, path))
    return EXIT_OK


def cmd_critval(args) -> int:
    if args.dim < 1 or args.dim > 16:
        raise UsageError("--dim must be between 1 and 16")
    if args.grid_n < 2**10 or args.reps < 1000:
        raise UsageError("need --grid-n >= 1024 and --reps >= 1000")
    table, cached = limits.load_or_simulate(args.dim, args.grid_n, args.reps, args.seed)
    out = {
        "dim": table.dim,
        "grid_n": table.grid_n,
        "reps": table.reps,
        "seed": table.seed,
        "quantiles": {f"{lv:.2f}": q for lv, q in table.quantiles.items()},
        "cached": cached,
    }
    _emit(_dump(out), None)
    return EXIT_OK


def _mc_config(path: Path) -> McConfig:
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise csvio.InputError(f"cannot read config {path}: {exc}") from None
    if "master_seed" not in raw:
        raise UsageError("config must set master_seed")
    return McConfig.from_dict(raw)


def cmd_mc(args) -> int:
    cfg = _mc_config(args.config)
    report = mc_size_power(cfg) if args.command == "mc-size" else mc_moments(cfg)
    if args.out is not None:
        args.out.write_text(report.to_json() + "\n")
    if args.text or args.out is None:
        sys.stdout.write(report.to_text() + "\n" if args.text else report.to_json() + "\n")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "test": cmd_test,
    "zpath": cmd_zpath,
    "critval": cmd_critval,
    "mc-size": cmd_mc,
    "mc-moments": cmd_mc,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        # non-finite values are detected and reported by the solver itself
        with np.errstate(all="ignore"):
            return COMMANDS[args.command](args)
    except (NumericalError, McFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (csvio.InputError, UsageError, InsufficientData, TooFewEvents, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

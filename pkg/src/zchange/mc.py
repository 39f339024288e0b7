"""Monte Carlo harness: size, power and localization of the Z-process test, and
absolute moments of the normalized Z-estimator.

Replication ``r`` always draws its data from ``RngStream(master_seed, r)``, so
a report is a pure function of its configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import limits
from .models import ModelAdapter, TooFewEvents, build_model
from .numerics import NumericalError, RngStream, cholesky
from .zcore import InsufficientData, information_hat, run_test, solve_z_estimator

BATCH = 500
MAX_FAILURE_FRACTION = 0.01
LOCALIZATION_RADIUS = 0.1
_FAILURES = (NumericalError, TooFewEvents, InsufficientData)


class McFailure(RuntimeError):
    pass


def gaussian_abs_moment(p: float) -> float:
    """``E|G|^p`` for standard normal ``G``."""
    return 2 ** (p / 2) * math.gamma((p + 1) / 2) / math.sqrt(math.pi)


def jackknife_mean(values: np.ndarray) -> tuple[float, float]:
    """Mean with its leave-one-out jackknife standard error."""
    x = np.asarray(values, dtype=float)
    r = len(x)
    if r < 2:
        return float(x.mean()) if r else float("nan"), float("nan")
    loo = (x.sum() - x) / (r - 1)
    se = math.sqrt((r - 1) / r * np.sum((loo - loo.mean()) ** 2))
    return float(x.mean()), se


@dataclass
class McConfig:
    model: str
    params: dict = field(default_factory=dict)
    reps: int = 2000
    n_list: list[int] = field(default_factory=lambda: [500])
    alpha_list: list[float] = field(default_factory=lambda: [0.10, 0.05, 0.01])
    master_seed: int = 1
    orders: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    mode: str = "outer"
    table_grid_n: int = limits.DEFAULT_GRID_N
    table_reps: int = limits.DEFAULT_REPS
    table_seed: int = limits.DEFAULT_SEED

    def __post_init__(self):
        if self.reps < 100:
            raise ValueError("reps must be at least 100")
        for n in self.n_list:
            dim = self.adapter(n).dim
            if n < 4 * dim:
                raise ValueError(f"n={n} is below 4 * dim = {4 * dim}")

    def adapter(self, n: int) -> ModelAdapter:
        return build_model(self.model, n, **dict(self.params))

    @classmethod
    def from_dict(cls, d: dict) -> "McConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "McConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class McReport:
    kind: str
    config: dict
    rejection: list[dict] = field(default_factory=list)
    moments: list[dict] = field(default_factory=list)
    localization: list[dict] = field(default_factory=list)
    failures: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def rate(self, n: int, alpha: float) -> dict:
        for row in self.rejection:
            if row["n"] == n and math.isclose(row["alpha"], alpha):
                return row
        raise KeyError((n, alpha))

    def moment(self, n: int, order: int, component: int = 0) -> dict:
        for row in self.moments:
            if (row["n"], row["order"], row["component"]) == (n, order, component):
                return row
        raise KeyError((n, order, component))

    def to_text(self) -> str:
        out = [f"{self.kind} report: model={self.config['model']} reps={self.config['reps']}"]

        def table(rows, cols):
            cells = [[c for c in cols]] + [[_fmt(r[c]) for c in cols] for r in rows]
            widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
            return ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]

        if self.rejection:
            out += ["", *table(self.rejection, ["n", "alpha", "rate", "se", "n_ok"])]
        if self.localization:
            rows = [
                {**{k: r[k] for k in ("n", "u0", "n_rejecting", "within_radius")},
                 **{f"q{int(100 * float(q))}": v for q, v in r["error_quantiles"].items()}}
                for r in self.localization
            ]
            out += ["", *table(rows, list(rows[0]))]
        if self.moments:
            out += ["", *table(self.moments, ["n", "order", "component", "estimate", "se", "target"])]
        out += ["", "failures: " + ", ".join(f"n={k}: {v}" for k, v in self.failures.items())]
        return "\n".join(out)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _datasets(adapter: ModelAdapter, master_seed: int, reps: int) -> Iterator[tuple[int, object]]:
    for start in range(0, reps, BATCH):
        idx = range(start, min(reps, start + BATCH))
        streams = [RngStream(master_seed, r) for r in idx]
        if adapter.simulate_batch is not None:
            raws = adapter.simulate_batch(streams)
        else:
            raws = []
            for s in streams:
                try:
                    raws.append(adapter.simulate(s))
                except _FAILURES as exc:
                    raws.append(exc)
        yield from zip(idx, raws)


def _check_failures(n: int, failed: int, reps: int) -> None:
    if failed > MAX_FAILURE_FRACTION * reps:
        raise McFailure(f"n={n}: {failed} of {reps} replications failed")


def _config_dict(cfg: McConfig) -> dict:
    return asdict(cfg)


def mc_size_power(cfg: McConfig) -> McReport:
    """Rejection rates of the Z-process test and change-point localization."""
    report = McReport(kind="size_power", config=_config_dict(cfg))
    for n in cfg.n_list:
        adapter = cfg.adapter(n)
        crit = None
        if adapter.dim > 1:
            crit, _ = limits.load_or_simulate(adapter.dim, cfg.table_grid_n, cfg.table_reps, cfg.table_seed)
        pvals = np.full(cfg.reps, np.nan)
        cps = np.full(cfg.reps, np.nan)
        for r, raw in _datasets(adapter, cfg.master_seed, cfg.reps):
            if isinstance(raw, Exception):
                continue
            obs = adapter.prepare(raw)
            try:
                rep = run_test(adapter.spec, obs, adapter.start(obs), cfg.mode, crit)
            except _FAILURES:
                continue
            pvals[r], cps[r] = rep.p_value, rep.changepoint_u
        ok = ~np.isnan(pvals)
        n_ok = int(ok.sum())
        report.failures[str(n)] = cfg.reps - n_ok
        _check_failures(n, cfg.reps - n_ok, cfg.reps)
        for alpha in cfg.alpha_list:
            rej = pvals[ok] <= alpha
            rate = float(rej.mean())
            report.rejection.append(
                {"n": n, "alpha": float(alpha), "rate": rate,
                 "se": math.sqrt(rate * (1 - rate) / n_ok), "n_ok": n_ok}
            )
        if adapter.change_u is not None:
            alpha = 0.05 if 0.05 in cfg.alpha_list else cfg.alpha_list[0]
            hit = ok & (np.nan_to_num(pvals, nan=1.0) <= alpha)
            err = np.abs(cps[hit] - adapter.change_u)
            report.localization.append(
                {
                    "n": n,
                    "u0": float(adapter.change_u),
                    "alpha": float(alpha),
                    "n_rejecting": int(hit.sum()),
                    "error_quantiles": {
                        f"{q:.2f}": float(np.quantile(err, q)) if err.size else None
                        for q in (0.5, 0.9, 0.95)
                    },
                    "within_radius": float(np.mean(err <= LOCALIZATION_RADIUS)) if err.size else 0.0,
                    "radius": LOCALIZATION_RADIUS,
                }
            )
    return report


def normalized_errors(cfg: McConfig, n: int) -> np.ndarray:
    """``sqrt(n) L^T (theta_hat - theta_0)`` per replication, ``L L^T`` the true information.

    Failed replications are rows of NaN.
    """
    adapter = cfg.adapter(n)
    if adapter.has_change:
        raise ValueError("moment study requires a configuration without change")
    if adapter.true_info is None:
        raise ValueError(f"model {adapter.name!r} has no closed-form information")
    Lt = cholesky(adapter.true_info).T
    out = np.full((cfg.reps, adapter.dim), np.nan)
    for r, raw in _datasets(adapter, cfg.master_seed, cfg.reps):
        if isinstance(raw, Exception):
            continue
        obs = adapter.prepare(raw)
        try:
            fit = solve_z_estimator(adapter.spec, obs, adapter.start(obs))
        except _FAILURES:
            continue
        out[r] = math.sqrt(n) * Lt @ (fit.x - adapter.theta_true)
    return out


def mc_moments(cfg: McConfig) -> McReport:
    """Absolute moments of the normalized estimator against Gaussian targets."""
    report = McReport(kind="moments", config=_config_dict(cfg))
    for n in cfg.n_list:
        z = normalized_errors(cfg, n)
        ok = ~np.isnan(z).any(axis=1)
        failed = cfg.reps - int(ok.sum())
        report.failures[str(n)] = failed
        _check_failures(n, failed, cfg.reps)
        for p in cfg.orders:
            for j in range(z.shape[1]):
                est, se = jackknife_mean(np.abs(z[ok, j]) ** p)
                report.moments.append(
                    {"n": n, "order": p, "component": j, "estimate": est, "se": se,
                     "target": gaussian_abs_moment(p)}
                )
    return report

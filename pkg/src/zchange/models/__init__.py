"""Shipped model adapters and a registry used by the Monte Carlo harness and CLI."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from ..numerics import RngStream
from ..zcore import EstimatingFunctionSpec
from .cox import (
    EmptyRiskSet,
    SurvData,
    TooFewEvents,
    break_ties,
    censoring_rate_for,
    cox_score_process,
    cox_simulate,
    cox_spec,
    cox_zprocess_time,
)
from .gaussian import IidGaussianConfig, gaussian_mean_spec, gaussian_meanvar_spec, gaussian_simulate
from .ou import (
    OuConfig,
    ou_closed_form,
    ou_drift_spec,
    ou_information,
    ou_pairs,
    ou_simulate,
    ou_simulate_batch,
)

MODEL_NAMES = ("gaussian-mean", "gaussian-meanvar", "ou", "cox")


@dataclass(frozen=True)
class ModelAdapter:
    """Everything needed to simulate, fit and score one configured model.

    ``simulate`` returns raw data (a sample, an OU path or ``SurvData``);
    ``prepare`` maps it to the observations consumed by ``spec``.
    """

    name: str
    n: int
    spec: EstimatingFunctionSpec
    simulate: Callable[[RngStream], Any]
    prepare: Callable[[Any], Any]
    start: Callable[[Any], np.ndarray]
    theta_true: np.ndarray
    true_info: np.ndarray | None = None
    change_u: float | None = None
    has_change: bool = False
    simulate_batch: Callable[[Sequence[RngStream]], Sequence[Any]] | None = None

    @property
    def dim(self) -> int:
        return self.spec.dim


def meanvar_start(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    q25, q75 = np.percentile(x, [25, 75])
    v = ((q75 - q25) / 1.3489795003921634) ** 2
    return np.array([np.median(x), v if v > 0 else x.var()])


def build_model(name: str, n: int, **params) -> ModelAdapter:
    """Configure a shipped model by registry name.

    Parameters not listed for a model raise ``TypeError``.
    """
    if name == "gaussian-mean":
        cfg = IidGaussianConfig(n=n, **params)
        return ModelAdapter(
            name=name,
            n=n,
            spec=gaussian_mean_spec(cfg.sigma),
            simulate=lambda s: gaussian_simulate(cfg, s),
            prepare=lambda x: x,
            start=lambda x: np.array([np.median(x)]),
            theta_true=np.array([cfg.mu0]),
            true_info=np.array([[1.0 / cfg.sigma**2]]),
            change_u=cfg.change_u,
            has_change=cfg.change_u is not None and cfg.shift != 0,
        )
    if name == "gaussian-meanvar":
        cfg = IidGaussianConfig(n=n, **params)
        v = cfg.sigma**2
        return ModelAdapter(
            name=name,
            n=n,
            spec=gaussian_meanvar_spec(),
            simulate=lambda s: gaussian_simulate(cfg, s),
            prepare=lambda x: x,
            start=meanvar_start,
            theta_true=np.array([cfg.mu0, v]),
            true_info=np.diag([1.0 / v, 1.0 / (2 * v * v)]),
            change_u=cfg.change_u,
            has_change=cfg.change_u is not None and cfg.shift != 0,
        )
    if name == "ou":
        info_kind = params.pop("info_kind", "continuous")
        cfg = OuConfig(n=n, **params)
        return ModelAdapter(
            name=name,
            n=n,
            spec=ou_drift_spec(cfg.sigma, cfg.delta),
            simulate=lambda s: ou_simulate(cfg, s),
            prepare=ou_pairs,
            start=lambda pairs: np.array([1.0]),
            theta_true=np.array([cfg.theta]),
            true_info=np.array([[ou_information(cfg.theta, cfg.delta, info_kind)]]),
            change_u=cfg.change_u,
            has_change=(
                cfg.change_u is not None
                and cfg.theta_post is not None
                and cfg.theta_post != cfg.theta
            ),
            simulate_batch=lambda streams: ou_simulate_batch(cfg, streams),
        )
    if name == "cox":
        theta = np.atleast_1d(np.asarray(params.pop("theta", [0.0]), dtype=float))
        clock = params.pop("clock", "events")
        censor_rate = params.pop("censor_rate", 0.0)
        change_u = params.pop("change_u", None)
        theta_post = params.pop("theta_post", None)
        if params:
            raise TypeError(f"unexpected cox parameters: {sorted(params)}")
        return ModelAdapter(
            name=name,
            n=n,
            spec=cox_spec(len(theta), clock),
            simulate=lambda s: cox_simulate(theta, n, s, censor_rate, change_u, theta_post),
            prepare=lambda data: data,
            start=lambda data: np.zeros(len(theta)),
            theta_true=theta,
            change_u=change_u,
            has_change=change_u is not None and theta_post is not None
            and not np.allclose(theta_post, theta),
        )
    raise ValueError(f"unknown model {name!r}; choose from {MODEL_NAMES}")


__all__ = [
    "MODEL_NAMES",
    "ModelAdapter",
    "build_model",
    "EmptyRiskSet",
    "IidGaussianConfig",
    "OuConfig",
    "SurvData",
    "TooFewEvents",
    "break_ties",
    "censoring_rate_for",
    "cox_score_process",
    "cox_simulate",
    "cox_spec",
    "cox_zprocess_time",
    "gaussian_mean_spec",
    "gaussian_meanvar_spec",
    "gaussian_simulate",
    "meanvar_start",
    "ou_closed_form",
    "ou_drift_spec",
    "ou_information",
    "ou_pairs",
    "ou_simulate",
    "ou_simulate_batch",
]

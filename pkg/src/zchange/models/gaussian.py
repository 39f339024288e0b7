"""Gaussian scores for i.i.d. samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import RngStream
from ..zcore import EstimatingFunctionSpec


@dataclass(frozen=True)
class IidGaussianConfig:
    n: int
    mu0: float = 0.0
    sigma: float = 1.0
    shift: float = 0.0
    change_u: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.change_u is not None and not 0.0 < self.change_u < 1.0:
            raise ValueError("change_u must lie strictly inside (0, 1)")


def gaussian_simulate(cfg: IidGaussianConfig, stream: RngStream) -> np.ndarray:
    """Normal sample whose mean moves by ``shift`` from index ``floor(change_u n)`` on."""
    x = cfg.mu0 + cfg.sigma * stream.generator.standard_normal(cfg.n)
    if cfg.change_u is not None:
        x[int(np.floor(cfg.change_u * cfg.n)) :] += cfg.shift
    return x


def gaussian_mean_spec(sigma: float = 1.0) -> EstimatingFunctionSpec:
    """Score for the mean of ``N(theta, sigma^2)`` with known ``sigma``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    s2 = sigma * sigma

    def psi(x, theta):
        return (np.asarray(x, dtype=float) - theta[0])[:, None] / s2

    def dpsi(x, theta):
        return np.full((len(x), 1, 1), -1.0 / s2)

    return EstimatingFunctionSpec(dim=1, psi=psi, dpsi=dpsi, label="gaussian-mean")


def gaussian_meanvar_spec() -> EstimatingFunctionSpec:
    """Score of ``N(mu, v)`` in ``theta = (mu, v)``."""

    def psi(x, theta):
        mu, v = theta
        r = np.asarray(x, dtype=float) - mu
        return np.column_stack([r / v, (r * r - v) / (2 * v * v)])

    def dpsi(x, theta):
        mu, v = theta
        r = np.asarray(x, dtype=float) - mu
        out = np.empty((len(r), 2, 2))
        out[:, 0, 0] = -1.0 / v
        out[:, 0, 1] = out[:, 1, 0] = -r / (v * v)
        out[:, 1, 1] = 0.5 / (v * v) - r * r / v**3
        return out

    return EstimatingFunctionSpec(dim=2, psi=psi, dpsi=dpsi, label="gaussian-meanvar")

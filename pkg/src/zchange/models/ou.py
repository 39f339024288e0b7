"""Ornstein-Uhlenbeck drift estimation from Euler-discretized observations.

The model is ``dX = -theta X dt + sigma dW`` sampled every ``delta`` time
units, with ``sigma`` known. Consecutive pairs ``(X_{k-1}, X_k)`` are the
observations of the drift score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..numerics import RngStream
from ..zcore import EstimatingFunctionSpec


@dataclass(frozen=True)
class OuConfig:
    theta: float
    sigma: float
    delta: float
    n: int
    x0: float = 0.0
    theta_post: float | None = None
    change_u: float | None = None

    def __post_init__(self):
        for rate in (self.theta, self.theta_post):
            if rate is None:
                continue
            if not rate > 0:
                raise ValueError("mean-reversion rate must be positive")
            if not rate * self.delta < 0.5:
                raise ValueError("delta * theta must stay below 0.5")
        if self.sigma < 0 or not self.delta > 0:
            raise ValueError("need sigma >= 0 and delta > 0")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.change_u is not None and not 0.0 < self.change_u < 1.0:
            raise ValueError("change_u must lie strictly inside (0, 1)")

    def rates(self) -> np.ndarray:
        """Drift rate used on each of the ``n`` Euler steps."""
        th = np.full(self.n, float(self.theta))
        if self.change_u is not None and self.theta_post is not None:
            th[int(np.floor(self.change_u * self.n)) :] = self.theta_post
        return th


def _euler(cfg: OuConfig, noise: np.ndarray) -> np.ndarray:
    # noise has shape (n,) or (n, reps); the recursion runs along axis 0
    keep = 1.0 - cfg.rates() * cfg.delta
    vol = cfg.sigma * np.sqrt(cfg.delta)
    x = np.empty((cfg.n + 1,) + noise.shape[1:])
    x[0] = cfg.x0
    for k in range(cfg.n):
        x[k + 1] = x[k] * keep[k] + vol * noise[k]
    return x


def ou_simulate(cfg: OuConfig, stream: RngStream) -> np.ndarray:
    """Euler-Maruyama path of length ``n + 1`` starting at ``x0``."""
    return _euler(cfg, stream.generator.standard_normal(cfg.n))


def ou_simulate_batch(cfg: OuConfig, streams: Sequence[RngStream]) -> np.ndarray:
    """Paths for several streams at once, shape ``(len(streams), n + 1)``.

    Row ``r`` is bit-identical to ``ou_simulate(cfg, streams[r])``.
    """
    noise = np.column_stack([s.generator.standard_normal(cfg.n) for s in streams])
    return _euler(cfg, noise).T


def ou_pairs(path) -> np.ndarray:
    path = np.asarray(path, dtype=float)
    return np.column_stack([path[:-1], path[1:]])


def ou_drift_spec(sigma: float, delta: float) -> EstimatingFunctionSpec:
    r"""Euler-likelihood score for the drift rate.

    For a pair ``(x, y)``, ``psi = -x (y - x + theta x delta) / sigma^2`` and
    ``dpsi = -x^2 delta / sigma^2``.
    """
    if not (sigma > 0 and delta > 0):
        raise ValueError("sigma and delta must be positive")
    s2 = sigma * sigma

    def psi(pairs, theta):
        x, y = pairs[:, 0], pairs[:, 1]
        return (-x * (y - x + theta[0] * x * delta) / s2)[:, None]

    def dpsi(pairs, theta):
        x = pairs[:, 0]
        return (-x * x * delta / s2)[:, None, None]

    return EstimatingFunctionSpec(dim=1, psi=psi, dpsi=dpsi, label="ou")


def ou_closed_form(pairs, delta: float) -> float:
    x, y = pairs[:, 0], pairs[:, 1]
    return float(-np.sum(x * (y - x)) / (delta * np.sum(x * x)))


def ou_information(theta: float, delta: float, kind: str = "continuous") -> float:
    """Fisher information per observation pair at ``theta``.

    ``continuous`` uses the stationary variance ``sigma^2 / (2 theta)`` of
    the diffusion, giving ``delta / (2 theta)``; ``euler`` uses the
    stationary variance of the discretized chain instead.
    """
    if kind == "continuous":
        return delta / (2.0 * theta)
    if kind == "euler":
        return delta / (theta * (2.0 - theta * delta))
    raise ValueError(f"unknown information kind {kind!r}")

"""Cox regression: partial-likelihood score process and survival simulation.

Events are processed in increasing time order. At the ``i``-th event the
score increment is the covariate of the failing subject minus the
exp(theta'Z)-weighted covariate mean over the risk set ``{j : time_j >= t_i}``,
and the information increment is the weighted covariance over that set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from ..numerics import NumericalError, RngStream, cholesky
from ..zcore import EstimatingFunctionSpec

TIE_JITTER = 1e-9


class TooFewEvents(ValueError):
    pass


class EmptyRiskSet(NumericalError):
    pass


def break_ties(time: np.ndarray) -> np.ndarray:
    """Spread each group of equal times by ``TIE_JITTER * rank`` within the group.

    Rank follows the original subject order, so the result is deterministic.
    """
    time = np.asarray(time, dtype=float).copy()
    order = np.argsort(time, kind="stable")
    st = time[order]
    rank = np.zeros(len(st))
    for k in range(1, len(st)):
        if st[k] == st[k - 1]:
            rank[k] = rank[k - 1] + 1
    time[order] = st + TIE_JITTER * rank
    return time


@dataclass(frozen=True)
class SurvData:
    time: np.ndarray
    status: np.ndarray
    covariates: np.ndarray
    order: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        time = np.asarray(self.time, dtype=float).ravel()
        status = np.asarray(self.status).astype(bool).ravel()
        cov = np.asarray(self.covariates, dtype=float)
        if cov.ndim == 1:
            cov = cov[:, None]
        if not (len(time) == len(status) == cov.shape[0]):
            raise ValueError("time, status and covariates must have the same length")
        if not np.all(np.isfinite(time)) or np.any(time <= 0):
            raise ValueError("survival times must be positive and finite")
        if not np.all(np.isfinite(cov)):
            raise ValueError("covariates must be finite")
        if len(np.unique(time)) < len(time):
            time = break_ties(time)
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "status", status)
        object.__setattr__(self, "covariates", cov)
        object.__setattr__(self, "order", np.argsort(time, kind="stable"))

    @property
    def dim(self) -> int:
        return self.covariates.shape[1]

    @property
    def n_events(self) -> int:
        return int(self.status.sum())

    def __len__(self) -> int:
        return len(self.time)


def cox_score_process(data: SurvData, theta) -> tuple[np.ndarray, np.ndarray]:
    """Per-event score increments ``(m, d)`` and information increments ``(m, d, d)``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    Z = data.covariates[data.order]
    events = data.status[data.order]
    eta = Z @ theta
    w = np.exp(eta - eta.max())
    # reverse cumulative sums give the risk-set totals at every sorted position
    S0 = np.cumsum(w[::-1])[::-1]
    S1 = np.cumsum((w[:, None] * Z)[::-1], axis=0)[::-1]
    S2 = np.cumsum((w[:, None, None] * Z[:, :, None] * Z[:, None, :])[::-1], axis=0)[::-1]
    S0, S1, S2 = S0[events], S1[events], S2[events]
    if np.any(S0 <= 0):
        raise EmptyRiskSet("risk set has zero weight at an event time")
    mean = S1 / S0[:, None]
    psi = Z[events] - mean
    V = S2 / S0[:, None, None] - mean[:, :, None] * mean[:, None, :]
    return psi, V


def cox_zprocess_time(data: SurvData, theta_hat) -> np.ndarray:
    """Information-fraction clock ``u_0 = 0, ..., u_m = 1`` over the events."""
    _, V = cox_score_process(data, theta_hat)
    cholesky(V.sum(axis=0))
    tr = np.cumsum(np.trace(V, axis1=1, axis2=2))
    u = np.concatenate([[0.0], tr / tr[-1]])
    u[-1] = 1.0
    return u


def cox_spec(dim: int, clock: str = "events") -> EstimatingFunctionSpec:
    """Partial-likelihood score as an estimating function over event times.

    ``clock="information"`` places the Z-process on the information fraction
    of ``cox_zprocess_time``; ``"events"`` uses ``k / m``.
    """
    if clock not in ("events", "information"):
        raise ValueError(f"unknown clock {clock!r}")

    def psi(data, theta):
        return cox_score_process(data, theta)[0]

    def dpsi(data, theta):
        return -cox_score_process(data, theta)[1]

    return EstimatingFunctionSpec(
        dim=dim,
        psi=psi,
        dpsi=dpsi,
        label="cox",
        time_grid=cox_zprocess_time if clock == "information" else None,
    )


def _expected_censoring(rate: float, scale: float, nodes: np.ndarray, weights: np.ndarray) -> float:
    # E[rate / (rate + exp(scale * G))] for G ~ N(0, 1)
    return float(weights @ (rate / (rate + np.exp(scale * nodes))))


def censoring_rate_for(theta, target: float) -> float:
    """Exponential censoring rate giving censored fraction ``target`` in expectation.

    With unit baseline hazard and standard normal covariates, ``theta'Z`` is
    ``N(0, |theta|^2)`` and a subject is censored with probability
    ``c / (c + exp(theta'Z))``.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target censoring fraction must lie in (0, 1)")
    nodes, weights = np.polynomial.hermite_e.hermegauss(80)
    weights = weights / weights.sum()
    scale = float(np.linalg.norm(theta))
    f = lambda logc: _expected_censoring(np.exp(logc), scale, nodes, weights) - target
    return float(np.exp(bisect(f, -40.0, 40.0, xtol=1e-12)))


def cox_simulate(
    theta,
    n: int,
    stream: RngStream,
    censor_rate: float = 0.0,
    change_u: float | None = None,
    theta_post=None,
    covariates=None,
) -> SurvData:
    """Exponential proportional-hazards sample with unit baseline hazard.

    Subjects are indexed in order of entry; those from ``floor(change_u n)``
    on use ``theta_post``. Draw order from ``stream``: covariates (unless
    given), event times, censoring times.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    d = len(theta)
    if n < 20 * d:
        raise ValueError(f"need n >= {20 * d} subjects for dimension {d}")
    gen = stream.generator
    if covariates is None:
        Z = gen.standard_normal((n, d))
    else:
        Z = np.asarray(covariates, dtype=float).reshape(n, d)
    coef = np.tile(theta, (n, 1))
    if change_u is not None and theta_post is not None:
        coef[int(np.floor(change_u * n)) :] = np.atleast_1d(theta_post)
    hazard = np.exp(np.einsum("ij,ij->i", Z, coef))
    t_event = gen.standard_exponential(n) / hazard
    if censor_rate > 0:
        c = censoring_rate_for(theta, censor_rate)
        t_cens = gen.standard_exponential(n) / c
    else:
        t_cens = np.full(n, np.inf)
    status = t_event <= t_cens
    if status.sum() < d + 1:
        raise TooFewEvents(f"only {int(status.sum())} events for dimension {d}")
    return SurvData(time=np.minimum(t_event, t_cens), status=status, covariates=Z)

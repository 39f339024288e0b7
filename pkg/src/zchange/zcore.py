"""Z-estimation and the Z-process change-point test.

An estimating function is supplied as an :class:`EstimatingFunctionSpec`
whose callbacks are vectorized over the observations: ``psi(data, theta)``
returns an ``(n, d)`` array with one row per observation and
``dpsi(data, theta)`` the matching ``(n, d, d)`` Jacobians. The Z-estimator
solves ``sum_i psi_i(theta) = 0``. Holding that root fixed, the whitened
partial sums

    Z_k = L^{-1} n^{-1/2} sum_{i <= k} psi_i(theta_hat),   L L^T = info,

form the Z-process. Under no change it is close to a d-dimensional Brownian
bridge, and ``max_k |Z_k|`` is referred to the law of the bridge supremum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import limits
from .numerics import (
    NumericalError,
    NotPositiveDefinite,
    cholesky,
    newton_solve,
    NewtonResult,
    whiten,
)

SOLVER_TOL = 1e-10
ALPHAS = (0.10, 0.05, 0.01)


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class EstimatingFunctionSpec:
    dim: int
    psi: Callable[[Any, np.ndarray], np.ndarray]
    dpsi: Callable[[Any, np.ndarray], np.ndarray]
    label: str
    # optional (data, theta) -> nondecreasing grid of n+1 time fractions
    time_grid: Callable[[Any, np.ndarray], np.ndarray] | None = None

    def psi_rows(self, data, theta) -> np.ndarray:
        out = np.asarray(self.psi(data, np.atleast_1d(theta)), dtype=float)
        return out.reshape(out.shape[0], self.dim)

    def dpsi_rows(self, data, theta) -> np.ndarray:
        out = np.asarray(self.dpsi(data, np.atleast_1d(theta)), dtype=float)
        return out.reshape(out.shape[0], self.dim, self.dim)


@dataclass(frozen=True)
class ZPath:
    n: int
    u: np.ndarray
    z: np.ndarray
    sqnorm: np.ndarray
    min_pivot: float

    @property
    def norm(self) -> np.ndarray:
        return np.sqrt(self.sqnorm)

    def pinning_bound(self, tol: float = SOLVER_TOL) -> float:
        """Largest endpoint norm consistent with a root solved to ``tol``."""
        return 10.0 * np.sqrt(self.n) * tol / self.min_pivot


@dataclass
class TestReport:
    statistic: float
    p_value: float
    reject_at: dict[float, bool]
    changepoint_u: float
    theta_hat: np.ndarray
    info_hat: np.ndarray
    solver_iters: int
    n: int
    label: str = ""
    mode: str = "outer"
    pinning_residual: float = 0.0
    extras: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return {
            "model": self.label,
            "n": self.n,
            "dim": int(len(self.theta_hat)),
            "mode": self.mode,
            "statistic": float(self.statistic),
            "p_value": float(self.p_value),
            "reject_at": {f"{a:.2f}": bool(r) for a, r in self.reject_at.items()},
            "changepoint_u": float(self.changepoint_u),
            "theta_hat": [float(t) for t in self.theta_hat],
            "info_hat": [[float(v) for v in row] for row in self.info_hat],
            "solver_iters": int(self.solver_iters),
            "pinning_residual": float(self.pinning_residual),
            **self.extras,
        }


def _annotate(exc: NumericalError, label: str) -> NumericalError:
    new = type(exc)(f"[{label}] {exc}", exc.last_iterate)
    return new


def solve_z_estimator(
    spec: EstimatingFunctionSpec,
    data,
    theta0,
    tol: float = SOLVER_TOL,
    max_iter: int = 100,
) -> NewtonResult:
    """Root of the averaged estimating equation ``(1/n) sum_i psi_i(theta) = 0``."""
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    if theta0.shape != (spec.dim,):
        raise ValueError(f"theta0 must have length {spec.dim}")
    n = spec.psi_rows(data, theta0).shape[0]
    if n == 0:
        raise InsufficientData("no observations")

    def f(theta):
        return spec.psi_rows(data, theta).mean(axis=0)

    def jac(theta):
        return spec.dpsi_rows(data, theta).mean(axis=0)

    try:
        return newton_solve(f, jac, theta0, tol=tol, max_iter=max_iter)
    except NumericalError as exc:
        raise _annotate(exc, spec.label) from None


def information_hat(spec: EstimatingFunctionSpec, data, theta_hat, mode: str = "outer") -> np.ndarray:
    """Sample information at ``theta_hat``.

    ``outer`` averages ``psi psi^T``; ``jacobian`` is minus the averaged
    Jacobian, symmetrized before the positive-definiteness check.
    """
    theta_hat = np.atleast_1d(theta_hat)
    if mode == "outer":
        rows = spec.psi_rows(data, theta_hat)
        info = rows.T @ rows / rows.shape[0]
    elif mode == "jacobian":
        J = -spec.dpsi_rows(data, theta_hat).mean(axis=0)
        info = 0.5 * (J + J.T)
    else:
        raise ValueError(f"unknown information mode {mode!r}")
    try:
        cholesky(info)
    except NotPositiveDefinite as exc:
        raise _annotate(exc, spec.label) from None
    return info


def z_process(spec: EstimatingFunctionSpec, data, theta_hat, info) -> ZPath:
    theta_hat = np.atleast_1d(theta_hat)
    rows = spec.psi_rows(data, theta_hat)
    n, d = rows.shape
    L = cholesky(info)
    partial = np.zeros((n + 1, d))
    np.cumsum(rows, axis=0, out=partial[1:])
    z = whiten(partial / np.sqrt(n), L)
    z[0] = 0.0
    if spec.time_grid is None:
        u = np.arange(n + 1) / n
    else:
        u = np.asarray(spec.time_grid(data, theta_hat), dtype=float)
        if u.shape != (n + 1,):
            raise ValueError("time grid must have n + 1 points")
    return ZPath(n=n, u=u, z=z, sqnorm=np.einsum("kd,kd->k", z, z), min_pivot=float(np.min(np.diag(L))))


def test_statistic(path: ZPath) -> float:
    return float(np.max(path.norm))


def changepoint_estimate(path: ZPath) -> float:
    """Time fraction of the first index where ``|Z_k|`` is largest."""
    return float(path.u[int(np.argmax(path.norm))])


def run_test(
    spec: EstimatingFunctionSpec,
    data,
    theta0,
    mode: str = "outer",
    crit: limits.CritTable | None = None,
    tol: float = SOLVER_TOL,
) -> TestReport:
    """Estimate, whiten, take the supremum and calibrate.

    For ``spec.dim == 1`` the p-value comes from the Kolmogorov series and
    ``crit`` may be omitted; otherwise a table of matching dimension is needed.
    """
    n = spec.psi_rows(data, np.atleast_1d(np.asarray(theta0, dtype=float))).shape[0]
    if n <= spec.dim:
        raise InsufficientData(f"need more than {spec.dim} observations, got {n}")
    fit = solve_z_estimator(spec, data, theta0, tol=tol)
    info = information_hat(spec, data, fit.x, mode)
    path = z_process(spec, data, fit.x, info)
    stat = test_statistic(path)
    p = limits.p_value(stat, spec.dim, crit)
    return TestReport(
        statistic=stat,
        p_value=p,
        reject_at={a: p <= a for a in ALPHAS},
        changepoint_u=changepoint_estimate(path),
        theta_hat=fit.x,
        info_hat=info,
        solver_iters=fit.iterations,
        n=n,
        label=spec.label,
        mode=mode,
        pinning_residual=float(path.norm[-1]),
    )

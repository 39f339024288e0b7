"""Null calibration: the law of the supremum norm of a Brownian bridge.

For one dimension the supremum of ``|B(u)|`` follows the Kolmogorov law and
is evaluated by series. For any dimension a Monte Carlo table is simulated
from random-walk bridges and can be cached on disk.
"""

from __future__ import annotations

import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit
from scipy.optimize import brentq

from .numerics import RngStream

log = logging.getLogger(__name__)

DEFAULT_GRID_N = 2**14
DEFAULT_REPS = 100_000
DEFAULT_SEED = 20120501
LEVELS = (0.90, 0.95, 0.99)
BLOCK_REPS = 250
CACHE_ENV = "ZCHANGE_CACHE_DIR"

# Leading overshoot of a continuous supremum over its value on a grid of
# spacing h is BETA * sqrt(h), with BETA = -zeta(1/2) / sqrt(2 pi).
BETA = 0.5825971579390106

_SERIES_EPS = 1e-16


class DimensionMismatch(ValueError):
    pass


def _alternating_tail(x: float) -> float:
    # 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)
    total, k, sign = 0.0, 1, 1.0
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        total += sign * term
        if term < _SERIES_EPS:
            return 2.0 * total
        sign, k = -sign, k + 1


def _theta_cdf(x: float) -> float:
    # sqrt(2 pi)/x sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2)); converges fast for small x
    c = math.sqrt(2.0 * math.pi) / x
    total, k = 0.0, 1
    while True:
        term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * x * x))
        total += term
        if c * term < _SERIES_EPS:
            return c * total
        k += 1


def kolmogorov_cdf(x: float) -> float:
    """``P(sup_u |B(u)| <= x)`` for a standard Brownian bridge."""
    x = float(x)
    if x < 0.05:
        # below 1e-200; the series would underflow
        return 0.0
    if x < 1.0:
        return min(1.0, _theta_cdf(x))
    return 1.0 - _alternating_tail(x)


def kolmogorov_sf(x: float) -> float:
    x = float(x)
    if x <= 0.0:
        return 1.0
    if x < 1.0:
        return 1.0 - kolmogorov_cdf(x)
    return min(1.0, _alternating_tail(x))


def kolmogorov_quantile(q: float) -> float:
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    return brentq(lambda x: kolmogorov_cdf(x) - q, 1e-3, 10.0, xtol=1e-14)


@njit(cache=True)
def _bridge_sq_suprema(inc):
    # inc: (reps, g, dim) raw N(0, 1) increments; returns max_k |W_k - (k/g) W_g|^2
    reps, g, dim = inc.shape
    out = np.empty(reps)
    ends = np.empty(dim)
    w = np.empty(dim)
    for r in range(reps):
        for j in range(dim):
            ends[j] = 0.0
            w[j] = 0.0
        for k in range(g):
            for j in range(dim):
                ends[j] += inc[r, k, j]
        best = 0.0
        for k in range(g):
            u = (k + 1) / g
            q = 0.0
            for j in range(dim):
                w[j] += inc[r, k, j]
                b = w[j] - u * ends[j]
                q += b * b
            if q > best:
                best = q
        out[r] = best
    return out


def bridge_suprema(increments: np.ndarray, correct: bool = True) -> np.ndarray:
    """Supremum norms of random-walk bridges built from ``(reps, g, dim)`` increments.

    Increments are standard normal and scaled by ``1/sqrt(g)`` here. With
    ``correct`` the grid overshoot ``BETA / sqrt(g)`` is added.
    """
    inc = np.ascontiguousarray(increments, dtype=float)
    if inc.ndim == 2:
        inc = inc[:, :, None]
    g = inc.shape[1]
    sup = np.sqrt(_bridge_sq_suprema(inc) / g)
    if correct:
        sup += BETA / math.sqrt(g)
    return sup


def bridge_paths(increments: np.ndarray) -> np.ndarray:
    """Bridge values ``(reps, g + 1, dim)`` on the grid ``k/g`` from raw increments."""
    inc = np.asarray(increments, dtype=float)
    if inc.ndim == 2:
        inc = inc[:, :, None]
    reps, g, dim = inc.shape
    w = np.zeros((reps, g + 1, dim))
    np.cumsum(inc / math.sqrt(g), axis=1, out=w[:, 1:])
    u = (np.arange(g + 1) / g)[None, :, None]
    paths = w - u * w[:, -1:, :]
    paths[:, -1, :] = 0.0
    return paths


@dataclass(frozen=True)
class CritTable:
    dim: int
    grid_n: int
    reps: int
    seed: int
    ecdf: np.ndarray = field(repr=False)

    def quantile(self, level: float) -> float:
        return float(np.quantile(self.ecdf, level))

    def critical_value(self, alpha: float) -> float:
        return self.quantile(1.0 - alpha)

    @property
    def quantiles(self) -> dict[float, float]:
        return {lv: self.quantile(lv) for lv in LEVELS}

    def p_value(self, s: float) -> float:
        count = self.reps - int(np.searchsorted(self.ecdf, s, side="left"))
        return (count + 1) / (self.reps + 1)


def simulate_sup_bridge(
    dim: int,
    grid_n: int = DEFAULT_GRID_N,
    reps: int = DEFAULT_REPS,
    seed: int = DEFAULT_SEED,
) -> CritTable:
    """Tabulate the supremum norm of a ``dim``-dimensional Brownian bridge.

    Replications are simulated in fixed blocks of ``BLOCK_REPS``, block ``b``
    drawing from ``RngStream(seed, b)``, so the table depends only on the
    arguments.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if grid_n < 2**10 or reps < 1000:
        raise ValueError("need grid_n >= 1024 and reps >= 1000")
    sups = np.empty(reps)
    for b, start in enumerate(range(0, reps, BLOCK_REPS)):
        size = min(BLOCK_REPS, reps - start)
        inc = RngStream(seed, b).generator.standard_normal((size, grid_n, dim))
        sups[start : start + size] = bridge_suprema(inc)
    sups.sort()
    return CritTable(dim=dim, grid_n=grid_n, reps=reps, seed=seed, ecdf=sups)


def p_value(s: float, dim: int, table: CritTable | None = None) -> float:
    """Right-tail p-value of a supremum statistic ``s``.

    Uses the Kolmogorov series when ``table`` is omitted (``dim`` must be 1),
    else the table's tail proportion with add-one smoothing.
    """
    if table is None:
        if dim != 1:
            raise DimensionMismatch(f"dimension {dim} needs a simulated table")
        return kolmogorov_sf(s)
    if table.dim != dim:
        raise DimensionMismatch(f"table has dim {table.dim}, statistic has dim {dim}")
    return table.p_value(s)


# --- disk cache -------------------------------------------------------------


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "zchange"))


def cache_path(dim: int, grid_n: int, reps: int, seed: int, directory: Path | None = None) -> Path:
    directory = cache_dir() if directory is None else Path(directory)
    return directory / f"supbridge_d{dim}_g{grid_n}_r{reps}_s{seed}.txt"


def write_table(table: CritTable, path: Path) -> None:
    lines = [f"{table.dim},{table.grid_n},{table.reps},{table.seed}"]
    lines += [format(v, ".17g") for v in table.ecdf]
    path.write_text("\n".join(lines) + "\n")


def read_table(path: Path) -> CritTable:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        dim, grid_n, reps, seed = (int(h) for h in header)
        values = np.loadtxt(fh, ndmin=1)
    if values.shape != (reps,):
        raise ValueError(f"{path}: expected {reps} values, found {values.shape[0]}")
    return CritTable(dim=dim, grid_n=grid_n, reps=reps, seed=seed, ecdf=values)


def load_or_simulate(
    dim: int,
    grid_n: int = DEFAULT_GRID_N,
    reps: int = DEFAULT_REPS,
    seed: int = DEFAULT_SEED,
    directory: Path | None = None,
) -> tuple[CritTable, bool]:
    """Return ``(table, cached)``, reading the cache when a matching file exists."""
    path = cache_path(dim, grid_n, reps, seed, directory)
    if path.exists():
        try:
            table = read_table(path)
            if (table.dim, table.grid_n, table.reps, table.seed) == (dim, grid_n, reps, seed):
                return table, True
            log.warning("cache file %s does not match its key; recomputing", path)
        except (OSError, ValueError) as exc:
            log.warning("unreadable cache file %s (%s); recomputing", path, exc)
    table = simulate_sup_bridge(dim, grid_n, reps, seed)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        write_table(table, path)
    except OSError as exc:
        warnings.warn(f"could not write table cache {path}: {exc}", RuntimeWarning, stacklevel=2)
    return table, False

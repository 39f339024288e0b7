"""Small dense linear algebra, damped Newton iteration and seeded RNG streams."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.random import PCG64DXSM, Generator, SeedSequence
from scipy.linalg import solve_triangular

MAX_DIM = 16
SYMMETRY_RTOL = 1e-12
MAX_HALVINGS = 30


class NumericalError(ArithmeticError):
    """Base class for numerical failures raised by the estimation pipeline."""

    def __init__(self, message: str, last_iterate: np.ndarray | None = None):
        super().__init__(message)
        self.last_iterate = last_iterate


class NotPositiveDefinite(NumericalError):
    pass


class SingularJacobian(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


def as_spd(m) -> np.ndarray:
    """Validate a square matrix as symmetric and return its symmetrized copy.

    Asymmetry above ``SYMMETRY_RTOL`` relative to the largest entry raises
    ``ValueError``; smaller discrepancies are absorbed by ``(m + m.T) / 2``.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not 1 <= m.shape[0] <= MAX_DIM:
        raise ValueError(f"dimension {m.shape[0]} outside 1..{MAX_DIM}")
    if not np.all(np.isfinite(m)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    scale = np.max(np.abs(m))
    if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (m + m.T)


def cholesky(m) -> np.ndarray:
    """Lower Cholesky factor ``L`` with ``L @ L.T == m``.

    Raises
    ------
    NotPositiveDefinite
        If any pivot is not strictly positive.
    """
    m = as_spd(m)
    try:
        L = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"matrix is not positive definite: {exc}") from None
    if not np.all(np.diag(L) > 0):
        raise NotPositiveDefinite("Cholesky pivot is not strictly positive")
    return L


def whiten(v, L: np.ndarray) -> np.ndarray:
    """Solve ``L y = v`` for lower-triangular ``L``; ``v`` may hold vectors in rows."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        return solve_triangular(L, v, lower=True)
    return solve_triangular(L, v.T, lower=True).T


def quad_form(v, m) -> float:
    """Return ``v^T m^{-1} v`` through two triangular solves."""
    L = cholesky(m)
    y = whiten(np.atleast_1d(np.asarray(v, dtype=float)), L)
    return float(y @ y)


@dataclass(frozen=True)
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual: float


def _supnorm(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        return np.inf
    return float(np.max(np.abs(v))) if v.size else 0.0


def _polish(f, jac, x, fx, res, steps: int = 3):
    # inside the quadratic basin a few more full steps reach roundoff; keep a
    # step only if it at least halves the residual
    for _ in range(steps):
        if res == 0.0:
            break
        try:
            x_new = x - np.linalg.solve(np.atleast_2d(jac(x)), fx)
        except np.linalg.LinAlgError:
            break
        f_new = np.atleast_1d(f(x_new))
        res_new = _supnorm(f_new)
        if not res_new < 0.5 * res:
            break
        x, fx, res = x_new, f_new, res_new
    return x, res


def newton_solve(
    f: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], np.ndarray],
    x0,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> NewtonResult:
    """Find a root of ``f`` by Newton's method with step halving.

    A full step is tried first. If it does not strictly reduce ``max|f|`` the
    step length is halved, at most ``MAX_HALVINGS`` times. Non-finite values of
    ``f`` count as no reduction, which keeps iterates inside the region where
    ``f`` is defined. Once ``tol`` is met, up to three further full steps
    are kept while each halves the residual; they are not counted in
    ``iterations``.

    Raises
    ------
    SingularJacobian
        The Jacobian cannot be inverted at the current iterate.
    NoConvergence
        ``max_iter`` Newton steps were taken, or halving failed to reduce the
        residual, without reaching ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    fx = np.atleast_1d(f(x))
    res = _supnorm(fx)
    if not np.isfinite(res):
        raise NoConvergence("estimating function is not finite at the start point", x)
    for it in range(max_iter + 1):
        if res <= tol:
            x, res = _polish(f, jac, x, fx, res)
            return NewtonResult(x=x, iterations=it, residual=res)
        if it == max_iter:
            break
        J = np.atleast_2d(jac(x))
        try:
            if not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e14:
                raise np.linalg.LinAlgError("ill-conditioned")
            step = np.linalg.solve(J, fx)
        except np.linalg.LinAlgError:
            raise SingularJacobian(f"Jacobian is singular at iterate {x}", x) from None
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            x_new = x - t * step
            f_new = np.atleast_1d(f(x_new))
            res_new = _supnorm(f_new)
            if res_new < res or res_new <= tol:
                break
            t *= 0.5
        else:
            raise NoConvergence(
                f"step halving failed to reduce the residual {res:.3g} at {x}", x
            )
        x, fx, res = x_new, f_new, res_new
    raise NoConvergence(f"no convergence in {max_iter} iterations (residual {res:.3g})", x)


class RngStream:
    """A reproducible random stream identified by a seed and an index path.

    ``RngStream(7, 1)`` and ``RngStream(7).derive(1)`` are the same stream.
    Streams with different index paths are seeded through distinct
    ``SeedSequence`` spawn keys and are statistically independent. A stream
    holds mutable generator state and must not be shared across tasks.
    """

    def __init__(self, seed: int, *index: int):
        if not 0 <= int(seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.index = tuple(int(i) for i in index)
        self.generator = Generator(PCG64DXSM(SeedSequence(self.seed, spawn_key=self.index)))

    def derive(self, index: int) -> "RngStream":
        return RngStream(self.seed, *self.index, index)

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit outputs of the bit generator."""
        return self.generator.bit_generator.random_raw(n)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, index={self.index})"


def standard_normals(stream: RngStream, n: int, size: int | None = None) -> np.ndarray:
    """Draw ``n`` standard normal variates (or an ``(n, size)`` block)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    shape = n if size is None else (n, size)
    return stream.generator.standard_normal(shape)

"""
Chebyshev fits of angular rate and specific force from one interval of IMU data.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import qr, solve_triangular

from .chebkernel import ChebSeries, cheb_defint, cheb_vander

_RANK_TOL = 1e-12


@dataclass(frozen=True)
class ImuBatch:
    """
    One update interval of increment-type IMU output.

    Parameters
    ----------
    dt : float
        Sample period in seconds.
    dtheta : array-like, shape (N, 3)
        Angular increments (rad) over consecutive sample periods.
    dv : array-like, shape (N, 3)
        Velocity increments (m/s) over the same periods.
    """

    dt: float
    dtheta: NDArray[np.float64]
    dv: NDArray[np.float64]

    def __post_init__(self) -> None:
        dth = np.array(self.dtheta, dtype=float).reshape(-1, 3)
        dv = np.array(self.dv, dtype=float).reshape(-1, 3)
        if dth.shape != dv.shape:
            raise ValueError(f"dtheta and dv lengths differ: {dth.shape[0]} vs {dv.shape[0]}")
        if dth.shape[0] < 2:
            raise ValueError("need at least 2 samples per interval")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (np.isfinite(dth).all() and np.isfinite(dv).all()):
            raise ValueError("increments must be finite")
        dth.flags.writeable = False
        dv.flags.writeable = False
        object.__setattr__(self, "dtheta", dth)
        object.__setattr__(self, "dv", dv)

    @property
    def n_samples(self) -> int:
        return self.dtheta.shape[0]

    @property
    def t_span(self) -> float:
        return self.n_samples * self.dt


def _solver(A: NDArray[np.float64]) -> NDArray[np.float64]:
    # least-squares solution operator through QR; the fit is X @ rhs
    Q, R = qr(A, mode="economic")
    d = np.abs(np.diag(R))
    if d.min() <= _RANK_TOL * d.max():
        raise np.linalg.LinAlgError("rank-deficient Chebyshev fit")
    X = solve_triangular(R, Q.T)
    X.flags.writeable = False
    return X


@lru_cache(maxsize=None)
def increment_solver(N: int, n: int) -> NDArray[np.float64]:
    """
    Operator mapping N increments (with the t_N/2 factor removed) to n+1
    Chebyshev coefficients.
    """
    if not 0 <= n <= N - 1:
        raise ValueError(f"fit degree must satisfy 0 <= n <= N-1, got n={n}, N={N}")
    tau = -1.0 + 2.0 * np.arange(N + 1) / N
    G = np.array([[cheb_defint(i, tau[k], tau[k + 1]) for i in range(n + 1)] for k in range(N)])
    return _solver(G)


@lru_cache(maxsize=None)
def _rate_solver(N: int, n: int) -> NDArray[np.float64]:
    if not 0 <= n <= N - 1:
        raise ValueError(f"fit degree must satisfy 0 <= n <= N-1, got n={n}, N={N}")
    tau = -1.0 + 2.0 * np.arange(1, N + 1) / N
    return _solver(cheb_vander(tau, n))


def fit_increments(
    batch: ImuBatch, n_w: int | None = None, n_f: int | None = None
) -> tuple[ChebSeries, ChebSeries]:
    """
    Fit angular-rate and specific-force series to a batch of increments.

    The coefficients reproduce each increment as
    ``(t_N/2) * sum_i c_i * integral(F_i, tau_{k-1}, tau_k)`` with
    ``tau_k = -1 + 2k/N``; with the default degree ``N-1`` the fit is exact.
    Returned series are in rad/s and m/s^2.
    """
    N = batch.n_samples
    n_w = N - 1 if n_w is None else n_w
    n_f = N - 1 if n_f is None else n_f
    scale = 2.0 / batch.t_span
    c = scale * (increment_solver(N, n_w) @ batch.dtheta)
    d = scale * (increment_solver(N, n_f) @ batch.dv)
    return ChebSeries(c, batch.t_span), ChebSeries(d, batch.t_span)


def fit_rates(samples: ArrayLike, n: int, t_span: float = 1.0) -> ChebSeries:
    """
    Least-squares collocation fit of rate-type samples taken at ``t_k = k t_N / N``,
    ``k = 1..N``.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    return ChebSeries(_rate_solver(samples.shape[0], n) @ samples, t_span)


def reconstruct_increments(series: ChebSeries, N: int) -> NDArray[np.float64]:
    """Increments over the N sub-intervals implied by a fitted series."""
    tau = -1.0 + 2.0 * np.arange(N + 1) / N
    G = np.array(
        [[cheb_defint(i, tau[k], tau[k + 1]) for i in range(series.max_degree + 1)] for k in range(N)]
    )
    return 0.5 * series.t_span * G @ series.coeffs

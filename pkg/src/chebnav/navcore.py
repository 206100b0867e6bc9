"""
Matrix-form Chebyshev-Picard navigation update in the ECEF frame.

Each update interval runs two loops. The attitude loop iterates the quaternion
coefficients to a fixed point. The velocity/position loop then iterates with
the converged attitude held fixed. Every pass is a handful of products with
constant matrices from :mod:`chebnav.chebkernel`; only the integrand rows at
the Chebyshev roots change between passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import quatalgebra as qa
from .chebkernel import ChebSeries, SpectralOperators, build_operators, root_vander
from .earthmodel import earth_rate_e, gravity_e
from .imufit import ImuBatch, fit_increments

GravityFn = Callable[[NDArray[np.float64]], NDArray[np.float64]]

# A pass whose RMS change is within this many ulps of the largest coefficient
# is treated as converged: the change is rounding noise, not iteration error.
NOISE_ULPS = 4.0
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class NavState:
    """Navigation state at epoch ``t``: body-to-ECEF quaternion, ECEF velocity and position."""

    t: float
    q: NDArray[np.float64]
    v_e: NDArray[np.float64]
    p_e: NDArray[np.float64]

    def __post_init__(self) -> None:
        for name, size in (("q", 4), ("v_e", 3), ("p_e", 3)):
            arr = np.array(getattr(self, name), dtype=float).reshape(size)
            if not np.isfinite(arr).all():
                raise ValueError(f"non-finite {name}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "t", float(self.t))

    def as_row(self) -> NDArray[np.float64]:
        return np.concatenate([[self.t], self.q, self.v_e, self.p_e])


@dataclass(frozen=True)
class IterationConfig:
    m_q: int = 9
    m_v: int = 9
    m_p: int = 9
    max_iters: int = 9
    tol: float = 1e-16
    renormalize: bool = True
    n_w: int | None = None
    n_f: int | None = None

    def __post_init__(self) -> None:
        if min(self.m_q, self.m_v, self.m_p) < 2:
            raise ValueError("series degrees must be at least 2")
        if self.m_p != self.m_v:
            raise ValueError("position and velocity series must share a degree")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    @classmethod
    def for_samples(cls, N: int, **overrides) -> IterationConfig:
        """Defaults for N samples per interval: degrees and iteration cap N+1, fits N-1."""
        kw = dict(m_q=N + 1, m_v=N + 1, m_p=N + 1, max_iters=N + 1, n_w=N - 1, n_f=N - 1)
        kw.update(overrides)
        return cls(**kw)


@dataclass(frozen=True)
class LoopStats:
    iters: int
    converged: bool
    errors: tuple[float, ...] = field(default_factory=tuple)

    @property
    def error(self) -> float:
        return self.errors[-1] if self.errors else float("nan")


@dataclass(frozen=True)
class IntervalSolution:
    q_series: ChebSeries
    v_series: ChebSeries
    p_series: ChebSeries
    attitude: LoopStats
    velocity: LoopStats
    position: LoopStats

    @property
    def iters_attitude(self) -> int:
        return self.attitude.iters

    @property
    def iters_velpos(self) -> int:
        return self.velocity.iters

    @property
    def converged(self) -> bool:
        return self.attitude.converged and self.velocity.converged and self.position.converged

    @property
    def e_q(self) -> float:
        return self.attitude.error

    @property
    def e_v(self) -> float:
        return self.velocity.error

    @property
    def e_p(self) -> float:
        return self.position.error


def rms_coeff_delta(prev: ArrayLike, new: ArrayLike) -> float:
    """RMS over coefficient rows of the change between two tables."""
    d = np.subtract(new, prev, dtype=float)
    return math.sqrt(float(np.vdot(d, d)) / d.shape[0])


def is_settled(e: float, coeffs: NDArray[np.float64], tol: float) -> bool:
    """Stopping rule: below ``tol``, or down at the rounding floor of ``coeffs``."""
    return e < tol or e <= NOISE_ULPS * _EPS * float(np.abs(coeffs).max())


def _check_finite(e: float, what: str, it: int) -> None:
    # any non-finite coefficient makes the RMS change non-finite as well
    if not math.isfinite(e):
        raise FloatingPointError(f"non-finite {what} at pass {it}")


def attitude_iterate(
    q0: ArrayLike,
    w_series: ChebSeries,
    w_e: ArrayLike,
    cfg: IterationConfig,
    ops: SpectralOperators | None = None,
) -> tuple[ChebSeries, LoopStats]:
    """
    Picard iteration of the quaternion coefficients over one interval.

    Starts from the constant function ``q0``. Each pass forms the integrand
    rows ``q(sigma_k) o w_b(sigma_k) - w_e o q(sigma_k)`` at the roots and
    maps them to new coefficients through ``Cs``.
    """
    M = cfg.m_q
    ops = build_operators(M) if ops is None else ops
    if ops.M != M:
        raise ValueError("operators built for a different degree")
    t_n = w_series.t_span
    gain = (t_n / 4.0) * (2.0 / (M + 1))
    assert math.isclose(gain, t_n / (2.0 * (M + 1)), rel_tol=1e-15)

    w_roots = root_vander(M, w_series.max_degree) @ w_series.coeffs
    # per-root linear map q -> q o w_b - w_e o q
    A = qa.qminus(qa.as_quat(w_roots)) - qa.qplus(qa.as_quat(w_e))
    # The whole pass b -> chi0 + gain Cs [A_k (F b)_k] is linear in b, so it
    # collapses into one (4(M+1))^2 operator acting on the flattened table.
    n = M + 1
    AF = A[:, :, None, :] * ops.F[:, None, :, None]
    L = (gain * ops.Cs @ AF.reshape(n, -1)).reshape(4 * n, 4 * n)

    chi0 = np.zeros((M + 1) * 4)
    chi0[:4] = q0
    b = chi0
    errors = []
    converged = False
    for it in range(1, cfg.max_iters + 1):
        b_new = chi0 + L @ b
        d = b_new - b
        e = math.sqrt(float(d @ d) / (M + 1))
        _check_finite(e, "attitude coefficients", it)
        errors.append(e)
        b = b_new
        if is_settled(e, b, cfg.tol):
            converged = True
            break
    b = b.reshape(M + 1, 4)
    return ChebSeries(b, t_n), LoopStats(it, converged, tuple(errors))


def velpos_iterate(
    v0: ArrayLike,
    p0: ArrayLike,
    q_series: ChebSeries,
    f_series: ChebSeries,
    w_e: ArrayLike,
    cfg: IterationConfig,
    ops: SpectralOperators | None = None,
    gravity: GravityFn = gravity_e,
) -> tuple[ChebSeries, ChebSeries, LoopStats, LoopStats]:
    """
    Joint Picard iteration of velocity and position coefficients.

    The attitude series must already be converged. Gravity is evaluated at the
    previous pass's positions at the roots, and each position update uses the
    velocity coefficients of the same pass.
    """
    M = cfg.m_v
    ops = build_operators(M) if ops is None else ops
    if ops.M != M:
        raise ValueError("operators built for a different degree")
    t_n = q_series.t_span
    gain_v = (t_n / 2.0) * (2.0 / (M + 1))
    assert math.isclose(gain_v, t_n / (M + 1), rel_tol=1e-15)
    gain_p = t_n / 2.0

    q_roots = root_vander(M, q_series.max_degree) @ q_series.coeffs
    f_roots = root_vander(M, f_series.max_degree) @ f_series.coeffs
    # q o f o q*, with the unnormalized quaternion values as in the iteration
    f_e = qa.rotate(q_roots, f_roots)
    coriolis = -2.0 * qa.skew(w_e).T

    eta0 = np.zeros((M + 1, 3))
    eta0[0] = v0
    sig0 = np.zeros((M + 1, 3))
    sig0[0] = p0
    s, rho = eta0, sig0
    gCs = gain_v * ops.Cs
    gCd = gain_p * ops.Cd
    # Specific force does not change between passes, and the Coriolis term
    # reaches the roots through F, so both fold into constant pieces.
    base = eta0 + gCs @ f_e
    gCsF = gCs @ ops.F
    P = np.broadcast_to(np.asarray(p0, dtype=float), (M + 1, 3))
    ev, ep = [], []
    v_done = p_done = False
    for it in range(1, cfg.max_iters + 1):
        try:
            g = gravity(P)
        except ValueError as exc:
            raise FloatingPointError(f"gravity evaluation failed at pass {it}: {exc}") from exc
        s_new = base + gCsF @ (s @ coriolis) + gCs @ g
        rho_new = sig0 + gCd @ s_new
        ev.append(rms_coeff_delta(s, s_new))
        ep.append(rms_coeff_delta(rho, rho_new))
        _check_finite(ev[-1], "velocity coefficients", it)
        _check_finite(ep[-1], "position coefficients", it)
        s, rho = s_new, rho_new
        P = ops.F @ rho
        v_done = is_settled(ev[-1], s, cfg.tol)
        p_done = is_settled(ep[-1], rho, cfg.tol)
        if v_done and p_done:
            break
    return (
        ChebSeries(s, t_n),
        ChebSeries(rho, t_n),
        LoopStats(it, v_done, tuple(ev)),
        LoopStats(it, p_done, tuple(ep)),
    )


def step(
    state: NavState,
    batch: ImuBatch,
    cfg: IterationConfig,
    w_e: ArrayLike | None = None,
    gravity: GravityFn = gravity_e,
) -> tuple[NavState, IntervalSolution]:
    """Advance ``state`` over one batch: fit, attitude loop, velocity/position loop."""
    w_e = earth_rate_e() if w_e is None else np.asarray(w_e, dtype=float)
    w_series, f_series = fit_increments(batch, cfg.n_w, cfg.n_f)
    q_series, att = attitude_iterate(state.q, w_series, w_e, cfg)
    v_series, p_series, vel, pos = velpos_iterate(
        state.v_e, state.p_e, q_series, f_series, w_e, cfg, gravity=gravity
    )
    # series value at tau = 1 is the plain coefficient sum
    q_end = q_series.coeffs.sum(axis=0)
    if cfg.renormalize:
        q_end = q_end / np.linalg.norm(q_end)
    new_state = NavState(
        state.t + batch.t_span, q_end, v_series.coeffs.sum(axis=0), p_series.coeffs.sum(axis=0)
    )
    return new_state, IntervalSolution(q_series, v_series, p_series, att, vel, pos)


def iter_batches(dtheta: ArrayLike, dv: ArrayLike, dt: float, N: int) -> Iterator[ImuBatch]:
    """Split increment streams into consecutive N-sample batches."""
    dtheta = np.asarray(dtheta, dtype=float)
    dv = np.asarray(dv, dtype=float)
    if dtheta.shape != dv.shape:
        raise ValueError("increment streams differ in length")
    if dtheta.shape[0] % N:
        raise ValueError(f"{dtheta.shape[0]} samples is not a multiple of N={N}")
    for k in range(0, dtheta.shape[0], N):
        yield ImuBatch(dt, dtheta[k : k + N], dv[k : k + N])

"""
Comparison algorithms.

``naive_*`` expands every Chebyshev product into its full-degree series and
truncates afterwards. It reaches the same fixed point as :mod:`chebnav.navcore`
by a different route, which makes it both a correctness oracle and a speed
baseline. ``two_sample_step`` is the classical two-sample strapdown update
used as the accuracy baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import quatalgebra as qa
from .chebkernel import ChebSeries, cheb_roots, cheb_vander, coeffs_from_samples, integration_matrix
from .earthmodel import earth_rate_e, gravity_e
from .imufit import ImuBatch, fit_increments
from .navcore import (
    GravityFn,
    IntervalSolution,
    IterationConfig,
    LoopStats,
    NavState,
    is_settled,
    rms_coeff_delta,
)


@dataclass(frozen=True)
class TruncationPolicy:
    """Series degrees kept after each expansion, and the raw degrees before truncation."""

    m_q: int
    m_v: int
    m_p: int
    n_w: int
    n_f: int

    @classmethod
    def from_config(cls, cfg: IterationConfig, n_w: int, n_f: int) -> TruncationPolicy:
        return cls(cfg.m_q, cfg.m_v, cfg.m_p, n_w, n_f)

    @property
    def raw_attitude_degree(self) -> int:
        return self.m_q + self.n_w + 1

    @property
    def raw_velocity_degree(self) -> int:
        # gravity enters with degree m_v, so the m_g slot collapses onto m_v
        return max(2 * self.m_q + self.n_f, self.m_v) + 1

    @property
    def raw_position_degree(self) -> int:
        return self.m_v + 1


@lru_cache(maxsize=None)
def _pair_expansion(m: int, n: int) -> NDArray[np.float64]:
    """E[r, i, j]: weight of F_r in F_i F_j = (F_{i+j} + F_{|i-j|}) / 2."""
    E = np.zeros((m + n + 1, m + 1, n + 1))
    for i in range(m + 1):
        for j in range(n + 1):
            E[i + j, i, j] += 0.5
            E[abs(i - j), i, j] += 0.5
    return E


@lru_cache(maxsize=None)
def _triple_expansion(m: int, n: int) -> NDArray[np.float64]:
    """E[r, i, j, k]: weight of F_r in F_i F_j F_k."""
    E = np.zeros((2 * m + n + 1, m + 1, n + 1, m + 1))
    for i in range(m + 1):
        for j in range(n + 1):
            for k in range(m + 1):
                for r in (i + j + k, abs(i + j - k), abs(i - j) + k, abs(abs(i - j) - k)):
                    E[r, i, j, k] += 0.25
    return E


def _integrate(coeffs: NDArray[np.float64], keep: int) -> NDArray[np.float64]:
    """Antiderivative from -1 of a full-degree table, truncated to ``keep`` rows."""
    K = coeffs.shape[0] - 1
    return integration_matrix(K)[:keep] @ coeffs


def _pad(coeffs: NDArray[np.float64], rows: int) -> NDArray[np.float64]:
    out = np.zeros((rows,) + coeffs.shape[1:])
    out[: coeffs.shape[0]] = coeffs
    return out


def naive_attitude_iterate(
    q0: ArrayLike, w_series: ChebSeries, w_e: ArrayLike, cfg: IterationConfig
) -> tuple[ChebSeries, LoopStats]:
    """Quaternion Picard iteration by direct product expansion and truncation."""
    m, n = cfg.m_q, w_series.max_degree
    t_n = w_series.t_span
    E = _pair_expansion(m, n)
    c = qa.as_quat(w_series.coeffs)
    we = qa.as_quat(w_e)
    b = np.zeros((m + 1, 4))
    b[0] = q0
    chi0 = b.copy()
    errors = []
    converged = False
    for it in range(1, cfg.max_iters + 1):
        # every product b_i o c_j, scattered over degrees i+j and |i-j|
        prods = qa.quat_mul(b[:, None, :], c[None, :, :])
        integrand = np.einsum("rij,ijd->rd", E, prods)
        integrand[: m + 1] -= qa.quat_mul(we, b)
        b_new = chi0 + (t_n / 4.0) * _integrate(integrand, m + 1)
        e = rms_coeff_delta(b, b_new)
        if not math.isfinite(e):
            raise FloatingPointError(f"non-finite attitude coefficients at pass {it}")
        errors.append(e)
        b = b_new
        if is_settled(e, b, cfg.tol):
            converged = True
            break
    return ChebSeries(b, t_n), LoopStats(it, converged, tuple(errors))


def naive_velpos_iterate(
    v0: ArrayLike,
    p0: ArrayLike,
    q_series: ChebSeries,
    f_series: ChebSeries,
    w_e: ArrayLike,
    cfg: IterationConfig,
    gravity: GravityFn = gravity_e,
) -> tuple[ChebSeries, ChebSeries, LoopStats, LoopStats]:
    """
    Velocity/position Picard iteration by direct expansion.

    The transformed specific force is expanded as the full triple product
    ``q o f o q*``; gravity is sampled at the roots of degree ``m_v`` and
    transformed to coefficients. Position integrates the previous pass's
    velocity.
    """
    mq, mv, mp = q_series.max_degree, cfg.m_v, cfg.m_p
    t_n = q_series.t_span
    b = q_series.coeffs
    d = qa.as_quat(f_series.coeffs)
    E3 = _triple_expansion(mq, f_series.max_degree)
    bd = qa.quat_mul(b[:, None, :], d[None, :, :])
    triple = qa.quat_mul(bd[:, :, None, :], qa.conj(b)[None, None, :, :])[..., 1:]
    sf_integrand = np.einsum("rijk,ijkd->rd", E3, triple)
    raw = max(sf_integrand.shape[0], mv + 1)
    sf_integrand = _pad(sf_integrand, raw)

    wx = qa.skew(w_e)
    roots_f = cheb_vander(cheb_roots(mv), mp)
    s = np.zeros((mv + 1, 3))
    s[0] = v0
    rho = np.zeros((mp + 1, 3))
    rho[0] = p0
    eta0, sig0 = s.copy(), rho.copy()
    ev, ep = [], []
    v_done = p_done = False
    for it in range(1, cfg.max_iters + 1):
        try:
            g = gravity(roots_f @ rho)
        except ValueError as exc:
            raise FloatingPointError(f"gravity evaluation failed at pass {it}: {exc}") from exc
        integrand = sf_integrand.copy()
        integrand[: mv + 1] += -2.0 * s @ wx.T + coeffs_from_samples(g, mv)
        s_new = eta0 + (t_n / 2.0) * _integrate(integrand, mv + 1)
        rho_new = sig0 + (t_n / 2.0) * _integrate(s, mp + 1)
        ev.append(rms_coeff_delta(s, s_new))
        ep.append(rms_coeff_delta(rho, rho_new))
        if not (math.isfinite(ev[-1]) and math.isfinite(ep[-1])):
            raise FloatingPointError(f"non-finite velocity/position coefficients at pass {it}")
        s, rho = s_new, rho_new
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


def naive_step(
    state: NavState,
    batch: ImuBatch,
    cfg: IterationConfig,
    w_e: ArrayLike | None = None,
    gravity: GravityFn = gravity_e,
) -> tuple[NavState, IntervalSolution]:
    """Same interface as :func:`chebnav.navcore.step`, computed by the naive expansion."""
    w_e = earth_rate_e() if w_e is None else np.asarray(w_e, dtype=float)
    w_series, f_series = fit_increments(batch, cfg.n_w, cfg.n_f)
    q_series, att = naive_attitude_iterate(state.q, w_series, w_e, cfg)
    v_series, p_series, vel, pos = naive_velpos_iterate(
        state.v_e, state.p_e, q_series, f_series, w_e, cfg, gravity=gravity
    )
    q_end = q_series.coeffs.sum(axis=0)
    if cfg.renormalize:
        q_end = q_end / np.linalg.norm(q_end)
    new_state = NavState(
        state.t + batch.t_span, q_end, v_series.coeffs.sum(axis=0), p_series.coeffs.sum(axis=0)
    )
    return new_state, IntervalSolution(q_series, v_series, p_series, att, vel, pos)


def two_sample_step(
    state: NavState,
    batch: ImuBatch,
    w_e: ArrayLike | None = None,
    gravity: GravityFn = gravity_e,
) -> NavState:
    """
    Classical two-sample ECEF update, applied to consecutive sample pairs.

    Per pair (cycle time ``h = 2 dt``):

    * rotation vector ``dphi = dth1 + dth2 + 2/3 dth1 x dth2``;
      ``q <- quat(-w_e h) o q o quat(dphi)``
    * body velocity increment ``dv + 1/2 dth x dv + 2/3 (dth1 x dv2 + dv1 x dth2)``,
      rotated to ECEF with the start-of-cycle attitude less the earth-rotation
      term ``1/2 h w_e x (C dv_b)``
    * gravity and Coriolis evaluated at the predicted cycle midpoint
    * trapezoidal position update
    """
    if batch.n_samples % 2:
        raise ValueError("two-sample update needs an even number of samples")
    w_e = earth_rate_e() if w_e is None else np.asarray(w_e, dtype=float)
    h = 2.0 * batch.dt
    q_earth = qa.quat_from_rotvec(-w_e * h)
    q, v, p = state.q, state.v_e, state.p_e
    for k in range(0, batch.n_samples, 2):
        th1, th2 = batch.dtheta[k], batch.dtheta[k + 1]
        dv1, dv2 = batch.dv[k], batch.dv[k + 1]
        dth = th1 + th2
        dvb = dv1 + dv2
        dvb = dvb + 0.5 * np.cross(dth, dvb) + (2.0 / 3.0) * (np.cross(th1, dv2) + np.cross(dv1, th2))
        dv_sf = qa.quat_to_dcm(q) @ dvb
        dv_sf = dv_sf - 0.5 * h * np.cross(w_e, dv_sf)

        p_mid = p + 0.5 * h * v
        g_mid = gravity(p_mid)
        v_mid = v + 0.5 * (dv_sf + h * (g_mid - 2.0 * np.cross(w_e, v)))
        v_new = v + dv_sf + h * (g_mid - 2.0 * np.cross(w_e, v_mid))
        p = p + 0.5 * h * (v + v_new)
        v = v_new

        dphi = dth + (2.0 / 3.0) * np.cross(th1, th2)
        q = qa.quat_mul(qa.quat_mul(q_earth, q), qa.quat_from_rotvec(dphi))
        q = q / np.linalg.norm(q)
    return NavState(state.t + batch.t_span, q, v, p)

"""
Trajectories with closed-form ground truth and the IMU increments they produce.

The body moves relative to a local North-Up-East frame frozen at the initial
position. Its attitude is ``q(t) = q_en0 o q_nb0 o q_motion(t)``. Translation
is a displacement resolved in that frame. Everything the navigator consumes
(body angular rate, specific force) follows analytically from the kinematic
equations. Increments integrate those rates with Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import quatalgebra as qa
from .earthmodel import cne, earth_rate_e, gravity_e, lla2ecef
from .imufit import ImuBatch
from .navcore import NavState

KINDS = ("static", "constant_rate", "coning", "coning_plus_translation")
GL_ORDER = 10
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)


@dataclass(frozen=True)
class ScenarioSpec:
    """
    Scenario parameters. Angles in radians, frequencies in Hz.

    ``translation_dir`` and ``velocity_n`` are North-Up-East vectors; the
    initial attitude ``(yaw, pitch, roll)`` is applied as
    ``Rot_up(yaw) o Rot_east(pitch) o Rot_north(roll)`` on top of a body
    frame aligned with North-Up-East.
    """

    kind: str = "coning"
    half_angle: float = math.radians(1.0)
    coning_freq: float = 1.0
    spin_axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    spin_rate: float = 1.0
    lon: float = 0.0
    lat: float = math.radians(45.0)
    height: float = 100.0
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0
    velocity_n: tuple[float, float, float] = (0.0, 0.0, 0.0)
    accel_amplitude: float = 10.0
    translation_freq: float | None = None
    translation_dir: tuple[float, float, float] = (1.0, 0.0, 1.0)
    duration: float = 600.0
    sample_rate: float = 100.0
    include_earth_rate: bool = True

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}; expected one of {KINDS}")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.sample_rate > 2.0 * self.coning_freq:
            raise ValueError("sample_rate must exceed twice the coning frequency")
        if not 0.0 <= self.half_angle <= math.pi / 4:
            raise ValueError("coning half-angle must lie in [0, pi/4]")
        if self.kind == "coning_plus_translation" and self.motion_freq <= 0:
            raise ValueError("translation frequency must be positive")

    @property
    def motion_freq(self) -> float:
        return self.coning_freq if self.translation_freq is None else self.translation_freq

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))


def attitude_from_euler(yaw: float, pitch: float, roll: float) -> NDArray[np.float64]:
    """Body-to-NUE quaternion for yaw about Up, pitch about East, roll about North."""
    up, east, north = np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])
    return qa.quat_mul(
        qa.quat_mul(qa.quat_from_rotvec(yaw * up), qa.quat_from_rotvec(pitch * east)),
        qa.quat_from_rotvec(roll * north),
    )


@dataclass(frozen=True)
class TruthSampler:
    """Closed-form truth for a :class:`ScenarioSpec`; all methods take time arrays."""

    spec: ScenarioSpec
    w_e: NDArray[np.float64] = field(init=False)

    def __post_init__(self) -> None:
        w_e = earth_rate_e() if self.spec.include_earth_rate else np.zeros(3)
        w_e.flags.writeable = False
        object.__setattr__(self, "w_e", w_e)

    @cached_property
    def _frame(self):
        s = self.spec
        lla0 = np.array([s.lon, s.lat, s.height])
        C_ne = cne(lla0)
        q_c = qa.quat_mul(qa.dcm_to_quat(C_ne), attitude_from_euler(s.yaw, s.pitch, s.roll))
        # Undo the motion's own starting rotation so the configured attitude
        # holds at t = 0; a constant left factor leaves the body rate unchanged.
        q_m0, _ = self._motion(np.zeros(1))
        q_c = qa.quat_mul(q_c, qa.conj(q_m0[0]))
        return lla2ecef(lla0), C_ne, q_c

    def _motion(self, t: NDArray[np.float64]):
        """Body rotation relative to the frozen frame and its body-frame rate."""
        s = self.spec
        if s.kind == "static":
            q = np.tile(qa.IDENTITY, (t.size, 1))
            return q, np.zeros((t.size, 3))
        if s.kind == "constant_rate":
            axis = np.asarray(s.spin_axis, dtype=float)
            axis = axis / np.linalg.norm(axis)
            q = qa.quat_from_rotvec(s.spin_rate * t[:, None] * axis)
            return q, np.tile(s.spin_rate * axis, (t.size, 1))
        om = 2.0 * np.pi * s.coning_freq
        ca, sa = math.cos(s.half_angle / 2), math.sin(s.half_angle / 2)
        c, sn = np.cos(om * t), np.sin(om * t)
        z = np.zeros_like(t)
        q = np.stack([np.full_like(t, ca), sa * c, sa * sn, z], axis=-1)
        qdot = np.stack([z, -sa * om * sn, sa * om * c, z], axis=-1)
        # w = 2 q* o qdot
        w = 2.0 * qa.quat_mul(qa.conj(q), qdot)[:, 1:]
        return q, w

    def _translation(self, t: NDArray[np.float64]):
        """Displacement, velocity and acceleration in the frozen NUE frame."""
        s = self.spec
        v0 = np.asarray(s.velocity_n, dtype=float)
        r = t[:, None] * v0
        v = np.tile(v0, (t.size, 1))
        a = np.zeros((t.size, 3))
        if s.kind == "coning_plus_translation":
            u = np.asarray(s.translation_dir, dtype=float)
            u = u / np.linalg.norm(u)
            om = 2.0 * np.pi * s.motion_freq
            A = s.accel_amplitude
            r = r + (A / om**2) * (1.0 - np.cos(om * t))[:, None] * u
            v = v + (A / om) * np.sin(om * t)[:, None] * u
            a = a + A * np.cos(om * t)[:, None] * u
        return r, v, a

    def states(self, t: ArrayLike):
        """Arrays ``q (K,4)``, ``v_e (K,3)``, ``p_e (K,3)`` at times ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        p0, C_ne, q_c = self._frame
        q_m, _ = self._motion(t)
        r, v, _ = self._translation(t)
        return qa.quat_mul(q_c, q_m), v @ C_ne.T, p0 + r @ C_ne.T

    def displacement(self, t0: float, t: ArrayLike) -> NDArray[np.float64]:
        """
        ECEF position change from ``t0`` to ``t``.

        Formed from the closed-form differences directly, so it keeps full
        relative precision where ``p_e(t) - p_e(t0)`` would lose it to the
        Earth radius.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s = self.spec
        _, C_ne, _ = self._frame
        d = (t - t0)[:, None] * np.asarray(s.velocity_n, dtype=float)
        if s.kind == "coning_plus_translation":
            u = np.asarray(s.translation_dir, dtype=float)
            u = u / np.linalg.norm(u)
            om = 2.0 * np.pi * s.motion_freq
            # cos(a) - cos(b) = -2 sin((a+b)/2) sin((a-b)/2)
            dc = 2.0 * np.sin(om * (t + t0) / 2) * np.sin(om * (t - t0) / 2)
            d = d + (s.accel_amplitude / om**2) * dc[:, None] * u
        return d @ C_ne.T

    def state(self, t: float) -> NavState:
        q, v, p = self.states([t])
        return NavState(t, q[0], v[0], p[0])

    def body_rates(self, t: ArrayLike):
        """Gyro angular rate ``w_ib^b`` and specific force ``f^b`` at times ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        p0, C_ne, q_c = self._frame
        q_m, w_m = self._motion(t)
        r, v, a = self._translation(t)
        q = qa.quat_mul(q_c, q_m)
        v_e, a_e, p_e = v @ C_ne.T, a @ C_ne.T, p0 + r @ C_ne.T
        q_inv = qa.conj(q)
        w_ib = w_m + qa.rotate(q_inv, np.broadcast_to(self.w_e, v_e.shape))
        f_e = a_e + 2.0 * np.cross(self.w_e, v_e) - gravity_e(p_e)
        return w_ib, qa.rotate(q_inv, f_e)


def build_truth(spec: ScenarioSpec) -> TruthSampler:
    return TruthSampler(spec)


def generate_increments(truth: TruthSampler, t0: float, n: int, dt: float, chunk: int = 4096):
    """
    Angular and velocity increments over ``n`` consecutive periods from ``t0``.

    Returns ``(t_end, dtheta, dv)`` with shapes ``(n,)``, ``(n, 3)``, ``(n, 3)``.
    """
    k = np.arange(n)
    t_end = t0 + (k + 1) * dt
    dtheta = np.empty((n, 3))
    dv = np.empty((n, 3))
    half = 0.5 * dt
    for lo in range(0, n, chunk):
        mid = t0 + (k[lo : lo + chunk] + 0.5) * dt
        tq = (mid[:, None] + half * _GL_NODES[None, :]).ravel()
        w, f = truth.body_rates(tq)
        m = mid.size
        dtheta[lo : lo + m] = half * np.einsum("j,kjd->kd", _GL_WEIGHTS, w.reshape(m, GL_ORDER, 3))
        dv[lo : lo + m] = half * np.einsum("j,kjd->kd", _GL_WEIGHTS, f.reshape(m, GL_ORDER, 3))
    return t_end, dtheta, dv


def sample_increments(truth: TruthSampler, t0: float, N: int, dt: float) -> ImuBatch:
    """One batch of ``N`` increments starting at ``t0``."""
    if t0 < 0 or t0 + N * dt > truth.spec.duration * (1 + 1e-12):
        raise ValueError("requested samples fall outside the scenario duration")
    _, dth, dv = generate_increments(truth, t0, N, dt)
    return ImuBatch(dt, dth, dv)

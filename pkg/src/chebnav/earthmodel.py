"""
WGS-84 earth model: rotation rate, normal gravity and frame conversions.

Geodetic positions are ordered ``[longitude, latitude, height]`` (rad, rad, m)
and the local navigation frame is North-Up-East.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray


@dataclass(frozen=True)
class EarthConstants:
    a: float = 6378137.0
    inv_f: float = 298.257223563
    omega: float = 7.292115e-5
    gm: float = 3.986004418e14
    gamma_e: float = 9.7803253359
    gamma_p: float = 9.8321849378

    @cached_property
    def f(self) -> float:
        return 1.0 / self.inv_f

    @cached_property
    def b(self) -> float:
        return self.a * (1.0 - self.f)

    @cached_property
    def e2(self) -> float:
        return self.f * (2.0 - self.f)

    @cached_property
    def ep2(self) -> float:
        """Second eccentricity squared."""
        return self.e2 / (1.0 - self.e2)

    @cached_property
    def somigliana_k(self) -> float:
        return self.b * self.gamma_p / (self.a * self.gamma_e) - 1.0

    @cached_property
    def m(self) -> float:
        """omega^2 a^2 b / GM."""
        return self.omega**2 * self.a * self.a * self.b / self.gm


WGS84 = EarthConstants()

# Two steps already reach the rounding floor (about 4e-9 m round trip) for
# heights from -5 km to 100 km; one step leaves about 1e-4 m.
_BOWRING_ITERS = 2
_POLAR_RHO2 = 1.0  # m^2


def earth_rate_e(const: EarthConstants = WGS84) -> NDArray[np.float64]:
    """Earth rotation vector in ECEF, ``[0, 0, omega]``."""
    return np.array([0.0, 0.0, const.omega])


def lla2ecef(g: ArrayLike, const: EarthConstants = WGS84) -> NDArray[np.float64]:
    """ECEF position of geodetic ``[lon, lat, h]`` (broadcasts over leading axes)."""
    g = np.asarray(g, dtype=float)
    lon, lat, h = g[..., 0], g[..., 1], g[..., 2]
    sl, cl = np.sin(lat), np.cos(lat)
    rn = const.a / np.sqrt(1.0 - const.e2 * sl * sl)
    return np.stack(
        [
            (rn + h) * cl * np.cos(lon),
            (rn + h) * cl * np.sin(lon),
            (rn * (1.0 - const.e2) + h) * sl,
        ],
        axis=-1,
    )


def _bowring(rho, z, const):
    """
    Bowring's iteration for geodetic latitude, run a fixed number of steps.

    The parametric latitude is carried as ``t = tan(beta)``, which keeps each
    step free of trigonometric calls. Returns the unnormalized direction
    ``(num, den)`` with ``tan(lat) = num / den``.
    """
    a, b, e2, ep2 = const.a, const.b, const.e2, const.ep2
    ba = b / a
    t = z / (ba * rho)
    for _ in range(_BOWRING_ITERS):
        t2 = t * t
        # (1 + t^2)^(3/2) scales sin^3(beta) and cos^3(beta) to t^3 and 1
        c = (1.0 + t2) * np.sqrt(1.0 + t2)
        num = z * c + (ep2 * b) * (t * t2)
        den = rho * c - e2 * a
        t = ba * num / den
    return num, den


def _geodetic(p, const):
    """Longitude terms, latitude sine/cosine and height, plus the polar mask."""
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    rho2 = x * x + y * y
    if (rho2 + z * z <= 1e10).any():
        raise ValueError("position too close to the geocenter for geodetic conversion")
    rho = np.sqrt(rho2)
    polar = rho2 < _POLAR_RHO2
    any_polar = bool(polar.any())
    if any_polar:
        rho_safe = np.where(polar, 1.0, rho)
        num, den = _bowring(rho_safe, z, const)
        num = np.where(polar, np.copysign(1.0, z), num)
        den = np.where(polar, 0.0, den)
        co, so = np.where(polar, 1.0, x / rho_safe), np.where(polar, 0.0, y / rho_safe)
    else:
        num, den = _bowring(rho, z, const)
        co, so = x / rho, y / rho
    r = np.hypot(num, den)
    sl, cl = num / r, den / r
    h = rho * cl + z * sl - const.a * np.sqrt(1.0 - const.e2 * sl * sl)
    if any_polar:
        h = np.where(polar, np.abs(z) - const.b, h)
    return co, so, sl, cl, h, polar


def ecef2lla(p: ArrayLike, const: EarthConstants = WGS84) -> NDArray[np.float64]:
    """
    Geodetic ``[lon, lat, h]`` of an ECEF position.

    Points within 1 m of the polar axis take the polar branch
    (``lat = +-pi/2``, ``lon = 0``).
    """
    co, so, sl, cl, h, _ = _geodetic(np.asarray(p, dtype=float), const)
    return np.stack([np.arctan2(so, co), np.arctan2(sl, cl), h], axis=-1)


def cne(g: ArrayLike) -> NDArray[np.float64]:
    """Rotation from North-Up-East axes to ECEF; columns are the N, U, E unit vectors."""
    g = np.asarray(g, dtype=float)
    lon, lat = g[..., 0], g[..., 1]
    sl, cl = np.sin(lat), np.cos(lat)
    so, co = np.sin(lon), np.cos(lon)
    z = np.zeros_like(sl)
    return np.stack(
        [
            np.stack([-sl * co, cl * co, -so], axis=-1),
            np.stack([-sl * so, cl * so, co], axis=-1),
            np.stack([cl, sl, z], axis=-1),
        ],
        axis=-2,
    )


def _gamma(s2, h, const):
    a, f = const.a, const.f
    gamma0 = const.gamma_e * (1.0 + const.somigliana_k * s2) / np.sqrt(1.0 - const.e2 * s2)
    return gamma0 * (1.0 - 2.0 * h / a * (1.0 + f + const.m - 2.0 * f * s2) + 3.0 * h * h / (a * a))


def normal_gravity(lat: ArrayLike, h: ArrayLike, const: EarthConstants = WGS84) -> NDArray[np.float64]:
    """
    Magnitude of WGS-84 normal gravity.

    Somigliana's closed form on the ellipsoid, times the second-order
    free-air factor ``1 - 2h/a (1 + f + m - 2 f sin^2 L) + 3 h^2 / a^2``
    with ``m = omega^2 a^2 b / GM``.
    """
    lat = np.asarray(lat, dtype=float)
    return _gamma(np.sin(lat) ** 2, np.asarray(h, dtype=float), const)


def gravity_n(g: ArrayLike, const: EarthConstants = WGS84) -> NDArray[np.float64]:
    """Gravity in North-Up-East: ``[0, -gamma, 0]``."""
    g = np.asarray(g, dtype=float)
    gamma = normal_gravity(g[..., 1], g[..., 2], const)
    z = np.zeros_like(gamma)
    return np.stack([z, -gamma, z], axis=-1)


def gravity_e(p: ArrayLike, const: EarthConstants = WGS84) -> NDArray[np.float64]:
    """Normal gravity at ECEF position(s) ``p``, resolved in ECEF."""
    p = np.asarray(p, dtype=float)
    co, so, sl, cl, h, _ = _geodetic(p, const)
    gamma = _gamma(sl * sl, h, const)
    gc = gamma * cl
    out = np.empty(p.shape)
    out[..., 0] = -gc * co
    out[..., 1] = -gc * so
    out[..., 2] = -gamma * sl
    return out


def zero_gravity(p: ArrayLike) -> NDArray[np.float64]:
    """Gravity stand-in returning zeros; used to isolate kinematics in tests."""
    return np.zeros_like(np.asarray(p, dtype=float))

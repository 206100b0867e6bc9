"""Shared generators for the test suite."""

from __future__ import annotations

import mpmath as mp
import numpy as np

from chebnav import earthmodel as em
from chebnav import quatalgebra as qa
from chebnav.chebkernel import ChebSeries, cheb_roots, coeffs_from_samples

T_N = 0.08
FIT_DEGREE = 7


def smooth_series(
    rng: np.random.Generator, bound: float, *, t_span: float = T_N, fmax: float = 1.0, tones: int = 3
) -> ChebSeries:
    """
    Random band-limited vector series of degree 7.

    A random offset plus a few sinusoids below ``fmax`` Hz, sampled at the
    degree-7 roots and transformed. The peak norm over the roots is scaled
    to a uniform fraction in [0.1, 1] of ``bound``.
    """
    t = t_span * (1.0 + cheb_roots(FIT_DEGREE)) / 2.0
    vals = np.tile(rng.uniform(-1, 1, 3), (FIT_DEGREE + 1, 1))
    for _ in range(tones):
        freq = rng.uniform(0.0, fmax)
        phase = rng.uniform(0.0, 2 * np.pi, 3)
        amp = rng.uniform(-1, 1, 3)
        vals = vals + amp * np.sin(2 * np.pi * freq * t[:, None] + phase)
    vals *= rng.uniform(0.1, 1.0) * bound / np.max(np.linalg.norm(vals, axis=1))
    return ChebSeries(coeffs_from_samples(vals, FIT_DEGREE), t_span)


def random_terrestrial_state(rng: np.random.Generator):
    """Random unit quaternion, ECEF velocity (~100 m/s) and near-surface ECEF position."""
    q0 = qa.normalize(rng.normal(size=4))
    lla = [rng.uniform(-3, 3), rng.uniform(-1.4, 1.4), rng.uniform(0, 1e4)]
    return q0, rng.normal(size=3) * 100.0, em.lla2ecef(lla)


def random_unit_quat(rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    shape = (4,) if n is None else (n, 4)
    return qa.normalize(rng.normal(size=shape))


def somigliana(lat, h=0.0):
    """Normal gravity by Somigliana's closed form, in 40-digit arithmetic."""
    with mp.workdps(40):
        a, b = mp.mpf("6378137"), mp.mpf("6378137") * (1 - mp.mpf(1) / mp.mpf("298.257223563"))
        ge, gp = mp.mpf("9.7803253359"), mp.mpf("9.8321849378")
        c2, s2 = mp.cos(lat) ** 2, mp.sin(lat) ** 2
        g0 = (a * ge * c2 + b * gp * s2) / mp.sqrt(a * a * c2 + b * b * s2)
        f = 1 - b / a
        m = mp.mpf("7.292115e-5") ** 2 * a * a * b / mp.mpf("3.986004418e14")
        free_air = 1 - 2 * h / a * (1 + f + m - 2 * f * s2) + 3 * mp.mpf(h) ** 2 / a**2
        return float(g0 * free_air)

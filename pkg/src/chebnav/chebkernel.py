"""
Chebyshev polynomial primitives and constant spectral operators.

All series live on tau in [-1, 1]; a physical interval of length ``t_span``
maps onto it through ``t = t_span * (1 + tau) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class ChebSeries:
    """
    Vector- or quaternion-valued Chebyshev series.

    Parameters
    ----------
    coeffs : ndarray, shape (M+1, d)
        Row ``i`` holds the coefficient vector of ``F_i(tau)``.
    t_span : float
        Physical length of the interval the series covers, in seconds.
    """

    coeffs: NDArray[np.float64]
    t_span: float = 1.0

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError(f"coeffs must be a (M+1, d) table, got shape {c.shape}")
        if not np.isfinite(c).all():
            raise ValueError("coeffs contain non-finite entries")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def max_degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    def __call__(self, tau: ArrayLike) -> NDArray[np.float64]:
        return cheb_eval(self, tau)

    def at_time(self, t: ArrayLike) -> NDArray[np.float64]:
        """Evaluate at physical time(s) ``t`` measured from the interval start."""
        return cheb_eval(self, 2.0 * np.asarray(t, dtype=float) / self.t_span - 1.0)


def cheb_roots(M: int) -> NDArray[np.float64]:
    """Chebyshev-roots points ``cos((k + 1/2) pi / (M + 1))``, strictly decreasing."""
    if M < 0:
        raise ValueError("M must be non-negative")
    k = np.arange(M + 1)
    return np.cos((k + 0.5) * np.pi / (M + 1))


def cheb_poly(i: int, tau: ArrayLike) -> NDArray[np.float64]:
    """F_i(tau) by the three-term recurrence."""
    tau = np.asarray(tau, dtype=float)
    f_prev, f = np.ones_like(tau), tau.copy()
    if i == 0:
        return f_prev
    for _ in range(i - 1):
        f_prev, f = f, 2.0 * tau * f - f_prev
    return f


def cheb_poly_trig(i: int, tau: ArrayLike) -> NDArray[np.float64]:
    """F_i(tau) = cos(i arccos tau)."""
    return np.cos(i * np.arccos(np.clip(np.asarray(tau, dtype=float), -1.0, 1.0)))


def cheb_vander(tau: ArrayLike, M: int) -> NDArray[np.float64]:
    """Matrix with entry ``[k, j] = F_j(tau_k)`` for ``j = 0..M``."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    V = np.empty((tau.size, M + 1))
    V[:, 0] = 1.0
    if M >= 1:
        V[:, 1] = tau
    for j in range(2, M + 1):
        V[:, j] = 2.0 * tau * V[:, j - 1] - V[:, j - 2]
    return V


def _check_domain(tau: NDArray[np.float64]) -> None:
    if (np.abs(tau) > 1.0 + _DOMAIN_SLACK).any():
        raise ValueError("tau outside [-1, 1]")


def cheb_eval(series: ChebSeries, tau: ArrayLike) -> NDArray[np.float64]:
    """
    Evaluate a series with Clenshaw's backward recurrence.

    Returns shape ``(d,)`` for scalar ``tau`` and ``(K, d)`` for ``K`` points.
    """
    tau_arr = np.asarray(tau, dtype=float)
    _check_domain(tau_arr)
    c = series.coeffs
    t = tau_arr[..., None]
    b1 = np.zeros(tau_arr.shape + (c.shape[1],))
    b2 = np.zeros_like(b1)
    for row in c[:0:-1]:
        b1, b2 = 2.0 * t * b1 - b2 + row, b1
    return t * b1 - b2 + c[0]


def cheb_defint(i: int, a: float, b: float) -> float:
    """Definite integral of F_i over [a, b]."""
    if i == 1:
        return (b * b - a * a) / 2.0

    def antideriv(x: float) -> float:
        return (i * cheb_poly(i + 1, x) - (i + 1) * x * cheb_poly(i, x)) / (i * i - 1)

    return float(antideriv(b) - antideriv(a))


def cheb_indefint_coeffs(i: int, M: int) -> NDArray[np.float64]:
    """Chebyshev coefficients (length M+2) of tau -> integral of F_i from -1 to tau."""
    if not 0 <= i <= M:
        raise ValueError("need 0 <= i <= M")
    out = np.zeros(M + 2)
    if i == 0:
        out[0] = out[1] = 1.0
    elif i == 1:
        out[0] = -0.25
        out[2] = 0.25
    else:
        out[i + 1] += 1.0 / (2 * (i + 1))
        out[i - 1] -= 1.0 / (2 * (i - 1))
        out[0] += (-1.0) ** (i + 1) / (i * i - 1)
    return out


def integration_matrix(M: int, rows: int | None = None) -> NDArray[np.float64]:
    """
    Map from coefficients (degree <= M) to coefficients of the antiderivative
    from -1, keeping ``rows`` output rows (default M+2, i.e. no truncation).
    """
    rows = M + 2 if rows is None else rows
    full = np.column_stack([cheb_indefint_coeffs(i, M) for i in range(M + 1)])
    if rows <= M + 2:
        return full[:rows]
    return np.vstack([full, np.zeros((rows - M - 2, M + 1))])


@dataclass(frozen=True)
class SpectralOperators:
    """
    Constant matrices of the Chebyshev-Picard update for a fixed degree ``M``.

    ``Cs`` maps integrand samples at the roots to antiderivative coefficients
    (up to the ``2/(M+1)`` transform scale); ``Cd`` does the same for a
    coefficient table.
    """

    M: int
    roots: NDArray[np.float64]
    F: NDArray[np.float64]
    Z: NDArray[np.float64]
    U: NDArray[np.float64]
    D: NDArray[np.float64]
    Cs: NDArray[np.float64]
    Cd: NDArray[np.float64]
    transform: NDArray[np.float64]


def _d_matrix(M: int) -> NDArray[np.float64]:
    D = np.zeros((M + 1, M + 1))
    D[0, 0] = 1.0
    D[0, 1] = -0.25
    for j in range(2, M + 1):
        D[0, j] = (-1.0) ** (j + 1) / (j * j - 1)
    D[1, 0] = 2.0
    D[1, 2] = -1.0
    for r in range(2, M + 1):
        D[r, r - 1] = 1.0
        if r + 1 <= M:
            D[r, r + 1] = -1.0
    return D


@lru_cache(maxsize=None)
def build_operators(M: int) -> SpectralOperators:
    """Build (and cache) the spectral operators for maximum degree ``M >= 2``."""
    if M < 2:
        raise ValueError("maximum degree must be at least 2")
    roots = cheb_roots(M)
    F = cheb_vander(roots, M)
    Z = np.diag([0.5] + [1.0] * M)
    U = np.diag([1.0] + [1.0 / (2 * i) for i in range(1, M + 1)])
    D = _d_matrix(M)
    Cd = U @ D
    Cs = Cd @ Z @ F.T
    transform = (2.0 / (M + 1)) * Z @ F.T
    mats = dict(roots=roots, F=F, Z=Z, U=U, D=D, Cs=Cs, Cd=Cd, transform=transform)
    for m in mats.values():
        m.flags.writeable = False
    return SpectralOperators(M=M, **mats)


def coeffs_from_samples(values: ArrayLike, M: int) -> NDArray[np.float64]:
    """Discrete Chebyshev transform of samples taken at ``cheb_roots(M)``."""
    values = np.asarray(values, dtype=float)
    if M >= 2:
        return build_operators(M).transform @ values
    # degrees 0 and 1 have no operator set; build the transform directly
    F = cheb_vander(cheb_roots(M), M)
    Z = np.diag([0.5] + [1.0] * M)
    return (2.0 / (M + 1)) * Z @ F.T @ values


def samples_from_coeffs(coeffs: ArrayLike, M: int) -> NDArray[np.float64]:
    """Values of a degree-``M`` coefficient table at ``cheb_roots(M)``."""
    return cheb_vander(cheb_roots(M), M) @ np.asarray(coeffs, dtype=float)


@lru_cache(maxsize=None)
def root_vander(M: int, degree: int) -> NDArray[np.float64]:
    """Cached ``cheb_vander(cheb_roots(M), degree)`` for evaluating other series at the roots."""
    V = cheb_vander(cheb_roots(M), degree)
    V.flags.writeable = False
    return V

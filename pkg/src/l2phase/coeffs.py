"""L2 discretization coefficients of the Caputo derivative.

All coefficients are dimensionless (the time step is scaled out). Index ``j``
starts at 1; ``j = 0`` is rejected.

The closed forms are differences of powers of ``j`` and ``j + 1`` and lose
roughly ``log10(j**2)`` digits when evaluated literally. Here they are
evaluated through equivalent cancellation-free rearrangements:

* first differences ``(j+1)**beta - j**beta`` via ``expm1``/``log1p``;
* the second difference ``kappa`` and the coefficient ``c_j`` (a trapezoid
  defect that is ``O(j**(-1-alpha))`` while its terms are ``O(j**(2-alpha))``)
  via their binomial series in ``1/j`` for ``j >= SERIES_FROM``.

The literal evaluation is kept as :func:`coeff_abc_naive` for comparison.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from numpy.polynomial.legendre import leggauss
from scipy.special import binom

__all__ = [
    "SERIES_FROM",
    "CoeffTable",
    "as_alpha",
    "build_coeff_table",
    "coeff_abc",
    "coeff_abc_naive",
    "coeff_d",
    "coeff_d_from_abc",
    "coeff_integral_check",
    "coeff_r1",
    "kappa",
]

# Series in x = 1/j are used from this index on; x <= 1/4 so the truncated
# terms below are far under double precision.
SERIES_FROM = 4
_KAPPA_TERMS = 24
_C_TERMS = 48


def as_alpha(alpha) -> float:
    """Validate a fractional order and return it as a float."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha!r}")
    return alpha


def _as_index(j, lowest=1):
    arr = np.asarray(j)
    if arr.dtype.kind not in "iu":
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("coefficient index must be an integer")
    if np.any(arr < lowest):
        raise ValueError(f"coefficient index must be >= {lowest}, got {j!r}")
    return arr.astype(float)


def _scalar_or_array(out, j):
    return float(out) if np.ndim(j) == 0 else out


def _pow_diff(j, beta):
    """(j+1)**beta - j**beta for j >= 1, relative accuracy ~ machine epsilon."""
    return j**beta * np.expm1(beta * np.log1p(1.0 / j))


def kappa(j, beta):
    """Second central difference (j+1)**beta - 2 j**beta + (j-1)**beta.

    ``j`` may be an integer or an integer array (``j >= 1``). For ``j = 1``
    the term ``0**beta`` must be finite, so ``beta > 0`` is required there.
    """
    jf = _as_index(j)
    beta = float(beta)
    if beta <= 0 and np.any(jf == 1):
        raise ValueError("kappa(1, beta) is undefined for beta <= 0")
    jf = np.atleast_1d(jf)
    out = np.empty_like(jf)
    small = jf < SERIES_FROM
    js = jf[small]
    out[small] = (js + 1) ** beta - 2 * js**beta + (js - 1) ** beta
    jl = jf[~small]
    if jl.size:
        # 2 j^beta sum_m binom(beta, 2m) j^(-2m)
        m = np.arange(0, _KAPPA_TERMS + 1)
        coef = np.where(m > 0, binom(beta, 2 * m), 0.0)
        out[~small] = 2 * jl**beta * P.polyval(jl**-2.0, coef)
    return _scalar_or_array(out[0] if np.ndim(j) == 0 else out, j)


def _c_series_coefficients(alpha):
    # (1+x)^(2-a) - 1 - (2-a)/2 * x * ((1+x)^(1-a) + 1) = sum_{m>=3} e_m x^m
    m = np.arange(0, _C_TERMS + 1)
    e = binom(2 - alpha, m) - 0.5 * (2 - alpha) * np.where(m >= 1, binom(1 - alpha, m - 1), 0.0)
    e[:3] = 0.0
    return e


def _coeff_c(alpha, jf):
    jf = np.atleast_1d(jf)
    out = np.empty_like(jf)
    small = jf < SERIES_FROM
    js = jf[small]
    out[small] = (
        -0.5 * (2 - alpha) * ((js + 1) ** (1 - alpha) + js ** (1 - alpha))
        + (js + 1) ** (2 - alpha)
        - js ** (2 - alpha)
    )
    jl = jf[~small]
    if jl.size:
        out[~small] = jl ** (2 - alpha) * P.polyval(1.0 / jl, _c_series_coefficients(alpha))
    return out


def _abc(alpha, jf):
    c = _coeff_c(alpha, jf)
    # c_j - a_j = (2 - alpha) ((j+1)^(1-alpha) - j^(1-alpha)) exactly
    a = c - (2 - alpha) * _pow_diff(np.atleast_1d(jf), 1 - alpha)
    b = -(a + c)
    return a, b, c


def coeff_abc(alpha, j):
    """Return ``(a_j, b_j, c_j)``; ``j`` may be a scalar or an integer array."""
    alpha = as_alpha(alpha)
    jf = _as_index(j)
    a, b, c = _abc(alpha, jf)
    if np.ndim(j) == 0:
        return float(a[0]), float(b[0]), float(c[0])
    return a, b, c


def coeff_abc_naive(alpha, j):
    """Literal evaluation of the closed forms (loses ~log10(j**2) digits)."""
    alpha = as_alpha(alpha)
    jf = _as_index(j)
    p1, q1 = (jf + 1) ** (1 - alpha), jf ** (1 - alpha)
    p2, q2 = (jf + 1) ** (2 - alpha), jf ** (2 - alpha)
    a = -1.5 * (2 - alpha) * p1 + 0.5 * (2 - alpha) * q1 + p2 - q2
    b = 2 * (2 - alpha) * p1 - 2 * p2 + 2 * q2
    c = -0.5 * (2 - alpha) * (p1 + q1) + p2 - q2
    return a, b, c


def _d_first(alpha):
    return (1 + alpha / 2) * 2 ** (1 - alpha) - 1.5 * alpha


def coeff_d(alpha, j):
    """d_j from its kappa closed form (``j >= 2``) and the explicit ``d_1``."""
    alpha = as_alpha(alpha)
    jf = np.atleast_1d(_as_index(j))
    out = np.full_like(jf, _d_first(alpha))
    rest = jf >= 2
    if np.any(rest):
        jr = jf[rest].astype(int)
        out[rest] = -(1 - alpha / 2) * kappa(jr, 1 - alpha) + kappa(jr, 2 - alpha)
    return _scalar_or_array(out[0] if np.ndim(j) == 0 else out, j)


def coeff_d_from_abc(alpha, j):
    """d_j through ``d_1 = c_1 + 2 - 2 alpha`` and ``d_j = c_j - a_{j-1}``."""
    alpha = as_alpha(alpha)
    jf = np.atleast_1d(_as_index(j))
    c = _coeff_c(alpha, jf)
    out = c + 2 - 2 * alpha
    rest = jf >= 2
    if np.any(rest):
        a_prev, _, _ = _abc(alpha, jf[rest] - 1)
        out[rest] = c[rest] - a_prev
    return _scalar_or_array(out[0] if np.ndim(j) == 0 else out, j)


def coeff_r1(alpha) -> float:
    alpha = as_alpha(alpha)
    return 2 - alpha - _d_first(alpha)


def coeff_integral_check(alpha, j, quad_points=64):
    """Recompute ``(a_j, c_j)`` from their integral representations.

    Gauss-Legendre quadrature on ``[0, 1]`` of

        a_j = (2-alpha)(1-alpha)/2 * int (2s - 3) (j + 1 - s)**(-alpha) ds
        c_j = (2-alpha)(1-alpha)/2 * int (2s - 1) (j + 1 - s)**(-alpha) ds

    This is an oracle independent of the closed forms; the integrands are
    analytic on the interval so the rule converges geometrically.
    """
    alpha = as_alpha(alpha)
    if int(quad_points) < 16:
        raise ValueError("quad_points must be >= 16")
    jf = float(_as_index(j))
    x, w = leggauss(int(quad_points))
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    kernel = (jf + 1.0 - s) ** (-alpha)
    pref = 0.5 * (2 - alpha) * (1 - alpha)
    a = pref * np.sum(w * (2 * s - 3) * kernel)
    c = pref * np.sum(w * (2 * s - 1) * kernel)
    return float(a), float(c)


@dataclass(frozen=True)
class CoeffTable:
    """Tabulated coefficients for one ``alpha``.

    The arrays are 1-based: ``table.a[j]`` is ``a_j`` for ``1 <= j <= n_max``
    and entry 0 is NaN. Arrays are read-only.
    """

    alpha: float
    n_max: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    r1: float

    def require(self, n):
        if n > self.n_max:
            raise ValueError(f"coefficient table holds j <= {self.n_max}, index {n} requested")


def build_coeff_table(alpha, n_max) -> CoeffTable:
    alpha = as_alpha(alpha)
    n_max = int(n_max)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    j = np.arange(1, n_max + 1)
    a, b, c = _abc(alpha, j.astype(float))
    d = coeff_d(alpha, j)
    arrays = []
    for v in (a, b, c, d):
        full = np.concatenate(([np.nan], np.asarray(v, dtype=float)))
        full.flags.writeable = False
        arrays.append(full)
    return CoeffTable(alpha, n_max, *arrays, r1=coeff_r1(alpha))

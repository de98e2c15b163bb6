"""Initial data and the manufactured solution used by the worked examples."""
from __future__ import annotations

import math

import numpy as np

from .caputo import caputo_reference
from .coeffs import as_alpha
from .spectral import Grid2D, ModelSpec

__all__ = [
    "SEVEN_CIRCLES",
    "init_seven_circles",
    "init_uniform_random",
    "manufacture_source",
    "manufactured_solution",
]

_PI = math.pi

# (x_i, y_i, r_i)
SEVEN_CIRCLES = (
    (_PI / 2, _PI / 2, _PI / 5),
    (_PI / 4, 3 * _PI / 4, 2 * _PI / 15),
    (_PI / 2, 5 * _PI / 4, 2 * _PI / 15),
    (_PI, _PI / 4, _PI / 10),
    (3 * _PI / 2, _PI / 4, _PI / 10),
    (_PI, _PI, _PI / 4),
    (3 * _PI / 2, 3 * _PI / 2, _PI / 4),
)


def _is_box(grid, lo, hi):
    return all(
        math.isclose(v, ref, abs_tol=1e-12)
        for v, ref in ((grid.x0, lo), (grid.y0, lo), (grid.lx, hi - lo), (grid.ly, hi - lo))
    )


def _bump(s, epsilon):
    out = np.zeros_like(s)
    inside = s < 0
    out[inside] = 2.0 * np.exp(-(epsilon**2) / s[inside] ** 2)
    return out


def init_seven_circles(grid: Grid2D, epsilon):
    """-1 plus seven smooth bumps of height < 2 inside the listed circles."""
    if not _is_box(grid, 0.0, 2 * _PI):
        raise ValueError("seven-circle data is defined on [0, 2pi]^2")
    x, y = grid.coords
    u = -np.ones(grid.shape)
    for xc, yc, r in SEVEN_CIRCLES:
        u += _bump(np.hypot(x - xc, y - yc) - r, epsilon)
    return u


def init_uniform_random(grid: Grid2D, lo, hi, seed):
    if not lo < hi:
        raise ValueError("need lo < hi")
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=grid.shape)


def _check_manufactured(model, grid):
    if model.model != "AC":
        raise ValueError("the manufactured solution is defined for the Allen-Cahn model")
    if not _is_box(grid, -_PI, _PI):
        raise ValueError("the manufactured solution lives on [-pi, pi]^2")


def manufactured_solution(grid: Grid2D, t):
    x, y = grid.coords
    return 0.2 * t**5 * np.sin(x) * np.cos(y)


def manufacture_source(alpha, model: ModelSpec, grid: Grid2D, t):
    """Source s with u = 0.2 t^5 sin(x) cos(y) solving the forced fractional AC equation.

    s = d^alpha u - eps^2 Lap u - u + u^3, evaluated analytically.
    """
    alpha = as_alpha(alpha)
    _check_manufactured(model, grid)
    x, y = grid.coords
    shape = np.sin(x) * np.cos(y)
    u = 0.2 * t**5 * shape
    dau = 0.2 * caputo_reference(5, alpha, t) * shape
    return dau + 2 * model.epsilon**2 * u - u + u**3

"""Periodic 2D Fourier pseudo-spectral workspace.

Fields are plain ``(nx, ny)`` float arrays sampled at ``x0 + i*lx/nx``,
``y0 + j*ly/ny``; spectral fields are the matching ``numpy.fft.rfft2``
coefficient arrays of shape ``(nx, ny//2 + 1)``.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid2D",
    "ModelSpec",
    "read_snapshot",
    "solve_helmholtz",
    "write_field_csv",
    "write_snapshot",
]

SNAPSHOT_MAGIC = b"FPF1"
# magic, nx, ny, reserved, step, time -> 32 bytes
_HEADER = struct.Struct("<4sIIIqd")


def _is_pow2(n):
    return n >= 2 and n & (n - 1) == 0


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    lx: float = 2 * math.pi
    ly: float = 2 * math.pi
    x0: float = 0.0
    y0: float = 0.0
    dealias: bool = False

    def __post_init__(self):
        if not (_is_pow2(self.nx) and _is_pow2(self.ny)):
            raise ValueError(f"grid sizes must be powers of two, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain lengths must be positive")

    @classmethod
    def square(cls, n, domain="0-2pi", **kw):
        """``domain`` is ``"0-2pi"`` for [0, 2pi]^2 or ``"pm-pi"`` for [-pi, pi]^2."""
        if domain == "0-2pi":
            return cls(n, n, **kw)
        if domain == "pm-pi":
            return cls(n, n, x0=-math.pi, y0=-math.pi, **kw)
        raise ValueError(f"unknown domain {domain!r}")

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def spectral_shape(self):
        return (self.nx, self.ny // 2 + 1)

    @property
    def cell_area(self):
        return self.lx * self.ly / (self.nx * self.ny)

    @property
    def area(self):
        return self.lx * self.ly

    @cached_property
    def coords(self):
        x = self.x0 + self.lx * np.arange(self.nx) / self.nx
        y = self.y0 + self.ly * np.arange(self.ny) / self.ny
        return np.meshgrid(x, y, indexing="ij")

    @cached_property
    def k2(self):
        kx = 2 * np.pi / self.lx * np.fft.fftfreq(self.nx, 1.0 / self.nx)
        ky = 2 * np.pi / self.ly * np.fft.rfftfreq(self.ny, 1.0 / self.ny)
        return kx[:, None] ** 2 + ky[None, :] ** 2

    @cached_property
    def dealias_mask(self):
        kx = np.abs(np.fft.fftfreq(self.nx, 1.0 / self.nx))
        ky = np.fft.rfftfreq(self.ny, 1.0 / self.ny)
        return (kx[:, None] < self.nx / 3) & (ky[None, :] < self.ny / 3)

    def forward(self, u):
        u = np.asarray(u)
        if u.shape != self.shape:
            raise ValueError(f"field shape {u.shape} does not match grid {self.shape}")
        return np.fft.rfft2(u)

    def inverse(self, uh):
        uh = np.asarray(uh)
        if uh.shape != self.spectral_shape:
            raise ValueError(f"spectral shape {uh.shape} does not match {self.spectral_shape}")
        return np.fft.irfft2(uh, s=self.shape)

    def laplacian(self, uh):
        return -self.k2 * uh

    def truncate(self, uh):
        """Apply the 2/3-rule when dealiasing is enabled, otherwise identity."""
        return uh * self.dealias_mask if self.dealias else uh

    def integrate(self, u):
        """Rectangle rule, exact for resolvable trigonometric polynomials."""
        return float(np.sum(u) * self.cell_area)

    def inner(self, u, v):
        return float(np.vdot(u, v).real * self.cell_area)

    def mean(self, u):
        return float(np.mean(u))


@dataclass(frozen=True)
class ModelSpec:
    """Phase-field model with mobility G and linear operator L = -eps^2 Laplacian.

    Allen-Cahn uses G = -1 and Cahn-Hilliard G = Laplacian.
    """

    model: str
    epsilon: float

    def __post_init__(self):
        if self.model not in ("AC", "CH"):
            raise ValueError(f"model must be 'AC' or 'CH', got {self.model!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def apply_G(self, grid, uh):
        return -uh if self.model == "AC" else -grid.k2 * uh

    def apply_L(self, grid, uh):
        return self.epsilon**2 * grid.k2 * uh

    def symbol(self, grid):
        """Fourier symbol of -G L."""
        e2 = self.epsilon**2
        return e2 * grid.k2 if self.model == "AC" else e2 * grid.k2**2


def solve_helmholtz(grid: Grid2D, rhs_hat, c0, model: ModelSpec):
    """Solve ``(c0 I - G L) u = rhs`` mode by mode."""
    if not c0 > 0:
        raise ValueError("c0 must be positive")
    return rhs_hat / (c0 + model.symbol(grid))


def write_snapshot(path, u, step, t):
    u = np.ascontiguousarray(u, dtype="<f8")
    if u.ndim != 2:
        raise ValueError("snapshot field must be 2D")
    nx, ny = u.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, nx, ny, 0, int(step), float(t)))
        fh.write(u.tobytes(order="C"))


def read_snapshot(path):
    """Return ``(u, step, t)`` from a snapshot file."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError("truncated snapshot header")
        magic, nx, ny, _, step, t = _HEADER.unpack(head)
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"bad snapshot magic {magic!r}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != nx * ny:
        raise ValueError(f"snapshot payload has {data.size} values, expected {nx * ny}")
    return data.reshape(nx, ny).astype(float), step, t


def write_field_csv(path, grid: Grid2D, u):
    x, y = grid.coords
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "u"])
        for xi, yi, ui in zip(x.ravel(), y.ravel(), np.asarray(u).ravel()):
            w.writerow([repr(float(xi)), repr(float(yi)), repr(float(ui))])

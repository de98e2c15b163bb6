"""Classical and modified energies and the discrete fractional energy law."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coeffs import CoeffTable, as_alpha
from .spectral import Grid2D, ModelSpec

__all__ = [
    "EnergyTrace",
    "classical_energy",
    "rewritten_energy_residuals",
    "double_well",
    "double_well_prime",
    "dt_restriction",
    "energy_trace",
    "fractional_energy_sums",
    "modified_energy",
    "quadratic_energy",
]


def double_well(u):
    return 0.25 * (1.0 - u * u) ** 2


def double_well_prime(u):
    return u * u * u - u


def quadratic_energy(grid: Grid2D, model: ModelSpec, u):
    """<u, L u> with L = -eps^2 Laplacian applied spectrally."""
    Lu = grid.inverse(model.apply_L(grid, grid.forward(u)))
    return grid.inner(u, Lu)


def classical_energy(u, grid: Grid2D, model: ModelSpec):
    """E(u) = int eps^2/2 |grad u|^2 + F(u), F(u) = (1 - u^2)^2 / 4."""
    return 0.5 * quadratic_energy(grid, model, u) + grid.integrate(double_well(u))


def modified_energy(u_n, u_nm1, r_n, r_nm1, grid: Grid2D, model: ModelSpec):
    """SAV Lyapunov functional built from two consecutive levels."""
    w = 2 * u_n - u_nm1
    quad = quadratic_energy(grid, model, u_n) + quadratic_energy(grid, model, w)
    return 0.25 * quad + 0.5 * (r_n**2 + (2 * r_n - r_nm1) ** 2)


def fractional_energy_sums(energies, table: CoeffTable, dt):
    """For n = 1..N return sum_{k=1}^n d_{n-k+1} (E^k - E^{k-1}) / dt."""
    E = np.asarray(energies, dtype=float)
    if E.ndim != 1 or E.size < 2:
        raise ValueError("need at least two energies E^0, E^1")
    N = E.size - 1
    table.require(N)
    DkE = np.diff(E) / dt
    return np.convolve(table.d[1 : N + 1], DkE)[:N]


def rewritten_energy_residuals(energies, table: CoeffTable):
    """d_1 E^n - d_n E^0 - sum_{k<n} (d_{n-k} - d_{n-k+1}) E^k for n = 1..N.

    Algebraically this equals ``dt * fractional_energy_sums(...)``; the
    rewritten form is the one used to pass from the fractional law to
    boundedness by the initial energy.
    """
    E = np.asarray(energies, dtype=float)
    N = E.size - 1
    table.require(N + 1)
    d = table.d
    out = np.empty(N)
    for n in range(1, N + 1):
        k = np.arange(1, n)
        out[n - 1] = d[1] * E[n] - d[n] * E[0] - np.sum((d[n - k] - d[n - k + 1]) * E[k])
    return out


def dt_restriction(alpha, l0):
    """Largest time step satisfying dt^alpha <= 5 alpha / (168 Gamma(3-alpha) (3 L0 - 1))."""
    alpha = as_alpha(alpha)
    if not l0 >= 1:
        raise ValueError("the max-norm bound L0 must be >= 1")
    bound = 5 * alpha / (168 * math.gamma(3 - alpha) * (3 * l0 - 1))
    return bound ** (1 / alpha)


@dataclass
class EnergyTrace:
    t: np.ndarray
    E: np.ndarray
    E_mod: np.ndarray | None
    DkE: np.ndarray
    frac_sum: np.ndarray
    monotone_classical: bool
    bounded_by_initial: bool
    frac_law_ok: bool
    modified_bounded: bool | None

    def rows(self):
        """Rows ``(n, t, E, E_mod, DkE, frac_sum)``; entries undefined at n=0 are None."""
        for n in range(self.E.size):
            yield (
                n,
                float(self.t[n]),
                float(self.E[n]),
                None if self.E_mod is None else float(self.E_mod[n]),
                None if n == 0 else float(self.DkE[n - 1]),
                None if n == 0 else float(self.frac_sum[n - 1]),
            )


def energy_slack(values):
    return 1e-10 * (1.0 + float(np.max(np.abs(values))))


def energy_trace(t, energies, table: CoeffTable, dt, modified=None):
    """Summarize an energy history with the tolerance policy 1e-10 (1 + max|E|)."""
    E = np.asarray(energies, dtype=float)
    DkE = np.diff(E) / dt
    frac = fractional_energy_sums(E, table, dt)
    tol = energy_slack(E)
    # frac sums carry the 1/dt of DkE and the size of the d weights
    frac_tol = tol * float(np.sum(table.d[1 : E.size])) / dt
    mod_ok = None
    E_mod = None
    if modified is not None:
        E_mod = np.asarray(modified, dtype=float)
        mod_ok = bool(np.all(E_mod <= E_mod[0] + energy_slack(E_mod)))
    return EnergyTrace(
        t=np.asarray(t, dtype=float),
        E=E,
        E_mod=E_mod,
        DkE=DkE,
        frac_sum=frac,
        monotone_classical=bool(np.all(np.diff(E) <= tol)),
        bounded_by_initial=bool(np.all(E <= E[0] + tol)),
        frac_law_ok=bool(np.all(frac <= frac_tol)),
        modified_bounded=mod_ok,
    )

"""L2 time-steppers: the SAV scheme (AC and CH) and the implicit-explicit
Adams-Bashforth-type scheme (AC).

Both schemes keep the solution history as rfft2 coefficients; the L2
history sum is taken coefficient-wise and every implicit solve is a single
division by the symbol of ``c0 I - G L``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .caputo import History, TimeGrid, l2_split
from .coeffs import CoeffTable, build_coeff_table
from .config import RunConfig
from .energy import (
    EnergyTrace,
    classical_energy,
    double_well,
    double_well_prime,
    dt_restriction,
    energy_trace,
    modified_energy,
)
from .initial import (
    init_seven_circles,
    init_uniform_random,
    manufacture_source,
    manufactured_solution,
)
from .spectral import Grid2D, ModelSpec, solve_helmholtz

__all__ = [
    "ImexState",
    "RunResult",
    "SavState",
    "SchemeError",
    "StepReport",
    "imex_startup",
    "imex_step",
    "initial_field",
    "new_imex_state",
    "new_sav_state",
    "run",
    "sav_first_step",
    "sav_step",
]

PIVOT_TOL = 1e-12

Source = Callable[[float], np.ndarray]


class SchemeError(RuntimeError):
    def __init__(self, msg, step=None):
        super().__init__(msg if step is None else f"step {step}: {msg}")
        self.step = step


@dataclass
class SavState:
    space: Grid2D
    u_history: History
    r_history: list
    c0_shift: float = 1.0
    source: Optional[Source] = None


@dataclass
class ImexState:
    space: Grid2D
    u_history: History
    l_inf_bound_observed: float = 0.0
    source: Optional[Source] = None
    ghosts: bool = False
    _force_cache: dict = field(default_factory=dict, repr=False)


@dataclass
class StepReport:
    step: int
    t: float
    energy: float
    modified_energy: Optional[float]
    max_norm: float
    mean: float
    wall_time: float
    dt_restriction_ok: Optional[bool] = None


def _radicand(space, u, c0_shift):
    return space.integrate(double_well(u)) + c0_shift


def new_sav_state(space: Grid2D, u0, capacity, c0_shift=1.0, source=None) -> SavState:
    u0 = np.asarray(u0, dtype=float)
    rad = _radicand(space, u0, c0_shift)
    if not rad > 0:
        raise SchemeError("E1(u0) + c0_shift must be positive", step=0)
    hist = History(capacity, space.spectral_shape, complex)
    hist.append(space.forward(u0))
    return SavState(space, hist, [math.sqrt(rad)], float(c0_shift), source)


def _source_hat(space, source, t):
    return 0.0 if source is None else space.forward(source(t))


def _sav_update(state, table, grid, model, n, u_nm2_hat, r_nm2):
    """Advance the SAV scheme to level n given the (possibly ghost) level n-2."""
    space = state.space
    u_nm1_hat = state.u_history[n - 1]
    r_nm1 = state.r_history[n - 1]
    u_nm1 = space.inverse(u_nm1_hat)
    u_nm2 = space.inverse(u_nm2_hat)

    ubar = 2 * u_nm1 - u_nm2
    rad = _radicand(space, ubar, state.c0_shift)
    if not rad > 0:
        raise SchemeError(f"negative radicand {rad:g} in the auxiliary variable", step=n)
    b = double_well_prime(ubar) / math.sqrt(rad)
    b_hat = space.truncate(space.forward(b))

    c0, known = l2_split(state.u_history, table, grid.dt, n)
    # (c0 - G L) u^n = -known + s^n + r^n G b  =>  u^n = u1 + r^n u2
    u1_hat = solve_helmholtz(space, -known + _source_hat(space, state.source, grid.t(n)), c0, model)
    u2_hat = solve_helmholtz(space, model.apply_G(space, b_hat), c0, model)
    u1, u2 = space.inverse(u1_hat), space.inverse(u2_hat)

    pivot = 3.0 - 1.5 * space.inner(b, u2)
    if abs(pivot) < PIVOT_TOL:
        raise SchemeError(f"singular auxiliary-variable equation (alpha={table.alpha})", step=n)
    rhs = 4 * r_nm1 - r_nm2 + 0.5 * space.inner(b, 3 * u1 - 4 * u_nm1 + u_nm2)
    r_n = rhs / pivot

    u_hat = u1_hat + r_n * u2_hat
    state.u_history.append(u_hat)
    state.r_history.append(r_n)
    return u1 + r_n * u2, r_n


def sav_first_step(state: SavState, table: CoeffTable, grid: TimeGrid, model: ModelSpec):
    """Level 1 with the ghost convention u^{-1} = u^0, r^{-1} = r^0."""
    if len(state.u_history) != 1:
        raise SchemeError("first step needs a history holding only u^0", step=1)
    return _sav_update(state, table, grid, model, 1, state.u_history[0], state.r_history[0])


def sav_step(state: SavState, table: CoeffTable, grid: TimeGrid, model: ModelSpec, n):
    """Compute (u^n, r^n) for n >= 2 and append them to the state."""
    if n < 2:
        raise SchemeError("use sav_first_step for n = 1", step=n)
    if len(state.u_history) != n:
        raise SchemeError(f"history holds {len(state.u_history)} levels, expected {n}", step=n)
    return _sav_update(state, table, grid, model, n, state.u_history[n - 2], state.r_history[n - 2])


def new_imex_state(space: Grid2D, u0, capacity, source=None) -> ImexState:
    u0 = np.asarray(u0, dtype=float)
    hist = History(capacity, space.spectral_shape, complex)
    hist.append(space.forward(u0))
    return ImexState(space, hist, float(np.max(np.abs(u0))), source)


def imex_startup(state: ImexState):
    """Install the ghost levels u^{-1} = u^{-2} = u^0."""
    if len(state.u_history) != 1:
        raise SchemeError("startup needs a history holding only u^0", step=0)
    state.ghosts = True


def _force_hat(state, m):
    """rfft2 of f(u^m) = (u^m)^3 - u^m, with ghost levels mapped to u^0."""
    m = max(m, 0)
    cache = state._force_cache
    if m not in cache:
        u = state.space.inverse(state.u_history[m])
        cache[m] = state.space.truncate(state.space.forward(double_well_prime(u)))
        for old in [k for k in cache if k < m - 3]:
            del cache[old]
    return cache[m]


def imex_step(state: ImexState, table: CoeffTable, grid: TimeGrid, model: ModelSpec, n):
    """Compute u^n from L_n u = eps^2 Lap u^n - 3 f(u^{n-1}) + 3 f(u^{n-2}) - f(u^{n-3}) (+ s^n)."""
    if model.model != "AC":
        raise ValueError("the implicit-explicit L2 scheme is defined for the Allen-Cahn model")
    if not state.ghosts:
        raise SchemeError("call imex_startup before stepping", step=n)
    if len(state.u_history) != n:
        raise SchemeError(f"history holds {len(state.u_history)} levels, expected {n}", step=n)
    space = state.space
    c0, known = l2_split(state.u_history, table, grid.dt, n)
    force = -3 * _force_hat(state, n - 1) + 3 * _force_hat(state, n - 2) - _force_hat(state, n - 3)
    rhs = -known + force + _source_hat(space, state.source, grid.t(n))
    u_hat = solve_helmholtz(space, rhs, c0, model)
    state.u_history.append(u_hat)
    u = space.inverse(u_hat)
    state.l_inf_bound_observed = max(state.l_inf_bound_observed, float(np.max(np.abs(u))))
    return u


def initial_field(config: RunConfig, space: Grid2D):
    init = config.initial
    kind = init["kind"]
    if kind == "zero":
        return np.zeros(space.shape)
    if kind == "constant":
        return np.full(space.shape, float(init["value"]))
    if kind == "seven_circles":
        return init_seven_circles(space, config.epsilon)
    if kind == "uniform_random":
        return init_uniform_random(space, init.get("lo", -0.5), init.get("hi", 0.5), init.get("seed", 0))
    if kind == "manufactured":
        return manufactured_solution(space, 0.0)
    raise ValueError(f"unknown initial condition {kind!r}")


@dataclass
class RunResult:
    config: RunConfig
    space: Grid2D
    table: CoeffTable
    reports: list
    u_final: np.ndarray
    u_history: History
    r_history: Optional[list]
    snapshots: list
    trace: EnergyTrace

    @property
    def energies(self):
        return np.array([r.energy for r in self.reports])


def _snapshot_steps(n_steps, count):
    if count <= 0:
        return set()
    stride = max(1, n_steps // count)
    return set(range(0, n_steps + 1, stride)) | {n_steps}


def run(config: RunConfig, on_step: Optional[Callable[[StepReport], None]] = None) -> RunResult:
    """Execute one simulation; deterministic for a fixed config."""
    space = config.space()
    model = config.model_spec()
    n_steps = config.n_steps
    grid = TimeGrid(config.dt, n_steps)
    table = build_coeff_table(config.alpha, max(n_steps, 2))
    u0 = initial_field(config, space)
    source = None
    if config.initial["kind"] == "manufactured":
        source = lambda t: manufacture_source(config.alpha, model, space, t)  # noqa: E731

    snap_at = _snapshot_steps(n_steps, config.snapshots)
    snapshots = []
    reports = []

    def record(n, u, e_mod, dt_ok, t0):
        rep = StepReport(
            step=n,
            t=grid.t(n),
            energy=classical_energy(u, space, model),
            modified_energy=e_mod,
            max_norm=float(np.max(np.abs(u))),
            mean=space.mean(u),
            wall_time=time.perf_counter() - t0,
            dt_restriction_ok=dt_ok,
        )
        reports.append(rep)
        if n in snap_at:
            snapshots.append((n, grid.t(n), u.copy()))
        if on_step is not None:
            on_step(rep)

    t0 = time.perf_counter()
    if config.scheme == "SAV":
        state = new_sav_state(space, u0, n_steps + 1, config.c0_shift, source)
        r0 = state.r_history[0]
        record(0, u0, modified_energy(u0, u0, r0, r0, space, model), None, t0)
        u_prev = u0
        for n in range(1, n_steps + 1):
            t0 = time.perf_counter()
            if n == 1:
                u, r = sav_first_step(state, table, grid, model)
            else:
                u, r = sav_step(state, table, grid, model, n)
            e_mod = modified_energy(u, u_prev, r, state.r_history[n - 1], space, model)
            record(n, u, e_mod, None, t0)
            u_prev = u
        r_hist = state.r_history
    else:
        state = new_imex_state(space, u0, n_steps + 1, source)
        imex_startup(state)
        record(0, u0, None, None, t0)
        u = u0
        for n in range(1, n_steps + 1):
            t0 = time.perf_counter()
            u = imex_step(state, table, grid, model, n)
            l0 = max(1.0, state.l_inf_bound_observed)
            record(n, u, None, bool(grid.dt <= dt_restriction(config.alpha, l0)), t0)
        r_hist = None

    E = [r.energy for r in reports]
    E_mod = None if config.scheme == "IMEX" else [r.modified_energy for r in reports]
    trace = energy_trace([r.t for r in reports], E, table, grid.dt, modified=E_mod)
    return RunResult(config, space, table, reports, u, state.u_history, r_hist, snapshots, trace)

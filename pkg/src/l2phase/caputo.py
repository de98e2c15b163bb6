"""The L2 discrete Caputo operator on a uniform time grid."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coeffs import CoeffTable, as_alpha

__all__ = [
    "History",
    "TimeGrid",
    "caputo_reference",
    "l2_apply",
    "l2_apply_reformulated",
    "l2_split",
    "l2_weights",
]


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if int(self.n_steps) < 1:
            raise ValueError("n_steps must be >= 1")

    @classmethod
    def from_final(cls, t_final, n_steps):
        return cls(float(t_final) / int(n_steps), int(n_steps))

    @property
    def t_final(self):
        return self.dt * self.n_steps

    def t(self, k):
        return k * self.dt


class History:
    """Append-only store of states u^0, u^1, ... (scalars or arrays).

    States are kept in one preallocated array so that history sums are a
    single ``tensordot``.
    """

    def __init__(self, capacity, shape=(), dtype=float):
        self.capacity = int(capacity)
        self.shape = tuple(shape)
        self._data = np.zeros((self.capacity,) + self.shape, dtype=dtype)
        self._len = 0

    @classmethod
    def from_states(cls, states, capacity=None, dtype=None):
        states = [np.asarray(s) for s in states]
        if dtype is None:
            dtype = np.result_type(*states, float)
        h = cls(capacity or len(states), states[0].shape, dtype)
        for s in states:
            h.append(s)
        return h

    def append(self, state):
        state = np.asarray(state)
        if state.shape != self.shape:
            raise ValueError(f"state shape {state.shape} does not match history shape {self.shape}")
        if self._len >= self.capacity:
            raise ValueError("history capacity exhausted")
        self._data[self._len] = state
        self._len += 1

    def __len__(self):
        return self._len

    def __getitem__(self, k):
        if isinstance(k, slice):
            return self.view()[k]
        if not -self._len <= k < self._len:
            raise IndexError(k)
        return self._data[k % self._len] if k < 0 else self._data[k]

    def view(self):
        """Read-only view of the stored states, shape ``(len, *shape)``."""
        v = self._data[: self._len]
        v.flags.writeable = False
        return v


def l2_weights(table: CoeffTable, dt, k):
    """Weights ``w`` with ``L_k u = sum_m w[m] u^m`` (m = 0..k), prefactor included."""
    k = int(k)
    if k < 1:
        raise ValueError("L2 operator is defined for k >= 1")
    alpha = table.alpha
    if k == 1:
        s = 1.0 / (math.gamma(2 - alpha) * dt**alpha)
        return np.array([-s, s])
    table.require(k - 1)
    w = np.zeros(k + 1)
    # sum_{j=1}^{k-1} a_j u^{k-j-1} + b_j u^{k-j} + c_j u^{k-j+1}
    rev = slice(k - 1, 0, -1)  # j = k-1, ..., 1
    w[0 : k - 1] += table.a[rev]
    w[1:k] += table.b[rev]
    w[2 : k + 1] += table.c[rev]
    w[k - 2] += alpha / 2
    w[k - 1] += -2.0
    w[k] += (4 - alpha) / 2
    return w / (math.gamma(3 - alpha) * dt**alpha)


def _check_history(history, k, need):
    if k < 1:
        raise ValueError("L2 operator is defined for k >= 1")
    if len(history) < need:
        raise ValueError(f"history holds {len(history)} states, {need} needed for k={k}")


def _states(history):
    return history.view() if isinstance(history, History) else np.asarray(history)


def l2_apply(history, table: CoeffTable, grid: TimeGrid, k):
    """L_k^alpha u from the nodal form (weights on u^0..u^k)."""
    k = int(k)
    _check_history(history, k, k + 1)
    if k > grid.n_steps:
        raise ValueError(f"k={k} exceeds the time grid ({grid.n_steps} steps)")
    u = _states(history)[: k + 1]
    return np.tensordot(l2_weights(table, grid.dt, k), u, axes=1)


def l2_split(history, table: CoeffTable, dt, k):
    """Split L_k u into ``(c0, known)`` with ``L_k u = c0 u^k + known``.

    ``history`` holds u^0..u^{k-1}; this is the form the implicit schemes need.
    """
    k = int(k)
    _check_history(history, k, k)
    w = l2_weights(table, dt, k)
    u = _states(history)[:k]
    return w[k], np.tensordot(w[:k], u, axes=1)


def l2_apply_reformulated(history, table: CoeffTable, grid: TimeGrid, k):
    """L_k^alpha u from the difference-quotient form with d_j and r_1."""
    k = int(k)
    _check_history(history, k, k + 1)
    if k > grid.n_steps:
        raise ValueError(f"k={k} exceeds the time grid ({grid.n_steps} steps)")
    table.require(k)
    alpha, dt = table.alpha, grid.dt
    u = _states(history)[: k + 1]
    D = np.diff(u, axis=0) / dt  # D[j-1] = D_j u
    scale = dt ** (1 - alpha) / math.gamma(3 - alpha)
    if k == 1:
        return scale * (table.r1 + table.d[1]) * D[0]
    # sum_{j=1}^k d_j D_{k-j+1}: pairs d_1..d_k with D_k..D_1
    conv = np.tensordot(table.d[1 : k + 1], D[::-1], axes=1)
    val = 1.5 * alpha * D[k - 1] - 0.5 * alpha * D[k - 2] + conv - table.c[k] * D[0]
    return scale * val


def caputo_reference(p, alpha, t):
    """Exact Caputo derivative of t**p for integer p >= 0."""
    alpha = as_alpha(alpha)
    p = int(p)
    if p < 0:
        raise ValueError("p must be a non-negative integer")
    t = np.asarray(t, dtype=float)
    if p == 0:
        out = np.zeros_like(t)
    else:
        out = math.gamma(p + 1) / math.gamma(p + 1 - alpha) * t ** (p - alpha)
    return float(out) if out.ndim == 0 else out

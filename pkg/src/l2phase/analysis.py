"""Quadratic-form matrices of the L2 operator and their numerical certificates.

Matrices act on ``psi = [D_1 u, ..., D_n u]`` (backward difference
quotients) with the common factor ``dt^{1-alpha} / Gamma(3-alpha)`` removed.
Indices in docstrings are 1-based; arrays are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .caputo import l2_weights
from .coeffs import CoeffTable, as_alpha, build_coeff_table, kappa

__all__ = [
    "AnalysisReport",
    "CholeskyCheck",
    "QuadFormMatrices",
    "analyze",
    "build_conjugate_S",
    "build_bdf_matrices",
    "build_dweighted_matrices",
    "check_cholesky_conditions",
    "conjugate_S_entries",
    "eval_Q",
    "bdf_blocks",
    "lnn_check",
    "min_symmetric_eigenvalue",
    "operator_matrix",
    "operator_matrix_from_weights",
    "operator_quadform_matrix",
    "q_sign_sweep",
    "quadform_lower_bound_check",
    "sweep",
]

CHOLESKY_TOL = 1e-12
QUADFORM_SLACK = 1e-10
Q_SLACK = 1e-12


@dataclass(frozen=True)
class QuadFormMatrices:
    alpha: float
    n: int
    A: np.ndarray
    B: np.ndarray
    C: Optional[np.ndarray] = None

    @property
    def total(self):
        return self.A + self.B + (0 if self.C is None else self.C)


def _check_n(table: CoeffTable, n, lowest=2):
    n = int(n)
    if n < lowest:
        raise ValueError(f"n must be >= {lowest}, got {n}")
    table.require(n)
    return n


def _bidiagonal(n, diag0, diag, sub):
    M = np.diag(np.full(n, float(diag)))
    M[0, 0] = diag0
    M[np.arange(1, n), np.arange(n - 1)] = sub
    return M


def build_bdf_matrices(table: CoeffTable, n) -> QuadFormMatrices:
    """The A, B, C split as displayed for the weighted sum with test ``3 D_k - D_{k-1}``.

    The first column of A uses ``-3 a_i + a_{i+1}`` and the last row
    ``-3 a_n``, ``3 d_k``, ``5 d_1 / 2`` exactly as written.
    """
    n = _check_n(table, n)
    a, d, alpha = table.a, table.d, table.alpha
    A = np.zeros((n, n))
    I, J = np.tril_indices(n, -1)
    i, j = I + 1, J + 1
    k = i - j + 1
    interior = i < n
    nxt = np.minimum(k + 1, n)  # d_{k+1} is only read for interior rows
    A[I, J] = np.where(interior, 3 * d[k] - d[nxt], 3 * d[k])
    first = J == 0
    A[I[first], 0] = np.where(interior[first], -3 * a[i[first]] + a[np.minimum(i[first] + 1, n)], -3 * a[n])
    A[np.arange(n), np.arange(n)] = 0.5 * (3 * d[1] - d[2])
    A[0, 0] = 0.5 * (3 * d[1] + a[2])
    A[-1, -1] = 2.5 * d[1]

    B = _bidiagonal(n, 0.5 * (3 * d[1] + a[2]), 0.5 * (3 * d[1] - d[2]), -d[1])
    B[-1, -1] = 0.5 * d[1]
    C = _bidiagonal(n, table.r1, 1.5 * alpha, -0.5 * alpha)
    return QuadFormMatrices(alpha, n, A, B, C)


def _reversed_d(table, n):
    return table.d[n:0:-1].copy()


def build_dweighted_matrices(table: CoeffTable, n) -> QuadFormMatrices:
    """A = diag(d_n..d_1) L and B = diag(d_n..d_1) R for the d-weighted sum."""
    n = _check_n(table, n)
    a, d, alpha = table.a, table.d, table.alpha
    I, J = np.tril_indices(n, -1)
    L = np.zeros((n, n))
    L[I, J] = d[I - J + 1]
    L[1:, 0] = -a[1:n]
    L[np.arange(n), np.arange(n)] = d[1]
    R = _bidiagonal(n, table.r1, 1.5 * alpha, -0.5 * alpha)
    w = _reversed_d(table, n)[:, None]
    return QuadFormMatrices(alpha, n, w * L, w * R)


def build_conjugate_S(table: CoeffTable, n):
    """S = P (A + A^T) P^T with P anti-diagonal, ``P[i, n-1-i] = 1 / d_{i+1}``."""
    n = _check_n(table, n)
    A = build_dweighted_matrices(table, n).A
    P = np.zeros((n, n))
    P[np.arange(n), np.arange(n)[::-1]] = 1.0 / table.d[1 : n + 1]
    return P @ (A + A.T) @ P.T


def conjugate_S_entries(table: CoeffTable, n):
    """S from its piecewise entry formula, mirrored into the upper triangle."""
    n = _check_n(table, n)
    a, d = table.a, table.d
    I, J = np.tril_indices(n, -1)
    i, j = I + 1, J + 1
    S = np.zeros((n, n))
    S[I, J] = np.where(i == n, -a[np.maximum(n - j, 1)] / d[n], d[i - j + 1] / d[i])
    S[np.arange(n), np.arange(n)] = 2 * d[1] / d[1 : n + 1]
    return np.tril(S) + np.tril(S, -1).T


def operator_matrix(table: CoeffTable, n):
    """W with ``(W psi)_k`` the reformulated ``L_k u`` (scale removed) for ``u^0 = 0``."""
    n = _check_n(table, n, lowest=1)
    alpha, d, c = table.alpha, table.d, table.c
    W = np.zeros((n, n))
    W[0, 0] = table.r1 + d[1]
    for k in range(2, n + 1):
        W[k - 1, k - 1] += 1.5 * alpha
        W[k - 1, k - 2] -= 0.5 * alpha
        W[k - 1, k - 1 :: -1] += d[1 : k + 1]
        W[k - 1, 0] -= c[k]
    return W


def operator_matrix_from_weights(table: CoeffTable, n):
    """W rebuilt from the original operator's weights on ``u^0..u^k``.

    With ``u^0 = 0`` and ``u^m = sum_{j<=m} D_j`` (dt = 1) the coefficient of
    ``D_j`` in ``L_k u`` is the tail sum of the weights from level j on.
    """
    n = _check_n(table, n, lowest=1)
    scale = math.gamma(3 - table.alpha)
    W = np.zeros((n, n))
    for k in range(1, n + 1):
        w = l2_weights(table, 1.0, k)
        W[k - 1, :k] = np.cumsum(w[::-1])[::-1][1:] * scale
    return W


def operator_quadform_matrix(table: CoeffTable, n, family="bdf"):
    """Matrix K with ``psi K psi^T`` equal to the scaled left-hand side of the inequality.

    ``bdf``: sum_k <L_k u, 3 D_k u - D_{k-1} u>, i.e. K = T^T W.
    ``dweighted``: sum_k d_{n-k+1} <L_k u, D_k u>, i.e. K = diag(d_n..d_1) W.
    """
    W = operator_matrix(table, n)
    if family == "bdf":
        T = 3 * np.eye(n) - np.eye(n, k=-1)
        return T.T @ W
    if family == "dweighted":
        return _reversed_d(table, n)[:, None] * W
    raise ValueError(f"unknown family {family!r}")


def bdf_blocks(table: CoeffTable, n):
    """Return ``(M, M_{n-1}, M_tilde)`` with M = A + A^T from the displayed A."""
    A = build_bdf_matrices(table, n).A
    M = A + A.T
    Mt = M.copy()
    Mt[-1, :-1] *= 2.0 / 3.0
    Mt[:-1, -1] *= 2.0 / 3.0
    Mt[-1, -1] = 2 * table.d[1]
    return M, M[:-1, :-1].copy(), Mt


def lnn_check(table: CoeffTable, n):
    """Replay the bordering step: ``l_nn^2 = 5 d_1 - 9/4 |l|^2 > d_1 / 2``.

    ``l`` is the off-diagonal part of the last row of the Cholesky factor of
    M_tilde.  Returns ``(lnn_sq, lnn_sq_direct, ok)`` where the direct value
    comes from factoring M itself.
    """
    M, _, Mt = bdf_blocks(table, n)
    d1 = table.d[1]
    try:
        l = np.linalg.cholesky(Mt)[-1, :-1]
        lnn_sq = 5 * d1 - 2.25 * float(l @ l)
        direct = float(np.linalg.cholesky(M)[-1, -1] ** 2)
    except np.linalg.LinAlgError:
        return math.nan, math.nan, False
    return lnn_sq, direct, bool(lnn_sq > 0.5 * d1)


class CholeskyCheck(NamedTuple):
    i: bool
    ii: bool
    iii: bool
    witnesses: tuple

    @property
    def ok(self):
        return self.i and self.ii and self.iii


def _first_failure(fail, values, offset):
    idx = np.argwhere(fail)
    if idx.size == 0:
        return None
    r, c = idx[0]
    return (int(r + offset[0]), int(c + offset[1]), float(values[r, c]))


def check_cholesky_conditions(M, tol=CHOLESKY_TOL) -> CholeskyCheck:
    """Test the three lower-triangle conditions that guarantee a positive Cholesky factor.

    (i)   M[i-1, j] >= M[i, j]                          for j <= i-1
    (ii)  M[i, j-1] <  M[i, j]                          for 1 <= j <= i
    (iii) M[i-1, j-1] - M[i, j-1] <= M[i-1, j] - M[i, j]  for 1 <= j <= i-1

    The non-strict conditions (i) and (iii) get a slack ``tol * max|M|``;
    (ii) is strict.  Witnesses are ``(condition, i, j, margin)`` with 0-based
    indices of the first failure per condition.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, scale)):
        raise ValueError("matrix is not symmetric")
    n = M.shape[0]
    slack = tol * scale
    if n < 2:
        return CholeskyCheck(True, True, True, ())

    down = M[:-1, :] - M[1:, :]  # row r: M[r, j] - M[r+1, j], i = r + 1
    m1 = down
    f1 = np.tril(np.ones_like(m1, dtype=bool)) & (m1 < -slack)
    m2 = M[:, 1:] - M[:, :-1]  # (i, j-1): M[i, j] - M[i, j-1]
    f2 = np.tril(np.ones_like(m2, dtype=bool), -1) & ~(m2 > 0)
    m3 = down[:, 1:] - down[:, :-1]  # (i-1, j-1)
    f3 = np.tril(np.ones_like(m3, dtype=bool), -1) & (m3 < -slack)

    witnesses = []
    for name, fail, vals, off in (("i", f1, m1, (1, 0)), ("ii", f2, m2, (0, 1)), ("iii", f3, m3, (1, 1))):
        w = _first_failure(fail, vals, off)
        if w is not None:
            witnesses.append((name,) + w)
    return CholeskyCheck(not f1.any(), not f2.any(), not f3.any(), tuple(witnesses))


def min_symmetric_eigenvalue(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def _trial_vectors(n, trials, seed):
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal((int(trials), n))
    return psi / np.linalg.norm(psi, axis=1, keepdims=True)


def _quadforms(psi, K):
    return np.sum((psi @ K) * psi, axis=1)


def _bdf_margins(table, n, psi):
    """Margins of psi K psi^T - alpha/2 |psi|^2 for the displayed and the operator form."""
    alpha = table.alpha
    if n == 1:
        # scalar case of the displayed form: (r1 + d1) psi^2
        K = np.array([[table.r1 + table.d[1]]])
        forms = [K, K]
    else:
        forms = [build_bdf_matrices(table, n).total, operator_quadform_matrix(table, n, "bdf")]
    lower = 0.5 * alpha * np.sum(psi * psi, axis=1)
    return [_quadforms(psi, K) - lower for K in forms]


def _dweighted_margins(table, n, psi):
    alpha = table.alpha
    w = _reversed_d(table, n)
    if n == 1:
        K = w[:, None] * np.array([[table.r1 + table.d[1]]])
        forms = [K, K]
    else:
        forms = [build_dweighted_matrices(table, n).total, operator_quadform_matrix(table, n, "dweighted")]
    lower = 5 * alpha / 12 * np.sum(w * psi * psi, axis=1)
    return [_quadforms(psi, K) - lower for K in forms]


def quadform_lower_bound_check(table: CoeffTable, n, trials, seed, family="both", psi=None):
    """Randomized check of the two lower bounds on unit vectors psi.

    bdf family: psi K psi^T >= alpha/2 |psi|^2.
    dweighted family: psi K psi^T >= 5 alpha / 12 sum d_{n-k+1} psi_k^2.
    Both the displayed matrix split and the operator-derived matrix are
    tested; each margin may dip to ``-1e-10``.
    """
    n = _check_n(table, n, lowest=1)
    if int(trials) < 1 and psi is None:
        raise ValueError("trials must be >= 1")
    if family not in ("bdf", "dweighted", "both"):
        raise ValueError(f"unknown family {family!r}")
    if psi is None:
        psi = _trial_vectors(n, trials, seed)
    psi = np.atleast_2d(np.asarray(psi, dtype=float))
    margins = []
    if family in ("bdf", "both"):
        margins += _bdf_margins(table, n, psi)
    if family in ("dweighted", "both"):
        margins += _dweighted_margins(table, n, psi)
    return bool(all(np.all(m >= -QUADFORM_SLACK) for m in margins))


def eval_Q(alpha, i, j):
    """(Q1, Q2, Q3) from their kappa-product definitions, vectorized over i, j."""
    alpha = as_alpha(alpha)
    i = np.asarray(i)
    j = np.asarray(j)
    if np.any(j < 1) or np.any(i <= j):
        raise ValueError("need i > j >= 1")
    m = i - j + 1
    k_i = {b: kappa(i, b) for b in (2 - alpha, 1 - alpha, -alpha)}
    k_m = {b: kappa(m, b) for b in (-alpha - 1, 1 - alpha, -alpha)}
    terms = (
        (0.5 * alpha * k_i[2 - alpha] * k_m[-alpha - 1], k_i[-alpha] * k_m[1 - alpha]),
        (0.5 * alpha * k_i[1 - alpha] * k_m[-alpha - 1], 0.5 * (1 - alpha) * k_i[-alpha] * k_m[-alpha]),
        (-(1 - alpha) * k_i[2 - alpha] * k_m[-alpha], (2 - alpha) * k_i[1 - alpha] * k_m[1 - alpha]),
    )
    Q = tuple(t1 + t2 for t1, t2 in terms)
    scale = tuple(np.maximum(np.abs(t1), np.abs(t2)) for t1, t2 in terms)
    return Q, scale


@dataclass
class QSignSweep:
    alpha: float
    i: np.ndarray
    j: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray
    Q3: np.ndarray
    q1_ok: bool
    q2_ok: bool
    q3_ok: bool

    @property
    def ok(self):
        return self.q1_ok and self.q2_ok and self.q3_ok


def q_sign_sweep(alpha, i_max) -> QSignSweep:
    """Check Q1 >= 0, Q2 <= 0, Q3 <= 0 for all 1 <= j < i <= i_max.

    Each sign test allows a slack of 1e-12 times the larger of the two
    products making up that Q, so exact zeros and cancellation pass.
    """
    if int(i_max) < 2:
        raise ValueError("i_max must be >= 2")
    jj, ii = np.triu_indices(int(i_max), 1)
    i, j = ii + 1, jj + 1
    (Q1, Q2, Q3), (s1, s2, s3) = eval_Q(alpha, i, j)
    return QSignSweep(
        float(alpha), i, j, Q1, Q2, Q3,
        q1_ok=bool(np.all(Q1 >= -Q_SLACK * s1)),
        q2_ok=bool(np.all(Q2 <= Q_SLACK * s2)),
        q3_ok=bool(np.all(Q3 <= Q_SLACK * s3)),
    )


@dataclass
class AnalysisReport:
    alpha: float
    n: int
    min_eig_sym_A: float
    min_eig_sym_B: float
    min_eig_sym_C: float
    min_eig_sym_A_dw: float
    min_eig_sym_B_dw: float
    min_eig_operator_bdf: float
    cholesky_conditions_ok: dict
    lnn_ok: bool
    quadform_lower_bound_ok: bool
    witnesses: list = field(default_factory=list)

    @property
    def ok(self):
        eigs = (self.min_eig_sym_A, self.min_eig_sym_B, self.min_eig_sym_C, self.min_eig_sym_A_dw, self.min_eig_sym_B_dw)
        return (
            all(e > 0 for e in eigs)
            and self.min_eig_operator_bdf >= 0.5 * self.alpha - QUADFORM_SLACK
            and all(all(t) for t in self.cholesky_conditions_ok.values())
            and self.lnn_ok
            and self.quadform_lower_bound_ok
        )


def analyze(table: CoeffTable, n, trials=1000, seed=0) -> AnalysisReport:
    """All certificates for one (alpha, n) pair."""
    n = _check_n(table, n)
    mb = build_bdf_matrices(table, n)
    mw = build_dweighted_matrices(table, n)
    M, M_head, M_tilde = bdf_blocks(table, n)
    checks = {"M_head": check_cholesky_conditions(M_head), "M_tilde": check_cholesky_conditions(M_tilde)}
    checks["S"] = check_cholesky_conditions(build_conjugate_S(table, n))
    witnesses = [(name,) + w for name, chk in checks.items() for w in chk.witnesses]
    _, _, lnn_ok = lnn_check(table, n)
    return AnalysisReport(
        alpha=table.alpha,
        n=n,
        min_eig_sym_A=min_symmetric_eigenvalue(mb.A),
        min_eig_sym_B=min_symmetric_eigenvalue(mb.B),
        min_eig_sym_C=min_symmetric_eigenvalue(mb.C),
        min_eig_sym_A_dw=min_symmetric_eigenvalue(mw.A),
        min_eig_sym_B_dw=min_symmetric_eigenvalue(mw.B),
        min_eig_operator_bdf=min_symmetric_eigenvalue(operator_quadform_matrix(table, n, "bdf")),
        cholesky_conditions_ok={k: (c.i, c.ii, c.iii) for k, c in checks.items()},
        lnn_ok=lnn_ok,
        quadform_lower_bound_ok=quadform_lower_bound_check(table, n, trials, seed),
        witnesses=witnesses,
    )


def sweep(alphas, ns, trials=1000, seed=0):
    """Reports for every (alpha, n) pair, ordered by alpha then n."""
    ns = sorted(int(n) for n in ns)
    out = []
    for alpha in alphas:
        table = build_coeff_table(alpha, max(ns) + 1)
        out.extend(analyze(table, n, trials, seed) for n in ns)
    return out

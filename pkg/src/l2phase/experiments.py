"""Convergence harness, run artifacts and the invariant suite behind ``verify``."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .analysis import analyze, q_sign_sweep, quadform_lower_bound_check
from .caputo import History, TimeGrid, caputo_reference, l2_apply, l2_apply_reformulated
from .coeffs import build_coeff_table, coeff_abc, coeff_d, coeff_d_from_abc, coeff_integral_check, coeff_r1
from .config import RunConfig
from .energy import dt_restriction
from .initial import manufactured_solution
from .schemes import RunResult, run
from .spectral import write_snapshot

__all__ = [
    "ConvergenceRow",
    "VerifyItem",
    "convergence_config",
    "convergence_table",
    "coefficient_properties",
    "l2_error",
    "verify",
    "write_convergence_csv",
    "write_run_outputs",
]

DEFAULT_DT_LIST = tuple(1.0 / m for m in (40, 80, 160, 320, 640, 1280))


def l2_error(grid, u, v, norm="quadrature"):
    """Discrete L2 distance.

    ``quadrature`` is ``sqrt(cell_area * sum e^2)``, approximating the
    continuous norm over the domain; ``rms`` is ``sqrt(mean e^2)``.
    """
    e2 = np.sum((np.asarray(u) - np.asarray(v)) ** 2)
    if norm == "quadrature":
        return math.sqrt(e2 * grid.cell_area)
    if norm == "rms":
        return math.sqrt(e2 / (grid.nx * grid.ny))
    raise ValueError(f"unknown norm {norm!r}")


@dataclass(frozen=True)
class ConvergenceRow:
    dt: float
    l2_error: float
    rate: Optional[float]


def convergence_config(scheme, alpha, dt, n=32, t_final=1.0, epsilon=0.1):
    return RunConfig(
        model="AC",
        alpha=alpha,
        epsilon=epsilon,
        scheme=scheme.upper(),
        grid={"nx": n, "ny": n, "domain": "pm-pi"},
        dt=dt,
        t_final=t_final,
        initial={"kind": "manufactured"},
        snapshots=0,
    )


def convergence_table(scheme, alpha, dt_list=DEFAULT_DT_LIST, n=32, t_final=1.0, epsilon=0.1,
                      norm="quadrature", on_row: Optional[Callable[[ConvergenceRow], None]] = None):
    """Errors at ``t_final`` against the manufactured solution and rates between halved steps."""
    dt_list = [float(dt) for dt in dt_list]
    if len(dt_list) < 1:
        raise ValueError("dt_list is empty")
    for big, small in zip(dt_list, dt_list[1:]):
        if not math.isclose(big, 2 * small, rel_tol=1e-12):
            raise ValueError("dt_list must decrease by factors of 2")
    rows = []
    prev = None
    for dt in dt_list:
        res = run(convergence_config(scheme, alpha, dt, n, t_final, epsilon))
        err = l2_error(res.space, res.u_final, manufactured_solution(res.space, t_final), norm)
        rate = None if prev is None else math.log2(prev / err)
        row = ConvergenceRow(dt, err, rate)
        rows.append(row)
        if on_row is not None:
            on_row(row)
        prev = err
    return rows


def write_convergence_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dt", "l2_error", "rate"])
        for r in rows:
            w.writerow([repr(r.dt), repr(r.l2_error), "" if r.rate is None else repr(r.rate)])


def _fmt(v):
    return "" if v is None else repr(v)


def write_run_outputs(result: RunResult, out_dir):
    """Write config.json, energy.csv, steps.csv, verdict.txt and binary snapshots."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        fh.write(result.config.to_json() + "\n")
    with open(os.path.join(out_dir, "energy.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "t", "E", "E_mod", "DkE", "frac_sum"])
        for row in result.trace.rows():
            w.writerow([row[0]] + [_fmt(v) for v in row[1:]])
    with open(os.path.join(out_dir, "steps.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "t", "max_norm", "mean", "dt_restriction_ok", "wall_time"])
        for r in result.reports:
            ok = "" if r.dt_restriction_ok is None else int(r.dt_restriction_ok)
            w.writerow([r.step, repr(r.t), repr(r.max_norm), repr(r.mean), ok, f"{r.wall_time:.6f}"])
    snap_dir = os.path.join(out_dir, "snapshots")
    os.makedirs(snap_dir, exist_ok=True)
    for n, t, u in result.snapshots:
        write_snapshot(os.path.join(snap_dir, f"u_{n:06d}.bin"), u, n, t)
    verdict = run_verdict(result)
    with open(os.path.join(out_dir, "verdict.txt"), "w") as fh:
        for k, v in verdict.items():
            fh.write(f"{k}={v}\n")
    return verdict


def run_verdict(result: RunResult):
    tr = result.trace
    means = np.array([r.mean for r in result.reports])
    out = {
        "scheme": result.config.scheme,
        "model": result.config.model,
        "steps": len(result.reports) - 1,
        "monotone_classical": tr.monotone_classical,
        "bounded_by_initial": tr.bounded_by_initial,
        "frac_law_ok": tr.frac_law_ok,
        "modified_bounded": "" if tr.modified_bounded is None else tr.modified_bounded,
        "max_mean_drift": repr(float(np.max(np.abs(means - means[0])))),
        "max_norm": repr(max(r.max_norm for r in result.reports)),
    }
    if result.config.scheme == "IMEX":
        out["dt_restriction_ok"] = all(r.dt_restriction_ok for r in result.reports[1:])
        out["dt_restriction"] = repr(dt_restriction(result.config.alpha, max(1.0, float(out["max_norm"]))))
    return out


def _combined_differences(x, n):
    """``x_j``, ``x_j - x_{j+1}`` and ``3 x_j - 4 x_{j+1} + x_{j+2}`` for j = 1..n+1."""
    m = n + 1
    return x[1 : m + 1], x[1 : m + 1] - x[2 : m + 2], 3 * x[1 : m + 1] - 4 * x[2 : m + 2] + x[3 : m + 3]


def coefficient_properties(alpha, n_max):
    """Each coefficient property as a name -> bool mapping over ``j <= n_max``.

    For a (negative, increasing), c and d (positive, decreasing) the sign and
    the monotonicity are checked for the value, the first difference and the
    combination ``3 x_j - 4 x_{j+1} + x_{j+2}``.
    """
    t = build_coeff_table(alpha, n_max + 3)
    n = n_max
    j = np.arange(1, n + 1)
    out = {"abc_sum_zero": bool(np.all(np.abs(t.a[1 : n + 1] + t.b[1 : n + 1] + t.c[1 : n + 1]) <= 1e-12))}
    for name, x, sign in (("a", t.a, -1), ("c", t.c, 1), ("d", t.d, 1)):
        for label, seq in zip(("value", "first_diff", "second_comb"), _combined_differences(x, n)):
            out[f"{name}.{label}.sign"] = bool(np.all(sign * seq[:n] > 0))
            out[f"{name}.{label}.monotone"] = bool(np.all(-sign * np.diff(seq) > 0))
    d = t.d
    out["d.quarter_ratio"] = bool(np.all(4 * d[2 : n + 2] >= d[1 : n + 1]))
    out["minus_a_below_d"] = bool(np.all(-t.a[1 : n + 1] < d[1 : n + 1]))
    out["r1_bound"] = bool(t.r1 > 0.75 * t.alpha)
    out["d_routes_agree"] = bool(np.allclose(coeff_d(alpha, j), coeff_d_from_abc(alpha, j), rtol=1e-10, atol=0))
    return out


@dataclass(frozen=True)
class VerifyItem:
    name: str
    ok: bool
    detail: str = ""
    known_failure: bool = False


def _operator_equivalence(alphas, k_max, histories, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for alpha in alphas:
        table = build_coeff_table(alpha, k_max)
        for _ in range(histories):
            dt = float(rng.uniform(1e-3, 1e-1))
            u = rng.standard_normal(k_max + 1)
            hist = History.from_states(u)
            grid = TimeGrid(dt, k_max)
            absD = np.abs(np.diff(u)) / dt
            scale = dt ** (1 - alpha) / math.gamma(3 - alpha)
            for k in range(1, k_max + 1):
                x = l2_apply(hist, table, grid, k)
                y = l2_apply_reformulated(hist, table, grid, k)
                # relative to the summand magnitude, since random histories cancel heavily
                mag = scale * (table.d[1 : k + 1] @ absD[k - 1 :: -1] + 2 * alpha * absD[:k].max())
                worst = max(worst, abs(x - y) / max(abs(x), abs(y), mag))
    return worst


def _quadratic_exactness(alphas, k_max):
    worst = 0.0
    for alpha in alphas:
        table = build_coeff_table(alpha, k_max)
        grid = TimeGrid(1.0 / k_max, k_max)
        hist = History.from_states([grid.t(m) ** 2 for m in range(k_max + 1)])
        for k in range(2, k_max + 1):
            ref = caputo_reference(2, alpha, grid.t(k))
            worst = max(worst, abs(l2_apply(hist, table, grid, k) - ref) / ref)
    return worst


# below this the h^3 remainder still dominates h^(3 - alpha) at desk-scale step counts
PREASYMPTOTIC_RATE_ALPHA = 0.15


def caputo_rate(alpha, power=5, steps=(40, 80, 160, 320)):
    """Empirical order of the operator on ``t^power`` at ``t = 1``."""
    errs = []
    for m in steps:
        table = build_coeff_table(alpha, m)
        grid = TimeGrid(1.0 / m, m)
        hist = History.from_states([grid.t(k) ** power for k in range(m + 1)])
        errs.append(abs(l2_apply(hist, table, grid, m) - caputo_reference(power, alpha, 1.0)))
    return math.log2(errs[-2] / errs[-1])


def _short_energy_runs(quick):
    n = 32 if quick else 64
    t_final = 0.2 if quick else 1.0
    seven = dict(model="AC", alpha=0.9, epsilon=0.1, grid={"nx": n, "ny": n, "domain": "0-2pi"},
                 t_final=t_final, initial={"kind": "seven_circles"}, snapshots=0)
    ch = dict(model="CH", alpha=0.8, epsilon=0.1, scheme="SAV", grid={"nx": n, "ny": n, "domain": "0-2pi"},
              dt=0.001, t_final=t_final / 5 if quick else t_final, snapshots=0,
              initial={"kind": "uniform_random", "lo": -0.5, "hi": 0.5, "seed": 0})
    items = []
    r = run(RunConfig(scheme="SAV", dt=0.01, **seven))
    items.append(VerifyItem("energy.sav_modified_bounded_ac", bool(r.trace.modified_bounded)))
    r = run(RunConfig(**ch))
    items.append(VerifyItem("energy.sav_modified_bounded_ch", bool(r.trace.modified_bounded)))
    drift = max(abs(x.mean - r.reports[0].mean) for x in r.reports)
    items.append(VerifyItem("energy.ch_mass_conserved", drift <= 1e-12, f"drift={drift:.3e}"))
    r = run(RunConfig(scheme="IMEX", dt=0.005, **seven))
    ok = r.trace.frac_law_ok and r.trace.bounded_by_initial and all(x.dt_restriction_ok for x in r.reports[1:])
    items.append(VerifyItem("energy.imex_fractional_law", bool(ok)))
    r = run(RunConfig(scheme="IMEX", dt=0.01, **seven))
    items.append(VerifyItem("energy.imex_classical_monotone", bool(r.trace.monotone_classical)))
    return items


def verify(quick=False, on_item: Optional[Callable[[VerifyItem], None]] = None):
    """Run the invariant suite; ``quick`` shrinks sweeps to a few seconds."""
    alphas = [0.1, 0.5, 0.9] if quick else [round(0.1 * k, 1) for k in range(1, 10)]
    items = []

    def add(item):
        items.append(item)
        if on_item is not None:
            on_item(item)

    n_max = 1000 if quick else 10_000
    for alpha in alphas:
        props = coefficient_properties(alpha, n_max)
        bad = [k for k, v in props.items() if not v]
        add(VerifyItem(f"coeffs.alpha={alpha}", not bad, ",".join(bad)))
        a, c = coeff_abc(alpha, 7)[0], coeff_abc(alpha, 7)[2]
        qa, qc = coeff_integral_check(alpha, 7)
        add(VerifyItem(f"coeffs.integral_forms.alpha={alpha}",
                       math.isclose(a, qa, rel_tol=1e-8) and math.isclose(c, qc, rel_tol=1e-8)))
        add(VerifyItem(f"coeffs.r1.alpha={alpha}", math.isclose(coeff_r1(alpha) + coeff_d(alpha, 1), 2 - alpha)))

    worst = _operator_equivalence(alphas, 30 if quick else 100, 5 if quick else 100, seed=1)
    add(VerifyItem("caputo.operator_equivalence", worst <= 1e-12, f"max_rel={worst:.3e}"))
    worst = _quadratic_exactness(alphas, 50)
    add(VerifyItem("caputo.quadratic_exact", worst <= 1e-10, f"max_rel={worst:.3e}"))
    for alpha in alphas:
        rate = caputo_rate(alpha)
        add(VerifyItem(f"caputo.rate.alpha={alpha}", abs(rate - (3 - alpha)) <= 0.2, f"rate={rate:.4f}",
                       known_failure=alpha < PREASYMPTOTIC_RATE_ALPHA))

    ns = [2, 4, 8, 16, 32] if quick else [2, 4, 8, 16, 32, 64, 128, 200]
    trials = 100 if quick else 1000
    for alpha in alphas:
        table = build_coeff_table(alpha, max(ns) + 1)
        for n in ns:
            rep = analyze(table, n, trials=trials, seed=n)
            add(VerifyItem(f"analysis.alpha={alpha}.n={n}", rep.ok, str(rep.witnesses[:3]) if rep.witnesses else ""))
        add(VerifyItem(f"analysis.quadform_scalar.alpha={alpha}",
                       quadform_lower_bound_check(table, 1, 1, 0, psi=[[1.0]])))

    q_alphas = [0.05, 0.5, 0.95] if quick else [round(0.05 * k, 2) for k in range(1, 20)]
    for alpha in q_alphas:
        s = q_sign_sweep(alpha, 60 if quick else 200)
        add(VerifyItem(f"analysis.q_signs.alpha={alpha}", s.ok))

    for item in _short_energy_runs(quick):
        add(item)
    return items

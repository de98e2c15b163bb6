"""Command-line front end.

Exit codes: 0 success, 1 verification or run failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys

from .analysis import q_sign_sweep, sweep
from .coeffs import build_coeff_table
from .config import ConfigError, RunConfig
from .experiments import DEFAULT_DT_LIST, convergence_table, verify, write_convergence_csv, write_run_outputs
from .schemes import SchemeError, run

__all__ = ["main"]


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _cmd_coeffs(args):
    table = build_coeff_table(args.alpha, args.n)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "a", "b", "c", "d"])
        for j in range(1, args.n + 1):
            w.writerow([j] + [repr(float(x[j])) for x in (table.a, table.b, table.c, table.d)])
        w.writerow(["r1", repr(table.r1)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def _cmd_analyze(args):
    os.makedirs(args.out, exist_ok=True)
    reports = sweep(args.alpha_grid, args.n_grid, trials=args.trials, seed=args.seed)
    all_ok = True
    with open(os.path.join(args.out, "report.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([
            "alpha", "n", "min_eig_A", "min_eig_B", "min_eig_C", "min_eig_A_dw", "min_eig_B_dw",
            "min_eig_operator", "chol_M_head", "chol_M_tilde", "chol_S", "lnn_ok", "quadform_ok", "ok",
        ])
        for r in reports:
            chol = ["".join("T" if b else "F" for b in r.cholesky_conditions_ok[k]) for k in ("M_head", "M_tilde", "S")]
            w.writerow([
                r.alpha, r.n, repr(r.min_eig_sym_A), repr(r.min_eig_sym_B), repr(r.min_eig_sym_C),
                repr(r.min_eig_sym_A_dw), repr(r.min_eig_sym_B_dw), repr(r.min_eig_operator_bdf),
                *chol, int(r.lnn_ok), int(r.quadform_lower_bound_ok), int(r.ok),
            ])
            all_ok &= r.ok
    with open(os.path.join(args.out, "q_signs.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "i", "j", "Q1", "Q2", "Q3"])
        for alpha in args.alpha_grid:
            s = q_sign_sweep(alpha, args.i_max)
            all_ok &= s.ok
            for row in zip(s.i, s.j, s.Q1, s.Q2, s.Q3):
                w.writerow([alpha, int(row[0]), int(row[1])] + [repr(float(q)) for q in row[2:]])
    print(f"analyze: {len(reports)} (alpha, n) pairs, {'all certificates hold' if all_ok else 'FAILURES'}")
    return 0 if all_ok else 1


def _cmd_run(args):
    config = RunConfig.load(args.config)
    out = args.out or config.output_dir or "run_output"
    result = run(config)
    verdict = write_run_outputs(result, out)
    for k, v in verdict.items():
        print(f"{k}={v}")
    return 0


def _cmd_convergence(args):
    dts = [1.0 / m for m in args.steps] if args.steps else list(DEFAULT_DT_LIST)

    def show(row):
        rate = "" if row.rate is None else f"{row.rate:.4f}"
        print(f"dt=1/{round(1 / row.dt)}  l2_error={row.l2_error:.4e}  rate={rate}", flush=True)

    rows = convergence_table(args.scheme, args.alpha, dts, n=args.n, norm=args.norm, on_row=show)
    if args.out:
        write_convergence_csv(args.out, rows)
    return 0


def _cmd_verify(args):
    failures = known = 0

    def show(item):
        nonlocal failures, known
        if item.ok:
            label = "PASS"
        elif item.known_failure:
            label = "XFAIL"
            known += 1
        else:
            label = "FAIL"
            failures += 1
        extra = f"  {item.detail}" if item.detail else ""
        print(f"{label}  {item.name}{extra}", flush=True)

    items = verify(quick=args.quick, on_item=show)
    print(f"verify: {len(items) - failures - known}/{len(items)} passed, {known} known failures")
    return 0 if failures == 0 else 1


def build_parser():
    p = argparse.ArgumentParser(prog="l2phase", description="L2 time-fractional phase-field toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coeffs", help="tabulate a_j, b_j, c_j, d_j and r_1")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--out")
    c.set_defaults(func=_cmd_coeffs)

    a = sub.add_parser("analyze", help="matrix certificates and Q-sign sweep")
    a.add_argument("--alpha-grid", type=_float_list, required=True)
    a.add_argument("--n-grid", type=_int_list, required=True)
    a.add_argument("--i-max", type=int, default=200)
    a.add_argument("--trials", type=int, default=1000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", required=True)
    a.set_defaults(func=_cmd_analyze)

    r = sub.add_parser("run", help="run one simulation from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("convergence", help="temporal convergence table on the manufactured problem")
    v.add_argument("--scheme", type=str.upper, choices=["SAV", "IMEX"], required=True)
    v.add_argument("--alpha", type=float, required=True)
    v.add_argument("--n", type=int, default=32)
    v.add_argument("--steps", type=_int_list, help="steps per unit time, e.g. 40,80,160")
    v.add_argument("--norm", choices=["quadrature", "rms"], default="quadrature")
    v.add_argument("--out")
    v.set_defaults(func=_cmd_convergence)

    f = sub.add_parser("verify", help="run the invariant suite")
    f.add_argument("--quick", action="store_true")
    f.set_defaults(func=_cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        if args.command in ("coeffs", "analyze", "convergence"):
            print(f"error: {exc}", file=sys.stderr)
            return 2
        raise
    except SchemeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

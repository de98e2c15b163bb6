import json
import math

import numpy as np
import pytest

from l2phase.cli import main
from l2phase.config import RunConfig
from l2phase.experiments import (
    coefficient_properties,
    convergence_table,
    l2_error,
    verify,
    write_run_outputs,
)
from l2phase.schemes import run
from l2phase.spectral import Grid2D, read_snapshot

SMALL_RUN = dict(
    model="AC", alpha=0.9, epsilon=0.1, scheme="IMEX", grid={"nx": 16, "ny": 16, "domain": "0-2pi"},
    dt=0.01, t_final=0.05, initial={"kind": "seven_circles"}, snapshots=2,
)


def test_l2_error_norms():
    g = Grid2D.square(8, "pm-pi")
    u = np.ones(g.shape)
    z = np.zeros(g.shape)
    assert l2_error(g, u, z, "rms") == pytest.approx(1.0)
    assert l2_error(g, u, z) == pytest.approx(2 * math.pi)
    with pytest.raises(ValueError):
        l2_error(g, u, z, "max")


def test_convergence_table_small():
    rows = convergence_table("IMEX", 0.5, [1 / 10, 1 / 20, 1 / 40], n=8)
    assert rows[0].rate is None
    assert all(a.l2_error > b.l2_error for a, b in zip(rows, rows[1:]))
    assert rows[-1].rate > 1.5
    rms = convergence_table("IMEX", 0.5, [1 / 10], n=8, norm="rms")
    assert rows[0].l2_error / rms[0].l2_error == pytest.approx(2 * math.pi, rel=1e-12)
    with pytest.raises(ValueError):
        convergence_table("SAV", 0.5, [1 / 10, 1 / 30])
    with pytest.raises(ValueError):
        convergence_table("SAV", 0.5, [])


def test_coefficient_properties_hold():
    props = coefficient_properties(0.37, 500)
    assert props and all(props.values())


def test_write_run_outputs(tmp_path):
    res = run(RunConfig.from_dict(SMALL_RUN))
    verdict = write_run_outputs(res, tmp_path / "a")
    assert verdict["steps"] == 5 and verdict["scheme"] == "IMEX"
    energy = (tmp_path / "a" / "energy.csv").read_text().splitlines()
    assert energy[0] == "n,t,E,E_mod,DkE,frac_sum" and len(energy) == 7
    steps = (tmp_path / "a" / "steps.csv").read_text().splitlines()
    assert steps[0] == "n,t,max_norm,mean,dt_restriction_ok,wall_time"
    snaps = sorted(p.name for p in (tmp_path / "a" / "snapshots").iterdir())
    assert snaps == ["u_000000.bin", "u_000002.bin", "u_000004.bin", "u_000005.bin"]
    u, step, t = read_snapshot(tmp_path / "a" / "snapshots" / "u_000005.bin")
    assert step == 5 and np.array_equal(u, res.u_final)
    assert RunConfig.load(tmp_path / "a" / "config.json") == res.config
    text = (tmp_path / "a" / "verdict.txt").read_text()
    assert "dt_restriction_ok=False" in text
    write_run_outputs(run(RunConfig.from_dict(SMALL_RUN)), tmp_path / "b")
    assert (tmp_path / "a" / "energy.csv").read_bytes() == (tmp_path / "b" / "energy.csv").read_bytes()


def test_verify_quick_has_no_unexpected_failures():
    items = verify(quick=True)
    assert all(i.ok or i.known_failure for i in items)
    assert sum(i.known_failure and not i.ok for i in items) <= 1


def test_cli_coeffs(tmp_path, capsys):
    assert main(["coeffs", "--alpha", "0.5", "--n", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "j,a,b,c,d" and len(lines) == 6
    assert lines[-1].startswith("r1,")
    assert float(lines[-1].split(",")[1]) == pytest.approx(0.48223304703363, rel=1e-12)
    out = tmp_path / "c.csv"
    assert main(["coeffs", "--alpha", "0.5", "--n", "4", "--out", str(out)]) == 0
    assert out.read_text().splitlines() == lines
    assert main(["coeffs", "--alpha", "1.5", "--n", "4"]) == 2


def test_cli_analyze(tmp_path, capsys):
    code = main(["analyze", "--alpha-grid", "0.3,0.7", "--n-grid", "2,5", "--i-max", "10",
                 "--trials", "20", "--out", str(tmp_path)])
    assert code == 0
    report = (tmp_path / "report.csv").read_text().splitlines()
    assert len(report) == 5 and report[1].endswith(",1")
    qs = (tmp_path / "q_signs.csv").read_text().splitlines()
    assert qs[0] == "alpha,i,j,Q1,Q2,Q3" and len(qs) == 1 + 2 * 45
    assert "all certificates hold" in capsys.readouterr().out


def test_cli_run(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SMALL_RUN))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "verdict.txt").exists()
    assert "scheme=IMEX" in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**SMALL_RUN, "alpha": 2.0}))
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_cli_convergence(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    assert main(["convergence", "--scheme", "sav", "--alpha", "0.5", "--n", "8", "--steps", "10,20",
                 "--out", str(out)]) == 0
    assert "dt=1/20" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert lines[0] == "dt,l2_error,rate" and len(lines) == 3
    assert main(["convergence", "--scheme", "sav", "--alpha", "0.5", "--steps", "10,30"]) == 2


def test_cli_verify_quick(capsys):
    assert main(["verify", "--quick"]) == 0
    out = capsys.readouterr().out
    assert "known failures" in out and "\nFAIL" not in out


@pytest.mark.parametrize("argv", [[], ["coeffs", "--alpha", "x", "--n", "3"], ["run"], ["convergence", "--scheme", "BDF"]])
def test_cli_usage_errors(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l2phase.spectral import Grid2D, ModelSpec, read_snapshot, solve_helmholtz, write_field_csv, write_snapshot


def test_round_trip_and_shapes():
    g = Grid2D(16, 8)
    u = np.random.default_rng(0).standard_normal(g.shape)
    uh = g.forward(u)
    assert uh.shape == g.spectral_shape == (16, 5)
    assert np.allclose(g.inverse(uh), u, atol=1e-14)
    with pytest.raises(ValueError):
        g.forward(np.zeros((8, 16)))
    with pytest.raises(ValueError):
        g.inverse(np.zeros((16, 8)))


@pytest.mark.parametrize("n", [6, 0, 1, 12])
def test_power_of_two_grids_only(n):
    with pytest.raises(ValueError):
        Grid2D(n, 8)


def test_laplacian_of_trig_mode():
    g = Grid2D.square(32, "pm-pi")
    x, y = g.coords
    u = np.sin(2 * x) * np.cos(3 * y)
    lap = g.inverse(g.laplacian(g.forward(u)))
    assert np.allclose(lap, -13 * u, atol=1e-11)


def test_model_operators():
    g = Grid2D.square(16)
    x, y = g.coords
    u = np.cos(x + y)
    uh = g.forward(u)
    ac = ModelSpec("AC", 0.5)
    ch = ModelSpec("CH", 0.5)
    assert np.allclose(g.inverse(ac.apply_L(g, uh)), 0.25 * 2 * u, atol=1e-12)
    assert np.allclose(g.inverse(ac.apply_G(g, uh)), -u, atol=1e-12)
    assert np.allclose(g.inverse(ch.apply_G(g, uh)), -2 * u, atol=1e-12)
    assert np.allclose(ch.symbol(g), 0.25 * g.k2**2)
    with pytest.raises(ValueError):
        ModelSpec("MBE", 0.1)
    with pytest.raises(ValueError):
        ModelSpec("AC", 0.0)


@settings(max_examples=25)
@given(st.floats(min_value=0.1, max_value=100.0), st.sampled_from(["AC", "CH"]), st.integers(0, 1000))
def test_helmholtz_solve_inverts_operator(c0, model, seed):
    g = Grid2D.square(16)
    m = ModelSpec(model, 0.3)
    u = np.random.default_rng(seed).standard_normal(g.shape)
    uh = g.forward(u)
    rhs = c0 * uh - m.apply_G(g, m.apply_L(g, uh))
    assert np.allclose(g.inverse(solve_helmholtz(g, rhs, c0, m)), u, atol=1e-10)


def test_helmholtz_rejects_nonpositive_shift():
    g = Grid2D.square(8)
    with pytest.raises(ValueError):
        solve_helmholtz(g, g.forward(np.zeros(g.shape)), 0.0, ModelSpec("AC", 0.1))


def test_quadrature_is_exact_for_trig_polynomials():
    g = Grid2D.square(32)
    x, y = g.coords
    assert g.integrate(np.sin(x) ** 2) == pytest.approx(2 * math.pi**2, rel=1e-14)
    assert g.integrate(np.ones(g.shape)) == pytest.approx(g.area)
    assert g.inner(np.sin(x), np.cos(x)) == pytest.approx(0.0, abs=1e-13)
    assert g.mean(np.cos(y) + 2) == pytest.approx(2.0)


def test_dealias_mask_truncates_upper_third():
    g = Grid2D(16, 16, dealias=True)
    uh = np.ones(g.spectral_shape, dtype=complex)
    out = g.truncate(uh)
    assert out[0, 0] == 1 and out[8, 0] == 0 and out[0, 8] == 0
    assert Grid2D(16, 16).truncate(uh) is uh


def test_snapshot_round_trip(tmp_path):
    u = np.arange(32.0).reshape(8, 4)
    p = tmp_path / "u.bin"
    write_snapshot(p, u, 17, 0.25)
    v, step, t = read_snapshot(p)
    assert np.array_equal(u, v) and step == 17 and t == 0.25
    assert p.stat().st_size == 32 + 8 * 32
    raw = p.read_bytes()
    (tmp_path / "bad.bin").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        read_snapshot(tmp_path / "bad.bin")
    (tmp_path / "short.bin").write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        read_snapshot(tmp_path / "short.bin")


def test_field_csv(tmp_path):
    g = Grid2D.square(4)
    p = tmp_path / "f.csv"
    write_field_csv(p, g, np.zeros(g.shape))
    lines = p.read_text().splitlines()
    assert lines[0] == "x,y,u" and len(lines) == 17

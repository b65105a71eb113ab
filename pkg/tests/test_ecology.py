import warnings

import numpy as np
import pytest

from autosync.ecology import (BlowUpError, DriveParams, DriveState, add_field_noise, coexistence_state,
                              drive_step, gen_gaussian_params, gen_sinusoidal_params, gen_swirl_params,
                              initial_conditions, simulate_drive)
from autosync.field import GridSpec


def scalar_loop_step(P, Z, k, m, h, dx, dt):
    """Independent per-cell forward Euler step with mirrored ghosts."""
    ny, nx = len(P), len(P[0])
    Pn = [[0.0] * nx for _ in range(ny)]
    Zn = [[0.0] * nx for _ in range(ny)]
    for j in range(ny):
        for i in range(nx):
            def lap(F):
                c = F[j][i]
                e = F[j][i + 1] if i + 1 < nx else c
                w = F[j][i - 1] if i > 0 else c
                s = F[j + 1][i] if j + 1 < ny else c
                n = F[j - 1][i] if j > 0 else c
                return (e + w + s + n - 4.0 * c) / (dx * dx)
            p, z = P[j][i], Z[j][i]
            g = p * z / (p + h)
            Pn[j][i] = p + dt * (lap(P) + p * (1.0 - p) - g)
            Zn[j][i] = z + dt * (lap(Z) + k * g - m * z)
    return Pn, Zn


def test_drive_step_bitwise_against_loop(rng):
    grid = GridSpec(8, 8)
    P0 = rng.uniform(0.05, 0.6, grid.shape)
    Z0 = rng.uniform(0.1, 0.6, grid.shape)
    st = DriveState(P0.copy(), Z0.copy())
    P, Z = P0.tolist(), Z0.tolist()
    params = DriveParams()
    for _ in range(100):
        st = drive_step(st, params, grid)
        P, Z = scalar_loop_step(P, Z, 2.0, 0.6, 0.4, grid.dx, grid.dt)
    assert np.array_equal(st.P, np.array(P))
    assert np.array_equal(st.Z, np.array(Z))


def test_extinction_fixed_point():
    g = GridSpec(5, 4)
    st = drive_step(DriveState(g.zeros(), g.zeros()), DriveParams(), g)
    assert not st.P.any() and not st.Z.any()


def test_coexistence_fixed_point():
    p, z = coexistence_state()
    assert p == pytest.approx(0.6 * 0.4 / 1.4, abs=1e-15)
    assert z == pytest.approx((1 - p) * (p + 0.4), abs=1e-15)
    assert p == pytest.approx(0.171429, abs=1e-6) and z == pytest.approx(0.473469, abs=1e-6)
    g = GridSpec(6, 5)
    st = drive_step(DriveState(g.full(p), g.full(z)), DriveParams(), g)
    np.testing.assert_allclose(st.P, p, atol=1e-15)
    np.testing.assert_allclose(st.Z, z, atol=1e-15)


def test_logistic_only_step():
    g = GridSpec(4, 3)
    st = drive_step(DriveState(g.full(0.5), g.zeros()), DriveParams(), g)
    np.testing.assert_allclose(st.P, 0.55, rtol=0, atol=1e-15)
    assert st.t == pytest.approx(0.2)


def test_drive_params_validation():
    with pytest.raises(ValueError):
        DriveParams(h=0)
    with pytest.raises(ValueError):
        DriveParams(k=np.array([1.0, np.nan]))


def test_blowup_detected():
    g = GridSpec(3, 3)
    P = g.full(0.2)
    P[1, 1] = np.nan
    with pytest.raises(BlowUpError) as info:
        drive_step(DriveState(P, g.full(0.2)), DriveParams(), g)
    assert info.value.t is not None


def test_simulate_drive_records():
    g = GridSpec(4, 4)
    st = initial_conditions(g, eps=0.01)
    final, frames = simulate_drive(st, DriveParams(), g, 10, every=5)
    assert [s.t for s in frames] == pytest.approx([0.0, 1.0, 2.0])
    assert final is frames[-1]


def test_gaussian_params():
    g = GridSpec(16, 8)
    p = gen_gaussian_params(g, mcenter=8, ncenter=16, sigma=5)
    assert p.k[4, 8] == pytest.approx(2.0, abs=1e-15)
    assert p.m[4, 8] == pytest.approx(0.6, abs=1e-15)
    np.testing.assert_allclose(p.k / p.m, 2.0 / 0.6, rtol=1e-13)
    with pytest.raises(ValueError):
        gen_gaussian_params(g, sigma=0)


def test_sinusoidal_params_against_scan():
    g = GridSpec(300, 300)
    p = gen_sinusoidal_params(g)
    b = np.pi / 150.0
    k_scan = np.array([[0.2 * np.cos(b * x + np.pi / 2) * np.sin(b * y) + 0.5 for x in range(300)]
                       for y in range(300)])
    np.testing.assert_allclose(p.k, k_scan, atol=1e-14)
    assert 0.3 - 1e-12 <= p.k.min() and p.k.max() <= 0.7 + 1e-12
    assert 0.9 - 1e-12 <= p.m.min() and p.m.max() <= 2.1 + 1e-12
    assert p.k.min() == pytest.approx(0.3, abs=1e-3) and p.k.max() == pytest.approx(0.7, abs=1e-3)
    assert p.m.min() == pytest.approx(0.9, abs=3e-3) and p.m.max() == pytest.approx(2.1, abs=3e-3)
    np.testing.assert_allclose(p.k[0], 0.5, atol=1e-15)


def test_swirl_rescale(rng):
    snap = rng.standard_normal((9, 13))
    out = gen_swirl_params(snap, 1.8, 2.4)
    assert out.min() == 1.8 and out.max() == 2.4
    assert out[np.unravel_index(snap.argmin(), snap.shape)] == 1.8
    order = np.argsort(snap, axis=None)
    assert np.all(np.diff(out.ravel()[order]) >= 0)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        mid = gen_swirl_params(np.ones((2, 2)), 1.0, 2.0)
    assert np.all(mid == 1.5) and w


def test_field_noise():
    f = np.linspace(0, 1, 100_000).reshape(100, 1000)
    assert np.array_equal(add_field_noise(f, 0.0, 1), f)
    a, b = add_field_noise(f, 0.1, 7), add_field_noise(f, 0.1, 7)
    assert np.array_equal(a, b)
    d = a - f
    assert abs(d.mean()) <= 3 * d.std() / np.sqrt(d.size)
    assert d.std() == pytest.approx(0.1, rel=0.02)
    with pytest.raises(ValueError):
        add_field_noise(f, -1.0)


def test_initial_conditions():
    g = GridSpec(20, 10)
    p, z = coexistence_state()
    flat = initial_conditions(g, eps=0.0)
    assert np.all(flat.P == p) and np.all(flat.Z == z)
    a = initial_conditions(g, "seeded-random", 0.01, seed=3)
    b = initial_conditions(g, "seeded-random", 0.01, seed=3)
    assert np.array_equal(a.P, b.P) and np.array_equal(a.Z, b.Z)
    for kind in ("planar-perturbation", "seeded-random"):
        st = initial_conditions(g, kind, 0.01, seed=1)
        assert abs(st.P.mean() - p) <= 0.01
        assert np.abs(st.P - p).max() <= 0.01 + 1e-15
    with pytest.raises(ValueError):
        initial_conditions(g, "bogus")

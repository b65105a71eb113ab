import numpy as np
import pytest

from autosync.sensing import SensorSpec, innovation, local_averages, paint, sensor_available, sensor_cells


def _loop_means(P, spec):
    ny, nx = P.shape
    pw, ph, gap = spec.patch_w, spec.patch_h, spec.gap
    rows = []
    y = 0
    while y + ph <= ny:
        row, x = [], 0
        while x + pw <= nx:
            total = 0.0
            for j in range(y, y + ph):
                for i in range(x, x + pw):
                    total += P[j, i]
            row.append(total / (pw * ph))
            x += pw + gap
        rows.append(row)
        y += ph + gap
    return np.array(rows)


def test_constant_field():
    spec = SensorSpec(2, 2, 1)
    assert np.all(local_averages(np.full((11, 17), 0.7), spec) == pytest.approx(0.7, abs=1e-15))


def test_two_by_two_mean():
    assert local_averages(np.array([[1.0, 2.0], [3.0, 4.0]]), SensorSpec(2, 2, 0))[0, 0] == 2.5


@pytest.mark.parametrize("w,h,gap", [(2, 2, 1), (1, 1, 0), (3, 2, 2), (2, 3, 0)])
def test_means_match_loop(rng, w, h, gap):
    P = rng.random((13, 19))
    spec = SensorSpec(w, h, gap)
    np.testing.assert_allclose(local_averages(P, spec), _loop_means(P, spec), rtol=0, atol=1e-15)
    assert local_averages(P, spec).shape == spec.layout(P.shape)


def test_innovation_examples(rng):
    spec = SensorSpec(2, 2, 1)
    P = rng.random((8, 8))
    assert not innovation(P, P, spec).any()
    assert np.all(innovation(np.ones((2, 2)), np.zeros((2, 2)), SensorSpec(2, 2, 0)) == 1.0)
    grid_norm = SensorSpec(2, 2, 0, normalization="grid")
    assert innovation(np.ones((2, 2)), np.zeros((2, 2)), grid_norm, dx=2.0)[0, 0] == 1.0
    A, B, Q = rng.random((3, 8, 8))
    lhs = innovation(2 * A + 3 * B, Q * 0 + 0, spec)
    rhs = 2 * innovation(A, 0 * Q, spec) + 3 * innovation(B, 0 * Q, spec)
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_availability():
    spec = SensorSpec(2, 2, 1)
    mask = np.zeros((5, 5), dtype=bool)
    mask[0, 1] = True
    avail = sensor_available(mask, spec)
    assert avail.shape == (2, 2)
    assert not avail[0, 0] and avail[0, 1] and avail[1, 0] and avail[1, 1]
    mask[:] = False
    mask[2, 2] = True  # gap cell only
    assert sensor_available(mask, spec).all()


def test_paint_and_cells():
    spec = SensorSpec(2, 2, 1)
    cells = sensor_cells(spec, (5, 5))
    assert cells.sum() == 16 and not cells[2].any() and not cells[:, 2].any()
    out = paint(np.array([[1.0, 2.0], [3.0, 4.0]]), spec, (5, 5), fill=-1.0)
    assert out[0, 0] == 1 and out[4, 4] == 4 and out[2, 2] == -1


def test_spec_validation():
    for bad in [dict(patch_w=0), dict(gap=-1), dict(normalization="x")]:
        with pytest.raises(ValueError):
            SensorSpec(**bad)

import numpy as np
import pytest

from autosync.config import parse_config
from autosync.ecology import BlowUpError
from autosync.metrics import ErrorSeries, build_params, global_relative_error, run_scenario, sweep

SMALL = "nx = 32\nny = 16\nepoch = 20\nrecord_every = 10\n"


def test_relative_error_examples(rng):
    t = rng.uniform(0.1, 2, (4, 5))
    assert global_relative_error(t, t) == 0
    assert global_relative_error(t, np.zeros_like(t)) == 1
    assert global_relative_error(np.full((3, 3), 2.0), np.ones((3, 3))) == 0.5
    assert global_relative_error(np.full((3, 3), 2.0), np.ones((3, 3)), mode="cellwise") == pytest.approx(0.5)
    with pytest.raises(ValueError):
        global_relative_error(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        global_relative_error(t, t, mode="l2")


def test_error_series(tmp_path):
    s = ErrorSeries()
    s.append(0.0, {"P": 1.0, "Z": 2.0, "k": 3.0, "m": 4.0})
    s.append(1.0, {"P": 0.5, "Z": 1.0, "k": 1.5, "m": 2.0})
    assert len(s) == 2 and s.final()["P"] == 0.5
    assert np.array_equal(s["k"], [3.0, 1.5])
    s.to_csv(tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == "t,P,Z,k,m"


def test_manifold_start_stays_synchronized():
    cfg = parse_config(SMALL + "start_on_manifold = true\ncloud_coverage = 0.3\ncloud_count = 6\n"
                       "k_source = sinusoidal\nsin_mcenter = 16\nsin_mc = 0.1\nsin_mt = 0.6").replace(epoch=40.0)
    res = run_scenario(cfg)
    # the observer starts on the noisy fields the drive uses
    for q in ("P", "Z", "k_drive", "m_drive"):
        assert res.series[q].max() <= 1e-12


def test_noisy_and_clean_params():
    cfg = parse_config(SMALL + "param_noise = 0.05\nk_source = sinusoidal\nsin_mcenter = 16")
    noisy, clean = build_params(cfg)
    assert not np.array_equal(noisy.k, clean.k)
    assert (noisy.k - clean.k).std() == pytest.approx(0.05 * np.ptp(clean.k), rel=0.3)


def test_run_is_deterministic():
    cfg = parse_config(SMALL + "cloud_coverage = 0.3\ncloud_count = 6\nobs_noise = 0.01\nk_source = swirl\n"
                       "swirl_spinup = 20")
    a, b = run_scenario(cfg), run_scenario(cfg)
    assert a.series.times == b.series.times
    for q in ("P", "Z", "k", "m"):
        assert np.array_equal(a.series[q], b.series[q])
    assert np.array_equal(a.observer.khat, b.observer.khat)


def test_sweep_single_point_matches_run():
    cfg = parse_config(SMALL + "cloud_coverage = 0.2\ncloud_count = 6")
    row = sweep(cfg, "hidden_fraction", [0.2])[0]
    final = run_scenario(cfg).series.final()
    assert row["status"] == "ok"
    for q in ("P", "Z", "k", "m"):
        assert row[q] == final[q]
    with pytest.raises(ValueError):
        sweep(cfg, "temperature", [1])


def test_sweep_marks_failures():
    cfg = parse_config(SMALL + "variant = occluded-sync\nkappa = 1e7\nphat0 = 0")
    row = sweep(cfg, "noise_amplitude", [0.0])[0]
    assert row["status"] == "failed" and np.isnan(row["P"])
    with pytest.raises(BlowUpError):
        run_scenario(cfg)


def test_relative_error_scale_invariant(rng):
    t, e = rng.uniform(0.1, 2, (2, 6, 7))
    assert global_relative_error(3.7 * t, 3.7 * e) == pytest.approx(global_relative_error(t, e), rel=1e-14)


def test_sweep_rows_permute():
    cfg = parse_config(SMALL + "cloud_coverage = 0.2\ncloud_count = 6")
    a = sweep(cfg, "cloud_speed", [0.5, 2.0])
    b = sweep(cfg, "cloud_speed", [2.0, 0.5])
    assert a == b[::-1]


def test_clean_and_drive_parameter_columns():
    # noise scales with the field's range, so a constant field would stay clean
    cfg = parse_config(SMALL + "param_noise = 0.05\nk_source = sinusoidal\nsin_mcenter = 16\nsin_mc = 0.1\nsin_mt = 0.6")
    fin = run_scenario(cfg).series.final()
    assert fin["k"] != fin["k_drive"]
    same = run_scenario(cfg.replace(param_noise=0.0)).series.final()
    assert same["k"] == same["k_drive"] and same["m"] == same["m_drive"]


@pytest.mark.xfail(strict=True, reason="early transient clamps Zhat to exactly 0, an absorbing state; "
                   "khat then drifts without bound for either adaptation sign")
def test_full_observer_converges_six_orders():
    cfg = parse_config("variant = full\nparam_noise = 0\nepoch = 2000\nrecord_every = 50")
    s = run_scenario(cfg).series
    t = np.asarray(s.times)
    i10 = int(np.argmin(np.abs(t - 10.0)))
    for q in ("P", "Z"):
        assert s[q][-1] <= s[q][i10] * 1e-6

import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import chisquare

from metric_bayes.measurement_model import Origin
from metric_bayes.simulator import (
    GT_HEADER,
    Measurement,
    ScenarioConfig,
    compute_scr,
    read_ground_truth,
    simulate_ground_truth,
    simulate_scan,
    simulate_trajectory,
    write_ground_truth,
)
from metric_bayes.tracker import MotionModel, ObsModel

CFG = ScenarioConfig()


def test_noise_free_track():
    cfg = replace(CFG, motion=MotionModel.constant_velocity(0.0, 1.0))
    traj = simulate_trajectory(cfg, np.random.default_rng(0))
    k = np.arange(1, cfg.horizon + 1)
    np.testing.assert_allclose(traj.states[:, 0], 10.0 * k)
    np.testing.assert_allclose(traj.states[:, 1], -5.0 * k)


def test_position_increment_std(rng):
    cfg = replace(CFG, horizon=10_000)
    s = simulate_trajectory(cfg, rng).states
    inc = np.diff(s[:, 0]) - s[:-1, 2]
    assert abs(inc.std() / 3.5 - 1) < 0.02


def test_survival_mean(rng):
    cfg = replace(CFG, horizon=150, apply_survival=True)
    lengths = [int(simulate_trajectory(cfg, rng).alive.sum()) for _ in range(10_000)]
    assert abs(np.mean(lengths) / 20.0 - 1) < 0.05


def test_clean_scan(rng):
    cfg = replace(CFG, clutter_rate=0.0, detection_probability=1.0)
    scan = simulate_scan(np.zeros(4), cfg, rng)
    assert len(scan) == 1 and scan[0].origin is Origin.TARGET


def test_mean_scan_size(rng):
    sizes = [len(simulate_scan(np.zeros(4), CFG, rng)) for _ in range(10_000)]
    assert abs(np.mean(sizes) / 5.95 - 1) < 0.02


def test_clutter_uniform_and_inside(rng):
    pts = []
    for _ in range(4000):
        pts += [m.z for m in simulate_scan(np.zeros(4), CFG, rng) if m.origin is Origin.CLUTTER]
    pts = np.array(pts)
    assert np.all(CFG.region.contains(pts))
    ix = np.clip(((pts + 1000) // 500).astype(int), 0, 3)
    counts = np.bincount(ix[:, 0] * 4 + ix[:, 1], minlength=16)
    assert chisquare(counts).pvalue > 1e-3


def test_labels_partition_scan(rng):
    for _ in range(200):
        scan = simulate_scan(np.zeros(4), CFG, rng)
        assert sum(m.origin is Origin.TARGET for m in scan) in (0, 1)


def test_dead_target_not_detected(rng):
    for _ in range(50):
        scan = simulate_scan(np.zeros(4), CFG, rng, alive=False)
        assert all(m.origin is Origin.CLUTTER for m in scan)


def test_target_noise_covariance(rng):
    cfg = replace(CFG, clutter_rate=0.0, detection_probability=1.0)
    x = np.array([5.0, -5.0, 0.0, 0.0])
    e = np.array([simulate_scan(x, cfg, rng)[0].z - x[:2] for _ in range(100_000)])
    cov = np.cov(e.T)
    assert np.linalg.norm(cov - cfg.obs.Q) / np.linalg.norm(cfg.obs.Q) < 0.05


def test_scr_values():
    assert compute_scr(CFG) == pytest.approx(2000 / math.sqrt(12) / 10)
    assert round(compute_scr(CFG), 2) == 57.74
    doubled = replace(CFG, obs=ObsModel.position(20.0))
    assert compute_scr(doubled) == pytest.approx(compute_scr(CFG) / 2, rel=1e-15)
    assert compute_scr(replace(CFG, obs=ObsModel.position(1e12))) < 1e-8


def test_ground_truth_deterministic():
    a = simulate_ground_truth(CFG, np.random.default_rng(9))
    b = simulate_ground_truth(CFG, np.random.default_rng(9))
    assert a == b


def test_ground_truth_roundtrip(tmp_path):
    gt = simulate_ground_truth(replace(CFG, apply_survival=True), np.random.default_rng(3))
    path = tmp_path / "gt.txt"
    write_ground_truth(gt, path)
    text = path.read_text()
    assert text.startswith(GT_HEADER + "\n") and "\r" not in text
    assert read_ground_truth(path) == gt


def test_ground_truth_bad_file(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("nope\n")
    with pytest.raises(ValueError):
        read_ground_truth(p)


def test_measurement_validation():
    with pytest.raises(ValueError):
        Measurement(np.array([np.nan, 0.0]), Origin.CLUTTER)


def test_scenario_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(horizon=0)
    with pytest.raises(ValueError):
        ScenarioConfig(detection_probability=0.0)

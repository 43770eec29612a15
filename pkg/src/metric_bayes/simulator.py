"""Ground-truth trajectories and cluttered scans for the linear-Gaussian scenario.

Ground truth can be dumped to and replayed from a line-oriented text file,
one scan per line::

    # metric-bayes ground truth v1
    <step>\t<alive 0|1>\t<x> <y> <vx> <vy>\t<zx>,<zy>,<t|c> <zx>,<zy>,<t|c> ...

Floats are written with ``repr`` so a round trip is exact.  The measurement
field is empty for an empty scan.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .dp_core import UniformRect
from .measurement_model import Origin
from .tracker import MotionModel, ObsModel

GT_HEADER = "# metric-bayes ground truth v1"


@dataclass(frozen=True, eq=False)
class Measurement:
    z: np.ndarray
    origin: Origin

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.shape != (2,) or not np.all(np.isfinite(z)):
            raise ValueError(f"measurement must be a finite 2-vector, got {self.z!r}")
        object.__setattr__(self, "z", z)


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    motion: MotionModel = field(default_factory=MotionModel.constant_velocity)
    obs: ObsModel = field(default_factory=ObsModel.position)
    region: UniformRect = field(default_factory=lambda: UniformRect((-1000.0, -1000.0), (1000.0, 1000.0)))
    clutter_rate: float = 5.0
    detection_probability: float = 0.95
    horizon: int = 50
    initial_state: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 10.0, -5.0]))
    initial_cov: np.ndarray = field(default_factory=lambda: np.diag([100.0, 100.0, 25.0, 25.0]))
    apply_survival: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be nonnegative")
        if not 0.0 < self.detection_probability <= 1.0:
            raise ValueError("detection_probability must be in (0, 1]")
        object.__setattr__(self, "initial_state", np.asarray(self.initial_state, dtype=float))
        object.__setattr__(self, "initial_cov", np.asarray(self.initial_cov, dtype=float))


@dataclass(frozen=True, eq=False)
class Trajectory:
    states: np.ndarray
    alive: np.ndarray


@dataclass(frozen=True, eq=False)
class GroundTruth:
    states: np.ndarray
    scans: List[List[Measurement]]
    alive_mask: np.ndarray

    def __post_init__(self):
        if not len(self.states) == len(self.scans) == len(self.alive_mask):
            raise ValueError("states, scans and alive_mask must have equal length")

    def __eq__(self, other):
        if not isinstance(other, GroundTruth) or len(self.scans) != len(other.scans):
            return False
        if not (np.array_equal(self.states, other.states)
                and np.array_equal(self.alive_mask, other.alive_mask)):
            return False
        for a, b in zip(self.scans, other.scans):
            if len(a) != len(b):
                return False
            if any(m.origin is not n.origin or not np.array_equal(m.z, n.z) for m, n in zip(a, b)):
                return False
        return True


def simulate_trajectory(cfg: ScenarioConfig, rng: np.random.Generator) -> Trajectory:
    """States ``x_1 .. x_K`` with ``x_k = A x_{k-1} + n_k`` and ``x_0 = initial_state``.

    With ``apply_survival`` the target leaves the scene after each step with
    probability ``1 - survival_prob``; later states are still propagated but
    flagged dead.
    """
    m = cfg.motion
    k_steps = cfg.horizon
    noise = rng.standard_normal((k_steps, m.A.shape[0])) * m.process_std
    states = np.empty((k_steps, m.A.shape[0]))
    x = cfg.initial_state
    for k in range(k_steps):
        x = m.A @ x + noise[k]
        states[k] = x
    alive = np.ones(k_steps, dtype=bool)
    if cfg.apply_survival and m.survival_prob < 1.0:
        leaves = rng.random(k_steps) >= m.survival_prob
        leaves[0] = False
        if leaves.any():
            alive[int(np.argmax(leaves)):] = False
    return Trajectory(states, alive)


def simulate_scan_points(x_k, cfg: ScenarioConfig, rng: np.random.Generator, alive: bool = True):
    """Array form of :func:`simulate_scan`: ``(points (N, 2), is_target (N,))``."""
    detected = alive and rng.random() < cfg.detection_probability
    n_clutter = rng.poisson(cfg.clutter_rate)
    region = cfg.region
    clutter = region.sample_n(rng, n_clutter)
    if detected:
        chol = np.linalg.cholesky(cfg.obs.Q)
        target = cfg.obs.H @ np.asarray(x_k, dtype=float) + chol @ rng.standard_normal(2)
        pts = np.vstack((target[None, :], clutter))
        is_target = np.zeros(n_clutter + 1, dtype=bool)
        is_target[0] = True
    else:
        pts, is_target = clutter, np.zeros(n_clutter, dtype=bool)
    order = rng.permutation(pts.shape[0])
    return pts[order], is_target[order]


def simulate_scan(x_k, cfg: ScenarioConfig, rng: np.random.Generator,
                  alive: bool = True) -> List[Measurement]:
    """One scan: Bernoulli(P_d) target detection plus Poisson uniform clutter, shuffled."""
    pts, is_target = simulate_scan_points(x_k, cfg, rng, alive)
    return [Measurement(p, Origin.TARGET if t else Origin.CLUTTER) for p, t in zip(pts, is_target)]


def simulate_ground_truth(cfg: ScenarioConfig, rng: np.random.Generator) -> GroundTruth:
    traj = simulate_trajectory(cfg, rng)
    scans = [simulate_scan(x, cfg, rng, bool(a)) for x, a in zip(traj.states, traj.alive)]
    return GroundTruth(traj.states, scans, traj.alive)


def compute_scr(cfg: ScenarioConfig) -> float:
    """Clutter-to-noise spread ratio: per-axis uniform-clutter RMS over measurement-noise RMS.

    ``sqrt(mean_axis(width^2 / 12)) / sqrt(mean_axis(diag Q))``.
    """
    widths = np.subtract(cfg.region.upper, cfg.region.lower)
    clutter_rms = math.sqrt(float(np.mean(widths ** 2 / 12.0)))
    noise_rms = math.sqrt(float(np.mean(np.diag(cfg.obs.Q))))
    return clutter_rms / noise_rms


def write_ground_truth(gt: GroundTruth, path) -> None:
    path = Path(path)
    lines = [GT_HEADER]
    for k, (x, scan, alive) in enumerate(zip(gt.states, gt.scans, gt.alive_mask)):
        state = " ".join(repr(float(v)) for v in x)
        meas = " ".join(f"{float(m.z[0])!r},{float(m.z[1])!r},{'t' if m.origin is Origin.TARGET else 'c'}"
                        for m in scan)
        lines.append(f"{k + 1}\t{int(bool(alive))}\t{state}\t{meas}")
    try:
        path.write_text("\n".join(lines) + "\n", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write ground truth to {path}: {exc}") from exc


def read_ground_truth(path) -> GroundTruth:
    path = Path(path)
    text = path.read_text().splitlines()
    if not text or text[0].strip() != GT_HEADER:
        raise ValueError(f"{path}: not a ground-truth file")
    states, scans, alive = [], [], []
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4 or int(parts[0]) != len(states) + 1:
            raise ValueError(f"{path}:{lineno}: malformed record")
        alive.append(parts[1] == "1")
        states.append([float(v) for v in parts[2].split()])
        scan = []
        for tok in parts[3].split():
            zx, zy, o = tok.split(",")
            scan.append(Measurement(np.array([float(zx), float(zy)]),
                                    Origin.TARGET if o == "t" else Origin.CLUTTER))
        scans.append(scan)
    return GroundTruth(np.array(states), scans, np.array(alive, dtype=bool))

"""Monte Carlo benchmark: every method on shared simulated scans.

One ground-truth trajectory is drawn from the master seed; each run draws
fresh scans along it.  Seeds are derived with ``SeedSequence`` spawn keys:

* ``(0,)``          trajectory
* ``(1, r)``        scans of run ``r``
* ``(2, r, m)``     method ``m`` (index in ``ALL_METHODS``) in run ``r``

so a run's numbers never depend on ``n_runs``, the worker count or which
other methods were requested.
"""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .baselines import GateConfig, nn_step, pda_step
from .clustering import ClusteringError
from .config import ALL_METHODS, RunConfig, canonical_text, config_hash
from .measurement_model import JointPriorConfig
from .simulator import Trajectory, compute_scr, simulate_scan_points, simulate_trajectory
from .tracker import GaussianBelief, ParticleBelief, metric_bayes_step, naive_bayes_step

log = logging.getLogger(__name__)

NON_RESULT_KEYS = ("output", "workers")


def derived_rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=key)))


def compute_mse(estimates, truth) -> np.ndarray:
    """Per-step squared position error ``||p_hat_k - p_k||^2``."""
    est = np.asarray(estimates, dtype=float).reshape(-1, 2)
    tru = np.asarray(truth, dtype=float)
    if est.shape[0] != tru.shape[0]:
        raise ValueError(f"length mismatch: {est.shape[0]} estimates vs {tru.shape[0]} states")
    d = est - tru[:, :2]
    return np.sum(d * d, axis=1)


@dataclass
class MseReport:
    methods: List[str]
    mse: Dict[str, np.ndarray]
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(next(iter(self.mse.values())))

    @property
    def mean_mse(self) -> Dict[str, float]:
        return {m: float(np.mean(self.mse[m])) for m in self.methods}


def trajectory_for(cfg: RunConfig) -> Trajectory:
    return simulate_trajectory(cfg.scenario, derived_rng(cfg.master_seed, 0))


def run_scans(cfg: RunConfig, traj: Trajectory, run: int) -> list:
    """The scans of run ``run`` as ``(N, 2)`` arrays (origin labels dropped)."""
    rng = derived_rng(cfg.master_seed, 1, run)
    return [simulate_scan_points(x, cfg.scenario, rng, bool(a))[0]
            for x, a in zip(traj.states, traj.alive)]


def tracking_prior(cfg: RunConfig) -> JointPriorConfig:
    return JointPriorConfig(alpha_c=cfg.resolved_alpha_c, base_c=cfg.scenario.region,
                            alpha_t=cfg.resolved_alpha_t)


def gate_for(cfg: RunConfig) -> GateConfig:
    sc = cfg.scenario
    return GateConfig.for_scenario(sc.clutter_rate, sc.region.area, sc.detection_probability,
                                   cfg.gate_probability)


def initial_belief(cfg: RunConfig, method: str, rng: np.random.Generator):
    sc = cfg.scenario
    belief = GaussianBelief(sc.initial_state.copy(), sc.initial_cov.copy())
    if cfg.backend == "particle" and method in ("metric_bayes", "naive_bayes"):
        return ParticleBelief.from_gaussian(belief, cfg.n_particles, rng)
    return belief


def run_method(cfg: RunConfig, method: str, scans: list, rng: np.random.Generator) -> np.ndarray:
    """Position estimates ``(K, 2)`` of one method over one run's scans."""
    sc = cfg.scenario
    belief = initial_belief(cfg, method, rng)
    out = np.empty((len(scans), 2))
    if method == "metric_bayes":
        prior = tracking_prior(cfg)
        for k, z in enumerate(scans):
            belief, _ = metric_bayes_step(belief, z, prior, cfg.gibbs, sc.motion, sc.obs, rng,
                                          cfg.metric_update)
            out[k] = belief.position()
    elif method == "naive_bayes":
        for k, z in enumerate(scans):
            belief = naive_bayes_step(belief, z, sc.motion, sc.obs, rng)
            out[k] = belief.position()
    elif method in ("nn", "pda"):
        step = nn_step if method == "nn" else pda_step
        gate = gate_for(cfg)
        for k, z in enumerate(scans):
            belief = step(belief, z, sc.obs, sc.motion, gate)
            out[k] = belief.position()
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(f"{method} produced non-finite estimates")
    return out


def run_single(cfg: RunConfig, traj: Trajectory, run: int) -> Optional[Dict[str, np.ndarray]]:
    """Squared errors per method for run ``run``, or ``None`` if any method failed."""
    scans = run_scans(cfg, traj, run)
    errors = {}
    for method in cfg.methods:
        rng = derived_rng(cfg.master_seed, 2, run, ALL_METHODS.index(method))
        try:
            est = run_method(cfg, method, scans, rng)
        except (np.linalg.LinAlgError, FloatingPointError, ClusteringError) as exc:
            log.warning("run %d: %s failed (%s); run excluded", run, method, exc)
            return None
        errors[method] = compute_mse(est, traj.states)
    return errors


def _run_chunk(args):
    cfg, traj, runs = args
    return [run_single(cfg, traj, r) for r in runs]


def run_monte_carlo(cfg: RunConfig, values: Optional[Dict[str, str]] = None,
                    record_time: bool = False) -> MseReport:
    """Per-step position MSE of each method, averaged over successful runs.

    ``values`` is the key-value echo of the configuration, stored in the
    report metadata together with its hash.  Keys that cannot change the
    numbers (``output``, ``workers``) are left out so reports from identical
    experiments are byte-identical.
    """
    start = time.perf_counter()
    traj = trajectory_for(cfg)
    runs = list(range(cfg.n_runs))
    if cfg.workers > 1:
        chunks = [runs[i::cfg.workers] for i in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(_run_chunk, [(cfg, traj, c) for c in chunks]))
        results = [None] * cfg.n_runs
        for chunk, part in zip(chunks, parts):
            for r, res in zip(chunk, part):
                results[r] = res
    else:
        results = [run_single(cfg, traj, r) for r in runs]

    ok = [res for res in results if res is not None]
    failed = len(results) - len(ok)
    if not ok:
        raise RuntimeError("every Monte Carlo run failed")
    mse = {m: np.mean([res[m] for res in ok], axis=0) for m in cfg.methods}
    meta: Dict[str, object] = {
        "master_seed": cfg.master_seed,
        "n_runs": cfg.n_runs,
        "n_failed": failed,
        "scr": compute_scr(cfg.scenario),
        "mean_mse": {m: float(np.mean(mse[m])) for m in cfg.methods},
    }
    if values is not None:
        echo = {k: v for k, v in values.items() if k not in NON_RESULT_KEYS}
        meta["config"] = dict(sorted(echo.items()))
        meta["config_hash"] = config_hash(echo)
    if record_time:
        meta["wall_time_s"] = time.perf_counter() - start
    return MseReport(list(cfg.methods), mse, meta)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_report(report: MseReport, path) -> None:
    """CSV ``step,<method>...`` (6 significant digits, LF) plus a JSON sidecar."""
    path = Path(path)
    lines = [",".join(["step"] + report.methods)]
    for k in range(report.horizon):
        lines.append(",".join([str(k + 1)] + [_fmt(report.mse[m][k]) for m in report.methods]))
    meta = dict(report.metadata)
    meta["methods"] = list(report.methods)
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        with open(sidecar_path(path), "w", newline="\n") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def read_report(path) -> MseReport:
    path = Path(path)
    try:
        rows = path.read_text().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read report {path}: {exc}") from exc
    if not rows or not rows[0].startswith("step,"):
        raise ValueError(f"{path}: missing 'step,...' header")
    methods = rows[0].split(",")[1:]
    data = np.array([[float(x) for x in r.split(",")] for r in rows[1:] if r.strip()])
    data = data.reshape(-1, len(methods) + 1)
    mse = {m: data[:, i + 1] for i, m in enumerate(methods)}
    meta: Dict[str, object] = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
        meta.pop("methods", None)
    return MseReport(methods, mse, meta)


def summary_table(report: MseReport) -> str:
    header = f"{'method':<14}{'mean MSE':>14}{'final MSE':>14}{'max MSE':>14}"
    out = [header, "-" * len(header)]
    for m in report.methods:
        s = report.mse[m]
        out.append(f"{m:<14}{np.mean(s):>14.6g}{s[-1]:>14.6g}{np.max(s):>14.6g}")
    return "\n".join(out)


__all__ = [
    "MseReport", "compute_mse", "run_monte_carlo", "write_report", "read_report",
    "summary_table", "derived_rng", "run_scans", "trajectory_for", "canonical_text",
]

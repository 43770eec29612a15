"""Per-scan inference: split a scan into target and clutter sets.

The scan is modelled as a DP mixture of Gaussian-location clusters with known
measurement covariance.  New clusters draw their location from

    (alpha_t * H_t + alpha_c * H_c) / (alpha_t + alpha_c)

with ``H_t`` a Gaussian around the predicted measurement and ``H_c`` uniform
over the observation region.  Cluster locations are integrated out, giving
a collapsed Gibbs sampler over assignments only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _kernels
from .dp_core import CrpPartition, UniformRect
from .measurement_model import JointPriorConfig, Origin

LOG2PI = math.log(2.0 * math.pi)


class ClusteringError(ValueError):
    pass


@dataclass(frozen=True)
class GibbsConfig:
    n_sweeps: int = 50
    burn_in: int = 10
    seed: Optional[int] = None

    def __post_init__(self):
        if self.n_sweeps < 1:
            raise ClusteringError("n_sweeps must be positive")
        if not 0 <= self.burn_in < self.n_sweeps:
            raise ClusteringError("burn_in must satisfy 0 <= burn_in < n_sweeps")


@dataclass(frozen=True)
class ScanPartitionResult:
    """Target/clutter split of one scan.

    ``target_log_odds`` is the posterior log-odds that the target cluster's
    location came from ``H_t`` rather than ``H_c``; ``confirmed`` records
    whether the tracker accepted the target set.
    """

    labels: tuple
    cluster_assignments: CrpPartition
    target_cluster: int
    log_likelihood_ratio: float = float("nan")
    target_log_odds: float = float("nan")
    confirmed: bool = True

    @property
    def m_t(self) -> int:
        return sum(1 for lab in self.labels if lab is Origin.TARGET)

    @property
    def m_c(self) -> int:
        return len(self.labels) - self.m_t

    def target_indices(self) -> list:
        return [i for i, lab in enumerate(self.labels) if lab is Origin.TARGET]

    def clutter_indices(self) -> list:
        return [i for i, lab in enumerate(self.labels) if lab is Origin.CLUTTER]


def scan_points(measurements) -> np.ndarray:
    """``(N, 2)`` array from a list of Measurement objects or raw points."""
    if isinstance(measurements, np.ndarray):
        return measurements.reshape(-1, 2).astype(float, copy=False)
    pts = [getattr(m, "z", m) for m in measurements]
    if not pts:
        return np.zeros((0, 2))
    return np.asarray(pts, dtype=float).reshape(-1, 2)


def _clutter_density(prior: JointPriorConfig) -> float:
    base = prior.base_c
    if not isinstance(base, UniformRect):
        raise ClusteringError("collapsed sampler needs a uniform clutter base H_c")
    return 1.0 / base.area


def _target_location_cov(innovation_cov, meas_cov) -> np.ndarray:
    p = np.asarray(innovation_cov, dtype=float) - np.asarray(meas_cov, dtype=float)
    p = 0.5 * (p + p.T)
    if not (p[0, 0] > 0 and p[0, 0] * p[1, 1] - p[0, 1] * p[1, 0] > 0):
        raise ClusteringError("innovation covariance must exceed measurement covariance")
    return p


def _chol2(m):
    a, b, c = float(m[0][0]), float(m[0][1]), float(m[1][1])
    if not a > 0:
        raise ClusteringError("matrix is not positive definite")
    l00 = math.sqrt(a)
    l10 = b / l00
    r = c - l10 * l10
    if not r > 0:
        raise ClusteringError("matrix is not positive definite")
    return l00, l10, math.sqrt(r)


def gibbs_chain(measurements, prior: JointPriorConfig, predicted_meas, innovation_cov,
                meas_cov, cfg: GibbsConfig, rng: Optional[np.random.Generator] = None):
    """Run the collapsed Gibbs chain and return ``(trace, log_joint)``.

    ``trace[s]`` holds slot labels after sweep ``s`` (not canonical; wrap in
    :class:`CrpPartition` to canonicalize).  The chain starts from all
    singletons.
    """
    z = scan_points(measurements)
    n = z.shape[0]
    if n == 0:
        return np.zeros((cfg.n_sweeps, 0), dtype=np.int64), np.zeros(cfg.n_sweeps)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    meas_cov = np.asarray(meas_cov, dtype=float)
    l00, l10, l11 = _chol2(meas_cov)
    p_t = _target_location_cov(innovation_cov, meas_cov)

    # whiten with L^-1 so the measurement covariance becomes I
    winv = np.array([[1.0 / l00, 0.0], [-l10 / (l00 * l11), 1.0 / l11]])
    zw = z @ winv.T
    m0w = winv @ np.asarray(predicted_meas, dtype=float)
    pw = winv @ p_t @ winv.T
    log_jac = math.log(l00) + math.log(l11)

    alpha = prior.alpha_t + prior.alpha_c
    log_wt = math.log(prior.alpha_t / alpha)
    log_wc_dens = math.log(prior.alpha_c / alpha) + math.log(_clutter_density(prior)) + log_jac

    uniforms = rng.random((cfg.n_sweeps, n))
    init = np.arange(n, dtype=np.int64)
    return _kernels.gibbs_sweeps(zw, m0w, pw, log_wt, log_wc_dens, alpha, init, uniforms)


def gibbs_partition(measurements, prior: JointPriorConfig, predicted_meas, innovation_cov,
                    meas_cov, cfg: GibbsConfig = GibbsConfig(),
                    rng: Optional[np.random.Generator] = None) -> CrpPartition:
    """Highest-posterior partition visited after burn-in."""
    trace, logp = gibbs_chain(measurements, prior, predicted_meas, innovation_cov,
                              meas_cov, cfg, rng)
    if trace.shape[1] == 0:
        return CrpPartition(())
    best = cfg.burn_in + int(np.argmax(logp[cfg.burn_in:]))
    return CrpPartition(tuple(trace[best]))


def _gaussian_logpdf(x, mean, cov) -> float:
    """Bivariate normal log density."""
    dx = float(x[0]) - float(mean[0])
    dy = float(x[1]) - float(mean[1])
    a, b, c = float(cov[0][0]), float(cov[0][1]), float(cov[1][1])
    det = a * c - b * b
    if not (a > 0 and det > 0):
        raise ClusteringError("covariance is not positive definite")
    maha = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det
    return -0.5 * maha - 0.5 * math.log(det) - LOG2PI


def classify_clusters(partition: CrpPartition, measurements, predicted_meas,
                      innovation_cov) -> ScanPartitionResult:
    """Label the cluster whose centroid is most probable under ``N(z_pred, S)`` as target.

    Ties (within 1e-9 in log density) go to the larger cluster, then the
    lower cluster index.
    """
    z = scan_points(measurements)
    if partition.num_items != z.shape[0]:
        raise ClusteringError("partition does not match the scan")
    if z.shape[0] == 0:
        return ScanPartitionResult((), partition, -1)
    labels = np.asarray(partition.assignments)
    mean = np.asarray(predicted_meas, dtype=float)
    cov = np.asarray(innovation_cov, dtype=float)
    scores = []
    for k in range(partition.num_clusters):
        centroid = z[labels == k].mean(axis=0)
        scores.append(_gaussian_logpdf(centroid, mean, cov))
    top = max(scores)
    candidates = [k for k, s in enumerate(scores) if s >= top - 1e-9]
    target = min(candidates, key=lambda k: (-partition.cluster_sizes[k], k))
    out = tuple(Origin.TARGET if a == target else Origin.CLUTTER for a in partition.assignments)
    return ScanPartitionResult(out, partition, target)


def target_log_odds(result: ScanPartitionResult, measurements, prior: JointPriorConfig,
                    predicted_meas, innovation_cov, meas_cov) -> float:
    """Posterior log-odds that the target cluster was drawn from ``H_t`` rather than ``H_c``."""
    idx = result.target_indices()
    if not idx:
        return float("-inf")
    z = scan_points(measurements)[idx]
    n = len(idx)
    p_t = _target_location_cov(innovation_cov, meas_cov)
    cov = p_t + np.asarray(meas_cov, dtype=float) / n
    log_t = _gaussian_logpdf(z.mean(axis=0), np.asarray(predicted_meas, dtype=float), cov)
    return (math.log(prior.alpha_t) - math.log(prior.alpha_c)
            + log_t - math.log(_clutter_density(prior)))


def likelihood_ratio(result: ScanPartitionResult, measurements, state, obs,
                     clutter_density) -> float:
    """Log likelihood ratio of the split, target present versus absent.

    ``sum_{Z_t} log N(z; H x, Q) - sum_{Z} log c(z)``: the target set is
    scored by the measurement likelihood, and under the target-absent
    hypothesis every measurement is clutter with density ``c``.
    ``clutter_density`` is a constant or a base measure (e.g.
    :class:`UniformRect`).  A point with zero clutter density cannot be
    clutter, so ``+inf`` is returned to flag certain target origin.
    """
    z = scan_points(measurements)
    x = np.asarray(state, dtype=float)
    pred = obs.H @ x
    total = 0.0
    for i in result.target_indices():
        total += _gaussian_logpdf(z[i], pred, obs.Q)
    for zi in z:
        dens = clutter_density.density(zi) if hasattr(clutter_density, "density") else float(clutter_density)
        if dens <= 0.0:
            return float("inf")
        total -= math.log(dens)
    return total


def partition_scan(measurements, prior: JointPriorConfig, predicted_meas, innovation_cov,
                   meas_cov, cfg: GibbsConfig = GibbsConfig(),
                   rng: Optional[np.random.Generator] = None) -> ScanPartitionResult:
    """Gibbs partition, classification and target-set validation in one call."""
    part = gibbs_partition(measurements, prior, predicted_meas, innovation_cov, meas_cov, cfg, rng)
    result = classify_clusters(part, measurements, predicted_meas, innovation_cov)
    if result.target_cluster < 0:
        return replace(result, confirmed=False)
    odds = target_log_odds(result, measurements, prior, predicted_meas, innovation_cov, meas_cov)
    return replace(result, target_log_odds=odds, confirmed=odds >= 0.0)

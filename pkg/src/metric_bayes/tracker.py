"""Bayes recursion with Gaussian (Kalman) and particle belief backends.

``metric_bayes_step`` predicts, partitions the scan with the joint DP prior
and updates on the target set only.  ``naive_bayes_step`` treats every
measurement as target-originated.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .clustering import (
    GibbsConfig,
    ScanPartitionResult,
    likelihood_ratio,
    partition_scan,
    scan_points,
)
from .dp_core import CrpPartition
from .measurement_model import JointPriorConfig

log = logging.getLogger(__name__)

LOG2PI = math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MotionModel:
    """Linear motion ``x' = A x + n`` with ``n ~ N(0, diag(sigma^2 B B^T))``.

    Only the diagonal of ``sigma^2 B B^T`` is kept.  ``survival_prob`` is
    carried for the simulator; the filters ignore it.
    """

    A: np.ndarray
    B: np.ndarray
    sigma: float
    dt: float
    survival_prob: float = 1.0

    def __post_init__(self):
        if not self.dt > 0 or not self.sigma >= 0 or not 0.0 <= self.survival_prob <= 1.0:
            raise ValueError("need dt > 0, sigma >= 0 and survival_prob in [0, 1]")
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float).reshape(A.shape[0], -1)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        q = np.diag(np.diag(self.sigma ** 2 * B @ B.T))
        object.__setattr__(self, "process_cov", q)
        object.__setattr__(self, "process_std", np.sqrt(np.diag(q)))

    @classmethod
    def constant_velocity(cls, sigma: float = 7.0, dt: float = 1.0,
                          survival_prob: float = 0.95) -> "MotionModel":
        A = np.array([[1.0, 0.0, dt, 0.0],
                      [0.0, 1.0, 0.0, dt],
                      [0.0, 0.0, 1.0, 0.0],
                      [0.0, 0.0, 0.0, 1.0]])
        B = dt * np.array([[0.5], [0.5], [1.0], [1.0]])
        return cls(A, B, sigma, dt, survival_prob)


@dataclass(frozen=True, eq=False)
class ObsModel:
    """Linear observation ``z = H x + v`` with ``v ~ N(0, Q)``."""

    H: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.shape != (H.shape[0], H.shape[0]):
            raise ValueError("Q must be square with one row per observation")
        np.linalg.cholesky(Q)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "Q", Q)

    @classmethod
    def position(cls, meas_std: float = 10.0) -> "ObsModel":
        H = np.array([[1.0, 0.0, 0.0, 0.0],
                      [0.0, 1.0, 0.0, 0.0]])
        return cls(H, meas_std ** 2 * np.eye(2))


# ---------------------------------------------------------------------------
# Beliefs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def position(self) -> np.ndarray:
        return self.mean[:2]


@dataclass(frozen=True, eq=False)
class ParticleBelief:
    points: np.ndarray
    log_weights: np.ndarray

    @classmethod
    def from_gaussian(cls, belief: GaussianBelief, n_particles: int,
                      rng: np.random.Generator) -> "ParticleBelief":
        pts = rng.multivariate_normal(belief.mean, belief.cov, size=n_particles)
        return cls(pts, np.full(n_particles, -math.log(n_particles)))

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def cov(self) -> np.ndarray:
        w = self.weights
        d = self.points - w @ self.points
        return (d * w[:, None]).T @ d

    def ess(self) -> float:
        return 1.0 / float(np.sum(self.weights ** 2))

    def position(self) -> np.ndarray:
        return self.mean()[:2]


Belief = Union[GaussianBelief, ParticleBelief]


def _repair(cov: np.ndarray) -> np.ndarray:
    cov = 0.5 * (cov + cov.T)
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(cov)
        floor = 1e-9 * max(float(np.trace(cov)), 1e-12)
        log.warning("covariance lost positive definiteness (min eig %.3g); flooring", vals.min())
        cov = (vecs * np.maximum(vals, floor)) @ vecs.T
        cov = 0.5 * (cov + cov.T)
    return cov


def _normalize(log_w: np.ndarray) -> np.ndarray:
    top = log_w.max()
    return log_w - (top + math.log(np.sum(np.exp(log_w - top))))


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = weights.size
    positions = (rng.random() + np.arange(n)) / n
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    return np.searchsorted(cum, positions, side="right")


# ---------------------------------------------------------------------------
# Recursion
# ---------------------------------------------------------------------------

def predict(belief: Belief, model: MotionModel, rng: Optional[np.random.Generator] = None) -> Belief:
    if isinstance(belief, GaussianBelief):
        A = model.A
        return GaussianBelief(A @ belief.mean, _repair(A @ belief.cov @ A.T + model.process_cov))
    if rng is None:
        raise ValueError("particle prediction needs an rng")
    noise = rng.standard_normal(belief.points.shape) * model.process_std
    return ParticleBelief(belief.points @ model.A.T + noise, belief.log_weights)


def innovation(belief: Belief, obs: ObsModel):
    """Predicted measurement and innovation covariance ``H P H^T + Q``."""
    if isinstance(belief, GaussianBelief):
        mean, cov = belief.mean, belief.cov
    else:
        mean, cov = belief.mean(), belief.cov()
    H = obs.H
    return H @ mean, H @ cov @ H.T + obs.Q


def inv_small(S: np.ndarray) -> np.ndarray:
    """Inverse of a 1x1 or 2x2 matrix in closed form, ``np.linalg.inv`` otherwise."""
    if S.shape == (2, 2):
        a, b, c, d = S[0, 0], S[0, 1], S[1, 0], S[1, 1]
        det = a * d - b * c
        if det == 0.0:
            raise np.linalg.LinAlgError("singular innovation covariance")
        return np.array([[d, -b], [-c, a]]) / det
    return np.linalg.inv(S)


def kalman_update(mean: np.ndarray, cov: np.ndarray, z, obs: ObsModel):
    """Single-measurement Kalman update; returns ``(mean, cov)``."""
    H = obs.H
    S = H @ cov @ H.T + obs.Q
    PHt = cov @ H.T
    K = PHt @ inv_small(S)
    mean = mean + K @ (np.asarray(z, dtype=float) - H @ mean)
    cov = cov - K @ S @ K.T
    return mean, 0.5 * (cov + cov.T)


def update(belief: Belief, target_meas, obs: ObsModel,
           rng: Optional[np.random.Generator] = None, resample_threshold: float = 0.5) -> Belief:
    """Bayes update on a set of target measurements (empty set: unchanged)."""
    z = scan_points(target_meas)
    if z.shape[0] == 0:
        return belief
    if isinstance(belief, GaussianBelief):
        mean, cov = belief.mean, belief.cov
        for zi in z:
            mean, cov = kalman_update(mean, cov, zi, obs)
        return GaussianBelief(mean, _repair(cov))

    pred = belief.points @ obs.H.T
    chol = np.linalg.cholesky(obs.Q)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    log_w = belief.log_weights.copy()
    for zi in z:
        r = np.linalg.solve(chol, (zi - pred).T)
        log_w += -0.5 * np.sum(r * r, axis=0) - 0.5 * logdet - 0.5 * z.shape[1] * LOG2PI
    return _maybe_resample(ParticleBelief(belief.points, _normalize(log_w)), rng, resample_threshold)


def _cluster_log_lik(z: np.ndarray, pred: np.ndarray, Q: np.ndarray, Qinv: np.ndarray,
                     logdet: float) -> np.ndarray:
    """``sum_i log N(z_i; pred_p, Q)`` for each row ``pred_p`` of ``pred``."""
    total = np.zeros(pred.shape[0])
    for zi in z:
        r = zi - pred
        total += -0.5 * np.einsum("ij,jk,ik->i", r, Qinv, r)
    return total - z.shape[0] * (0.5 * logdet + 0.5 * z.shape[1] * LOG2PI)


def clutter_cluster_log_marginal(z: np.ndarray, Q: np.ndarray, area: float) -> float:
    """``log int prod_i N(z_i; theta, Q) dtheta / area`` (edge effects ignored)."""
    zbar = z.mean(axis=0)
    n = z.shape[0]
    Qinv = inv_small(Q)
    logdet = math.log(np.linalg.det(Q))
    r = z - zbar
    within = -0.5 * float(np.einsum("ij,jk,ik->", r, Qinv, r))
    dim = z.shape[1]
    # prod N(z_i; zbar, Q) / N(zbar; zbar, Q / n)
    log_c = within - 0.5 * (n - 1) * (dim * LOG2PI + logdet) - 0.5 * dim * math.log(n)
    return log_c - math.log(area)


def validated_update(pred: Belief, z_t: np.ndarray, log_odds: float, obs: ObsModel,
                     alpha_t: float, alpha_c: float, area: float,
                     rng: Optional[np.random.Generator] = None,
                     resample_threshold: float = 0.5) -> Belief:
    """Bayes update under {target cluster is the target, target missed and cluster is clutter}.

    Gaussian backend: the two-component posterior is moment-matched, with the
    target hypothesis weighted by ``sigmoid(log_odds)``.  Particle backend:
    exact, each particle is reweighted by
    ``alpha_t prod N(z_i; H x, Q) + alpha_c M_clutter``.
    """
    if z_t.shape[0] == 0:
        return pred
    if isinstance(pred, GaussianBelief):
        if log_odds >= 0:
            p = 1.0 / (1.0 + math.exp(-log_odds))
        else:
            e = math.exp(log_odds)
            p = e / (1.0 + e)
        if p == 0.0:
            return pred
        post = update(pred, z_t, obs)
        if p == 1.0:
            return post
        mean = p * post.mean + (1.0 - p) * pred.mean
        d1 = post.mean - mean
        d0 = pred.mean - mean
        cov = p * (post.cov + np.outer(d1, d1)) + (1.0 - p) * (pred.cov + np.outer(d0, d0))
        return GaussianBelief(mean, _repair(cov))

    Q = obs.Q
    Qinv = inv_small(Q)
    logdet = math.log(np.linalg.det(Q))
    lt = math.log(alpha_t) + _cluster_log_lik(z_t, pred.points @ obs.H.T, Q, Qinv, logdet)
    lc = math.log(alpha_c) + clutter_cluster_log_marginal(z_t, Q, area)
    log_w = _normalize(pred.log_weights + np.logaddexp(lt, lc))
    return _maybe_resample(ParticleBelief(pred.points, log_w), rng, resample_threshold)


def _maybe_resample(belief: ParticleBelief, rng, threshold: float) -> ParticleBelief:
    n = belief.log_weights.size
    if belief.ess() < threshold * n:
        if rng is None:
            raise ValueError("particle resampling needs an rng")
        idx = systematic_resample(belief.weights, rng)
        return ParticleBelief(belief.points[idx], np.full(n, -math.log(n)))
    return belief


def _empty_result() -> ScanPartitionResult:
    return ScanPartitionResult((), CrpPartition(()), -1, log_likelihood_ratio=0.0, confirmed=False)


UPDATE_MODES = ("soft", "hard")


def metric_bayes_step(belief: Belief, raw_scan, prior: JointPriorConfig, gibbs: GibbsConfig,
                      motion: MotionModel, obs: ObsModel,
                      rng: Optional[np.random.Generator] = None, mode: str = "soft"):
    """One METRIC-Bayes recursion; returns ``(posterior, ScanPartitionResult)``.

    ``mode="soft"`` weighs the target-set update against the missed-detection
    hypothesis (see :func:`validated_update`).  ``mode="hard"`` uses the
    target set only if ``result.confirmed`` and predicts otherwise.
    """
    if mode not in UPDATE_MODES:
        raise ValueError(f"mode must be one of {UPDATE_MODES}")
    if rng is None:
        rng = np.random.default_rng(gibbs.seed)
    pred = predict(belief, motion, rng)
    z = scan_points(raw_scan)
    if z.shape[0] == 0:
        return pred, _empty_result()
    z_pred, S = innovation(pred, obs)
    result = partition_scan(z, prior, z_pred, S, obs.Q, gibbs, rng)
    state = pred.mean if isinstance(pred, GaussianBelief) else pred.mean()
    llr = likelihood_ratio(result, z, state, obs, prior.base_c)
    result = replace(result, log_likelihood_ratio=llr)
    z_t = z[result.target_indices()]
    if mode == "hard":
        return update(pred, z_t if result.confirmed else z[:0], obs, rng), result
    area = prior.base_c.area
    post = validated_update(pred, z_t, result.target_log_odds, obs,
                            prior.alpha_t, prior.alpha_c, area, rng)
    return post, result


def naive_bayes_step(belief: Belief, raw_scan, motion: MotionModel, obs: ObsModel,
                     rng: Optional[np.random.Generator] = None) -> Belief:
    """Predict, then update treating every measurement as target-originated."""
    pred = predict(belief, motion, rng)
    return update(pred, raw_scan, obs, rng)

"""Nearest-neighbour and probabilistic data association filters."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import chi2

from .clustering import scan_points
from .tracker import GaussianBelief, MotionModel, ObsModel, _repair, inv_small, kalman_update, predict


@lru_cache(maxsize=64)
def _chi2_threshold(p: float, dim: int) -> float:
    return float(chi2.ppf(p, dim))


@dataclass(frozen=True)
class GateConfig:
    """Validation gate and association parameters.

    ``gate_probability = 1`` disables gating (infinite gate).
    """

    gate_probability: float = 0.99
    detection_probability: float = 0.95
    clutter_spatial_density: float = 5.0 / (2000.0 * 2000.0)

    def __post_init__(self):
        if not 0.0 < self.gate_probability <= 1.0:
            raise ValueError("gate_probability must be in (0, 1]")
        if not 0.0 < self.detection_probability <= 1.0:
            raise ValueError("detection_probability must be in (0, 1]")
        if self.clutter_spatial_density < 0:
            raise ValueError("clutter_spatial_density must be nonnegative")

    def threshold(self, dim: int = 2) -> float:
        if self.gate_probability >= 1.0:
            return math.inf
        return _chi2_threshold(self.gate_probability, dim)

    @classmethod
    def for_scenario(cls, clutter_rate: float, area: float, detection_probability: float,
                     gate_probability: float = 0.99) -> "GateConfig":
        """Gate matched to a Poisson-uniform clutter scenario.

        With no clutter there is nothing to reject, so gating is switched off.
        """
        if clutter_rate == 0:
            gate_probability = 1.0
        return cls(gate_probability, detection_probability, clutter_rate / area)


def _gated(belief: GaussianBelief, z: np.ndarray, obs: ObsModel, gate: GateConfig):
    z_pred = obs.H @ belief.mean
    S = obs.H @ belief.cov @ obs.H.T + obs.Q
    nu = z - z_pred
    d2 = np.einsum("ij,jk,ik->i", nu, inv_small(S), nu)
    keep = d2 <= gate.threshold(z.shape[1])
    return nu, d2, keep, S


def nn_step(belief: GaussianBelief, raw_scan, obs: ObsModel, motion: MotionModel,
            gate: GateConfig = GateConfig()) -> GaussianBelief:
    """Predict, then Kalman-update with the closest gated measurement."""
    pred = predict(belief, motion)
    z = scan_points(raw_scan)
    if z.shape[0] == 0:
        return pred
    _, d2, keep, _ = _gated(pred, z, obs, gate)
    if not keep.any():
        return pred
    idx = np.flatnonzero(keep)
    best = idx[np.argmin(d2[idx])]
    mean, cov = kalman_update(pred.mean, pred.cov, z[best], obs)
    return GaussianBelief(mean, _repair(cov))


def association_probabilities(d2, S, gate: GateConfig) -> np.ndarray:
    """``[beta_0, beta_1, ..., beta_m]`` for gated squared Mahalanobis distances."""
    d2 = np.asarray(d2, dtype=float)
    if d2.size == 0:
        return np.ones(1)
    dim = S.shape[0]
    p_d = gate.detection_probability
    p_g = gate.gate_probability
    # scale by exp(-min d2 / 2) so distant-but-gated points do not underflow
    shift = d2.min()
    log_norm = -0.5 * dim * math.log(2 * math.pi) - 0.5 * math.log(np.linalg.det(S))
    lik = p_d * np.exp(log_norm - 0.5 * (d2 - shift))
    miss = gate.clutter_spatial_density * (1.0 - p_d * p_g) * math.exp(0.5 * shift)
    beta = np.concatenate(([miss], lik))
    return beta / beta.sum()


def pda_step(belief: GaussianBelief, raw_scan, obs: ObsModel, motion: MotionModel,
             gate: GateConfig = GateConfig(), return_beta: bool = False):
    """Parametric PDA update with spread-of-innovations covariance term."""
    pred = predict(belief, motion)
    z = scan_points(raw_scan)
    if z.shape[0] == 0:
        return (pred, np.ones(1)) if return_beta else pred
    nu, d2, keep, S = _gated(pred, z, obs, gate)
    if not keep.any():
        return (pred, np.ones(1)) if return_beta else pred
    nu, d2 = nu[keep], d2[keep]
    beta = association_probabilities(d2, S, gate)
    b0, b = beta[0], beta[1:]
    P = pred.cov
    K = P @ obs.H.T @ inv_small(S)
    nu_bar = b @ nu
    mean = pred.mean + K @ nu_bar
    p_c = P - K @ S @ K.T
    spread = (nu * b[:, None]).T @ nu - np.outer(nu_bar, nu_bar)
    cov = b0 * P + (1.0 - b0) * p_c + K @ spread @ K.T
    post = GaussianBelief(mean, _repair(cov))
    return (post, beta) if return_beta else post

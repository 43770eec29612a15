"""Joint Dirichlet-process prior over clutter and target measurement parameters.

Clutter parameters come from ``G_c ~ DP(alpha_c, H_c)``.  Given the clutter
draws ``theta``, the target prior is ``DP(alpha_t, H_t + sum_n delta(theta_n))``
whose base has total mass ``1 + N``.  That unnormalized base is carried as a
DP with concentration ``alpha_t * (1 + N)`` over the normalized mixture.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dp_core import (
    DEFAULT_TRUNCATION,
    BaseMeasure,
    DiscreteMeasure,
    DpParameterError,
    DpParams,
    MixtureMeasure,
    sample_dp,
)


class Origin(enum.Enum):
    TARGET = "target"
    CLUTTER = "clutter"


@dataclass(frozen=True)
class JointPriorConfig:
    """Hyperparameters ``([alpha_c, H_c], [alpha_t, H_t])``.

    ``base_t`` may be ``None`` when the prior is used for tracking: the
    target base is then built each scan around the predicted measurement.
    """

    alpha_c: float
    base_c: BaseMeasure
    alpha_t: float
    base_t: Optional[BaseMeasure] = None
    truncation: int = DEFAULT_TRUNCATION

    def __post_init__(self):
        if not self.alpha_c > 0 or not self.alpha_t > 0:
            raise DpParameterError("alpha_c and alpha_t must be positive")
        if int(self.truncation) < 1:
            raise DpParameterError("truncation must be positive")


@dataclass(frozen=True, eq=False)
class ScanParams:
    """Per-scan parameter sets: clutter ``theta`` and target ``w``."""

    theta: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        if len(self.theta) != len(self.w):
            raise DpParameterError("theta and w must have equal length")

    @property
    def n_k(self) -> int:
        return len(self.theta)


def draw_clutter_prior(config: JointPriorConfig, rng: np.random.Generator) -> DiscreteMeasure:
    return sample_dp(DpParams(config.alpha_c, config.base_c), config.truncation, rng)


def draw_from_measure(g: DiscreteMeasure, n_k: int, rng: np.random.Generator) -> np.ndarray:
    """``n_k`` i.i.d. draws from a truncated DP realisation.

    Draws that land in the unbroken tail get a fresh atom from ``g.base``.
    """
    dim = g.atoms.shape[1] if g.atoms is not None and g.atoms.ndim == 2 else (g.base.dim if g.base else 0)
    if n_k == 0:
        return np.zeros((0, dim))
    if n_k < 0:
        raise DpParameterError("n_k must be nonnegative")
    probs = np.append(g.weights, g.tail_mass)
    idx = rng.choice(probs.size, size=n_k, p=probs / probs.sum())
    out = np.empty((n_k, dim))
    in_tail = idx == g.weights.size
    out[~in_tail] = g.atoms[idx[~in_tail]]
    k = int(in_tail.sum())
    if k:
        if g.base is None:
            raise DpParameterError("tail draw requested but measure carries no base")
        out[in_tail] = g.base.sample_n(rng, k)
    return out


def draw_theta(g_c: DiscreteMeasure, n_k: int, rng: np.random.Generator) -> np.ndarray:
    return draw_from_measure(g_c, n_k, rng)


def target_base(config: JointPriorConfig, theta) -> DpParams:
    """``DP(alpha_t, H_t + sum delta(theta_n))`` as a normalized DpParams."""
    if config.base_t is None:
        raise DpParameterError("target base measure H_t is not set")
    theta = np.asarray(theta, dtype=float).reshape(-1, config.base_t.dim)
    n = theta.shape[0]
    if n == 0:
        return DpParams(config.alpha_t, config.base_t)
    mass = 1.0 + n
    mix = MixtureMeasure(config.base_t, 1.0 / mass, theta, np.full(n, 1.0 / mass))
    return DpParams(config.alpha_t, mix, total_mass=mass).normalized()


def draw_target_prior(config: JointPriorConfig, theta, rng: np.random.Generator) -> DiscreteMeasure:
    return sample_dp(target_base(config, theta), config.truncation, rng)


def draw_w(g_t: DiscreteMeasure, n_k: int, rng: np.random.Generator) -> np.ndarray:
    return draw_from_measure(g_t, n_k, rng)


def generate_scan_params(config: JointPriorConfig, n_k: int, rng: np.random.Generator) -> ScanParams:
    """Full generative block: ``G_c -> theta -> G_t | theta -> w``."""
    dim = config.base_c.dim
    if n_k == 0:
        return ScanParams(np.zeros((0, dim)), np.zeros((0, dim)))
    g_c = draw_clutter_prior(config, rng)
    theta = draw_theta(g_c, n_k, rng)
    g_t = draw_target_prior(config, theta, rng)
    w = draw_w(g_t, n_k, rng)
    return ScanParams(theta, w)


def draw_measurements(params: ScanParams, is_target, rng: np.random.Generator,
                      target_cov, clutter_cov=None) -> np.ndarray:
    """Measurements given parameters.

    Measurement ``n`` is ``N(w[n], target_cov)`` if ``is_target[n]`` and
    ``N(theta[n], clutter_cov)`` otherwise; ``clutter_cov`` defaults to
    ``target_cov``.
    """
    is_target = np.asarray(is_target, dtype=bool)
    if is_target.size != params.n_k:
        raise DpParameterError("is_target must have one flag per parameter")
    target_cov = np.asarray(target_cov, dtype=float)
    clutter_cov = target_cov if clutter_cov is None else np.asarray(clutter_cov, dtype=float)
    centers = np.where(is_target[:, None], params.w, params.theta)
    eps = rng.standard_normal(centers.shape)
    lt, lc = np.linalg.cholesky(target_cov), np.linalg.cholesky(clutter_cov)
    noise = np.where(is_target[:, None], eps @ lt.T, eps @ lc.T)
    return centers + noise

"""Dirichlet-process primitives.

Stick-breaking (GEM) weights, truncated DP draws, the conjugate posterior
update, Chinese-restaurant-process predictive probabilities and partition
sampling.  Every sampler takes an explicit ``numpy.random.Generator``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DEFAULT_TRUNCATION = 200
DEFAULT_TAIL_TOL = 1e-8
MAX_BREAKS = 100_000


class DpParameterError(ValueError):
    """Invalid concentration, truncation or partition."""


def _as_points(points, dim: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, dim) if dim and arr.size % dim == 0 and arr.size else arr.reshape(1, -1)
    if arr.size == 0:
        return np.zeros((0, dim or 0))
    return arr


# ---------------------------------------------------------------------------
# Base measures
# ---------------------------------------------------------------------------

class BaseMeasure:
    """Probability measure over a parameter space.

    Subclasses implement :meth:`sample_n` and :meth:`density`.  ``density``
    is the density of the absolutely continuous part with respect to
    Lebesgue measure; point masses contribute nothing to it.
    """

    dim: int

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_n(rng, 1)[0]

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def density(self, point) -> float:
        raise NotImplementedError

    @property
    def support(self):
        """Bounding box ``(lower, upper)`` or ``None`` if unbounded."""
        return None


@dataclass(frozen=True)
class UniformRect(BaseMeasure):
    """Uniform distribution over an axis-aligned rectangle."""

    lower: tuple
    upper: tuple
    area: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or any(h <= l for l, h in zip(lo, hi)):
            raise DpParameterError(f"degenerate rectangle {lo} .. {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "area", float(np.prod(np.subtract(hi, lo))))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def support(self):
        return self.lower, self.upper

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def sample_n(self, rng, n):
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))

    def density(self, point) -> float:
        inside = all(l <= float(v) <= h for v, l, h in zip(point, self.lower, self.upper))
        return 1.0 / self.area if inside else 0.0


@dataclass(frozen=True, eq=False)
class GaussianMeasure(BaseMeasure):
    """Multivariate normal ``N(mean, cov)``."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise DpParameterError("covariance shape does not match mean")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", np.linalg.cholesky(cov))

    @property
    def dim(self) -> int:
        return self.mean.size

    def sample_n(self, rng, n):
        return self.mean + rng.standard_normal((n, self.dim)) @ self._chol.T

    def log_density(self, point) -> float:
        d = np.asarray(point, dtype=float) - self.mean
        y = np.linalg.solve(self._chol, d)
        logdet = 2.0 * np.sum(np.log(np.diag(self._chol)))
        return float(-0.5 * (y @ y) - 0.5 * logdet - 0.5 * self.dim * math.log(2 * math.pi))

    def density(self, point) -> float:
        return math.exp(self.log_density(point))


@dataclass(frozen=True, eq=False)
class PointMass(BaseMeasure):
    """Dirac measure at ``location``."""

    location: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "location", np.atleast_1d(np.asarray(self.location, dtype=float)))

    @property
    def dim(self) -> int:
        return self.location.size

    def sample_n(self, rng, n):
        return np.tile(self.location, (n, 1))

    def density(self, point) -> float:
        return 0.0


@dataclass(frozen=True, eq=False)
class MixtureMeasure(BaseMeasure):
    """``base_weight * base + sum_i atom_weights[i] * delta(atoms[i])``.

    The weights must sum to one.  This is the form taken by a DP posterior
    base measure and by the composite target base of the joint prior.
    """

    base: BaseMeasure
    base_weight: float
    atoms: np.ndarray
    atom_weights: np.ndarray

    def __post_init__(self):
        atoms = _as_points(self.atoms, self.base.dim)
        if atoms.shape[0] == 0:
            atoms = np.zeros((0, self.base.dim))
        weights = np.asarray(self.atom_weights, dtype=float).reshape(-1)
        if weights.size != atoms.shape[0]:
            raise DpParameterError("atoms and atom_weights differ in length")
        bw = float(self.base_weight)
        if bw < 0 or np.any(weights < 0):
            raise DpParameterError("mixture weights must be nonnegative")
        if abs(bw + weights.sum() - 1.0) > 1e-9:
            raise DpParameterError("mixture weights must sum to one")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "atom_weights", weights)
        object.__setattr__(self, "base_weight", bw)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def support(self):
        return self.base.support

    def sample_n(self, rng, n):
        probs = np.append(self.atom_weights, self.base_weight)
        probs = probs / probs.sum()
        idx = rng.choice(probs.size, size=n, p=probs)
        out = np.empty((n, self.dim))
        from_base = idx == self.atoms.shape[0]
        out[~from_base] = self.atoms[idx[~from_base]]
        k = int(from_base.sum())
        if k:
            out[from_base] = self.base.sample_n(rng, k)
        return out

    def density(self, point) -> float:
        return self.base_weight * self.base.density(point)


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DpParams:
    """Concentration and base measure of ``DP(alpha, base)``.

    ``total_mass`` is the mass of the (possibly unnormalized) base.  The
    process is the same as ``DP(alpha * total_mass, base / total_mass)``;
    ``base`` itself is always stored normalized.
    """

    alpha: float
    base: BaseMeasure
    total_mass: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise DpParameterError(f"alpha must be positive, got {self.alpha}")
        if not self.total_mass > 0:
            raise DpParameterError(f"total_mass must be positive, got {self.total_mass}")

    @property
    def effective_alpha(self) -> float:
        return self.alpha * self.total_mass

    def normalized(self) -> "DpParams":
        if self.total_mass == 1.0:
            return self
        return DpParams(self.effective_alpha, self.base, 1.0)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Truncated draw ``sum_k weights[k] * delta(atoms[k])`` plus unbroken tail.

    ``base`` is kept so that draws landing in the tail can be resolved with a
    fresh atom from the base measure.
    """

    atoms: Optional[np.ndarray]
    weights: np.ndarray
    tail_mass: float
    base: Optional[BaseMeasure] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or self.tail_mass < 0:
            raise DpParameterError("negative weight")
        if abs(w.sum() + self.tail_mass - 1.0) > 1e-12:
            raise DpParameterError("weights and tail do not sum to one")
        if self.atoms is not None and len(self.atoms) != w.size:
            raise DpParameterError("atoms and weights differ in length")
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True)
class CrpPartition:
    """Cluster index per item, labelled in order of first appearance."""

    assignments: tuple
    cluster_sizes: tuple = field(init=False)

    def __post_init__(self):
        labels = tuple(int(a) for a in self.assignments)
        canon, mapping = [], {}
        for a in labels:
            if a < 0:
                raise DpParameterError("negative cluster index")
            canon.append(mapping.setdefault(a, len(mapping)))
        sizes = [0] * len(mapping)
        for c in canon:
            sizes[c] += 1
        object.__setattr__(self, "assignments", tuple(canon))
        object.__setattr__(self, "cluster_sizes", tuple(sizes))

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "CrpPartition":
        """Partition with consecutive blocks of the given sizes."""
        if any(int(s) < 1 for s in sizes):
            raise DpParameterError("cluster sizes must be positive")
        return cls(tuple(k for k, s in enumerate(sizes) for _ in range(int(s))))

    @property
    def num_items(self) -> int:
        return len(self.assignments)

    @property
    def num_clusters(self) -> int:
        return len(self.cluster_sizes)

    def members(self, k: int) -> list:
        return [i for i, a in enumerate(self.assignments) if a == k]

    def blocks(self) -> frozenset:
        """The partition as a set of frozensets of item indices."""
        return frozenset(frozenset(self.members(k)) for k in range(self.num_clusters))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def _check_alpha(alpha):
    if not (np.isscalar(alpha) and np.isfinite(alpha) and alpha > 0):
        raise DpParameterError(f"alpha must be a positive finite scalar, got {alpha!r}")


def stick_weights(fractions) -> DiscreteMeasure:
    """Weights ``v_k * prod_{j<k} (1 - v_j)`` from given break fractions."""
    v = np.asarray(fractions, dtype=float).reshape(-1)
    if np.any((v < 0) | (v > 1)):
        raise DpParameterError("break fractions must lie in [0, 1]")
    remaining = np.concatenate(([1.0], np.cumprod(1.0 - v)))
    weights = v * remaining[:-1]
    return DiscreteMeasure(None, weights, float(remaining[-1]))


def sample_stick_breaking(alpha: float, truncation: int, rng: np.random.Generator,
                          tail_tol: Optional[float] = None) -> DiscreteMeasure:
    """Draw GEM(alpha) weights.

    Exactly ``truncation`` breaks are made unless ``tail_tol`` is given, in
    which case the stick keeps breaking past ``truncation`` until the tail
    mass falls below ``tail_tol`` (at most ``MAX_BREAKS`` breaks).
    """
    _check_alpha(alpha)
    if int(truncation) != truncation or truncation < 1:
        raise DpParameterError(f"truncation must be a positive integer, got {truncation!r}")
    v = rng.beta(1.0, alpha, size=int(truncation))
    if tail_tol is not None:
        log_tail = np.sum(np.log1p(-v))
        chunk = int(truncation)
        while log_tail >= math.log(tail_tol) and v.size < MAX_BREAKS:
            extra = rng.beta(1.0, alpha, size=min(chunk, MAX_BREAKS - v.size))
            v = np.concatenate((v, extra))
            log_tail += np.sum(np.log1p(-extra))
    return stick_weights(v)


def sample_dp(params: DpParams, truncation: int, rng: np.random.Generator,
              tail_tol: Optional[float] = DEFAULT_TAIL_TOL) -> DiscreteMeasure:
    """Truncated draw ``G ~ DP(alpha, H)`` with atoms i.i.d. from ``H``."""
    params = params.normalized()
    sticks = sample_stick_breaking(params.alpha, truncation, rng, tail_tol=tail_tol)
    atoms = params.base.sample_n(rng, len(sticks))
    return DiscreteMeasure(atoms, sticks.weights, sticks.tail_mass, base=params.base)


def dp_posterior(prior: DpParams, observations) -> DpParams:
    """Posterior ``DP(alpha + N, (alpha H + sum delta) / (alpha + N))``.

    If the prior base is already a :class:`MixtureMeasure` its atoms are
    merged, so two successive updates equal one update on the union.
    """
    obs = np.asarray(observations, dtype=float)
    n = 0 if obs.size == 0 else (obs.shape[0] if obs.ndim > 1 else 1)
    if n == 0:
        return prior
    prior = prior.normalized()
    obs = obs.reshape(n, -1)
    alpha = prior.alpha
    post_alpha = alpha + n
    base = prior.base
    if isinstance(base, MixtureMeasure):
        inner, inner_w = base.base, base.base_weight
        old_atoms, old_w = base.atoms, base.atom_weights
    else:
        inner, inner_w = base, 1.0
        old_atoms, old_w = np.zeros((0, obs.shape[1])), np.zeros(0)
    atoms = np.vstack((old_atoms, obs))
    weights = np.concatenate((alpha * old_w / post_alpha, np.full(n, 1.0 / post_alpha)))
    mixture = MixtureMeasure(inner, alpha * inner_w / post_alpha, atoms, weights)
    return DpParams(post_alpha, mixture, 1.0)


def predictive_probabilities(alpha: float, partition: CrpPartition) -> np.ndarray:
    """CRP predictive ``[n_1, ..., n_K, alpha] / (alpha + N)``."""
    _check_alpha(alpha)
    sizes = np.asarray(partition.cluster_sizes, dtype=float)
    if sizes.sum() != partition.num_items or np.any(sizes < 1):
        raise DpParameterError("inconsistent partition")
    probs = np.append(sizes, alpha) / (alpha + partition.num_items)
    return probs


def sample_crp_partition(alpha: float, n_items: int, rng: np.random.Generator) -> CrpPartition:
    """Sequential CRP draw of a partition of ``n_items`` items."""
    _check_alpha(alpha)
    if n_items < 1:
        raise DpParameterError("n_items must be at least 1")
    u = rng.random(n_items)
    sizes: list = []
    labels = np.empty(n_items, dtype=np.int64)
    for i in range(n_items):
        threshold = u[i] * (alpha + i)
        acc = 0.0
        for k, s in enumerate(sizes):
            acc += s
            if threshold < acc:
                sizes[k] += 1
                labels[i] = k
                break
        else:
            labels[i] = len(sizes)
            sizes.append(1)
    return CrpPartition(tuple(labels))


def expected_cluster_count(alpha: float, n_items: int) -> float:
    """Exact ``E[K_N] = sum_{i=1}^{N} alpha / (alpha + i - 1)``.

    Grows like ``alpha * log(N)`` for large ``N``; see
    :func:`approx_cluster_count` for that asymptotic form.
    """
    _check_alpha(alpha)
    if n_items < 1:
        raise DpParameterError("n_items must be at least 1")
    i = np.arange(n_items, dtype=float)
    return float(np.sum(alpha / (alpha + i)))


def approx_cluster_count(alpha: float, n_items: int) -> float:
    """Asymptotic ``alpha * log(N)``."""
    _check_alpha(alpha)
    return alpha * math.log(n_items)

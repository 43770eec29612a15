import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metric_bayes.dp_core import (
    CrpPartition,
    DpParameterError,
    DpParams,
    GaussianMeasure,
    MixtureMeasure,
    PointMass,
    UniformRect,
    approx_cluster_count,
    dp_posterior,
    expected_cluster_count,
    predictive_probabilities,
    sample_crp_partition,
    sample_dp,
    sample_stick_breaking,
    stick_weights,
)
from oracles import set_partitions


class _FixedBeta:
    """Stand-in generator whose beta draws are scripted."""

    def __init__(self, values):
        self.values = list(values)

    def beta(self, a, b, size):
        out, self.values = self.values[:size], self.values[size:]
        return np.array(out)


# --- stick breaking -----------------------------------------------------------

def test_single_break_fraction():
    sw = sample_stick_breaking(3.0, 1, _FixedBeta([0.3]))
    assert sw.weights.tolist() == [0.3]
    assert sw.tail_mass == pytest.approx(0.7, abs=1e-15)


def test_stick_weights_standard_form():
    sw = stick_weights([0.5, 0.5, 0.5])
    np.testing.assert_allclose(sw.weights, [0.5, 0.25, 0.125])
    assert sw.tail_mass == pytest.approx(0.125)


def test_stick_telescopes(rng):
    sw = sample_stick_breaking(1.0, 200, rng)
    assert abs(sw.weights.sum() + sw.tail_mass - 1.0) < 1e-12


def test_tail_tolerance_extends_stick(rng):
    sw = sample_stick_breaking(5.0, 10, rng, tail_tol=1e-8)
    assert sw.tail_mass < 1e-8
    assert len(sw) > 10


def test_mean_first_weight(rng):
    v1 = np.array([sample_stick_breaking(1.0, 1, rng).weights[0] for _ in range(100_000)])
    assert abs(v1.mean() - 0.5) < 0.01


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_expected_weights_first_five(alpha, rng):
    n = 20_000
    w = np.array([sample_stick_breaking(alpha, 5, rng).weights for _ in range(n)])
    for k in range(5):
        expected = alpha ** k / (1 + alpha) ** (k + 1)
        se = w[:, k].std(ddof=1) / math.sqrt(n)
        assert abs(w[:, k].mean() - expected) < 3 * se + 1e-12


@given(alpha=st.floats(0.05, 50.0), trunc=st.integers(1, 300), seed=st.integers(0, 2**32 - 1))
def test_stick_properties(alpha, trunc, seed):
    sw = sample_stick_breaking(alpha, trunc, np.random.default_rng(seed))
    assert np.all((sw.weights >= 0) & (sw.weights <= 1))
    assert 0.0 <= sw.tail_mass <= 1.0
    assert abs(sw.weights.sum() + sw.tail_mass - 1.0) < 1e-12


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_bad_alpha(bad, rng):
    with pytest.raises(DpParameterError):
        sample_stick_breaking(bad, 10, rng)


# --- sample_dp ----------------------------------------------------------------

def test_point_mass_base(rng):
    g = sample_dp(DpParams(1.0, PointMass((3.0, -2.0))), 50, rng)
    assert np.all(g.atoms == np.array([3.0, -2.0]))


def test_uniform_base_atoms_in_square(rng):
    sq = UniformRect((-1000, -1000), (1000, 1000))
    g = sample_dp(DpParams(1.0, sq), 100, rng)
    assert np.all(sq.contains(g.atoms))
    assert g.tail_mass < 1e-8


def test_weighted_atom_mean(rng):
    mu = np.array([1.0, -2.0])
    base = GaussianMeasure(mu, np.array([[2.0, 0.3], [0.3, 1.0]]))
    means = []
    for _ in range(10_000):
        g = sample_dp(DpParams(2.0, base), 30, rng, tail_tol=None)
        w = g.weights / g.weights.sum()
        means.append(w @ g.atoms)
    means = np.array(means)
    se = means.std(axis=0, ddof=1) / math.sqrt(len(means))
    assert np.all(np.abs(means.mean(axis=0) - mu) < 3 * se)


# --- posterior ----------------------------------------------------------------

def test_posterior_empty_is_identity():
    prior = DpParams(1.5, UniformRect((0, 0), (1, 1)))
    assert dp_posterior(prior, np.zeros((0, 2))) is prior


def test_posterior_weights_exact():
    prior = DpParams(1.0, UniformRect((0, 0), (1, 1)))
    post = dp_posterior(prior, [[0.1, 0.1], [0.2, 0.2], [0.3, 0.3]])
    assert post.alpha == 4.0
    mix = post.base
    assert isinstance(mix, MixtureMeasure)
    assert mix.base_weight == 0.25
    assert mix.atom_weights.sum() == 0.75


def test_posterior_converges_to_empirical(rng):
    obs = rng.random((10_000, 2))
    post = dp_posterior(DpParams(1.0, UniformRect((0, 0), (1, 1))), obs)
    # TV between (alpha H + sum delta)/(alpha + N) and the empirical measure
    tv = post.base.base_weight
    assert tv < 1e-3


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6),
       st.lists(st.floats(-5, 5), min_size=1, max_size=6),
       st.floats(0.1, 10.0))
def test_posterior_sequential_equals_batch(d1, d2, alpha):
    prior = DpParams(alpha, GaussianMeasure(np.zeros(1), np.eye(1)))
    a = dp_posterior(dp_posterior(prior, np.array(d1)[:, None]), np.array(d2)[:, None])
    b = dp_posterior(prior, np.array(d1 + d2)[:, None])
    assert a.alpha == pytest.approx(b.alpha)
    assert a.base.base_weight == pytest.approx(b.base.base_weight)
    key = lambda m: sorted(zip(m.atoms[:, 0].tolist(), np.round(m.atom_weights, 12).tolist()))
    assert key(a.base) == key(b.base)


# --- CRP ----------------------------------------------------------------------

def test_predictive_example():
    p = predictive_probabilities(1.0, CrpPartition.from_sizes([2, 1]))
    np.testing.assert_allclose(p, [0.5, 0.25, 0.25])


def test_predictive_empty():
    assert predictive_probabilities(1.0, CrpPartition(())).tolist() == [1.0]


def test_predictive_small_alpha():
    p = predictive_probabilities(1e-12, CrpPartition.from_sizes([5]))
    assert p[0] == pytest.approx(1.0) and p[1] < 1e-12


@given(st.lists(st.integers(1, 20), min_size=1, max_size=8), st.floats(0.01, 100.0),
       st.randoms())
def test_predictive_properties(sizes, alpha, rnd):
    p = predictive_probabilities(alpha, CrpPartition.from_sizes(sizes))
    assert abs(p.sum() - 1.0) < 1e-15 * 4
    perm = list(range(len(sizes)))
    rnd.shuffle(perm)
    q = predictive_probabilities(alpha, CrpPartition.from_sizes([sizes[i] for i in perm]))
    np.testing.assert_allclose(q[:-1], p[:-1][perm], rtol=0, atol=1e-15)


def test_crp_single_item(rng):
    for _ in range(20):
        assert sample_crp_partition(0.7, 1, rng).cluster_sizes == (1,)


def _crp_prob_exact(blocks, alpha):
    """Product of sequential seating probabilities (exact rational arithmetic)."""
    label = {}
    for b, block in enumerate(blocks):
        for i in block:
            label[i] = b
    n = len(label)
    sizes = {}
    prob = Fraction(1)
    for i in range(n):
        b = label[i]
        prob *= Fraction(sizes.get(b, 0) or alpha, alpha + i)
        sizes[b] = sizes.get(b, 0) + 1
    return prob


def test_crp_partition_frequencies(rng):
    parts = list(set_partitions([0, 1, 2]))
    assert len(parts) == 5
    exact = {frozenset(frozenset(b) for b in p): _crp_prob_exact(p, 1) for p in parts}
    assert exact[frozenset([frozenset([0, 1, 2])])] == Fraction(1, 3)
    n = 100_000
    counts = {}
    for _ in range(n):
        key = sample_crp_partition(1.0, 3, rng).blocks()
        counts[key] = counts.get(key, 0) + 1
    for key, p in exact.items():
        assert abs(counts.get(key, 0) / n - float(p)) < 0.01


def test_mean_cluster_count(rng):
    counts = [sample_crp_partition(1.0, 100, rng).num_clusters for _ in range(10_000)]
    assert abs(np.mean(counts) / 5.187 - 1) < 0.02


def test_expected_cluster_count_values():
    assert expected_cluster_count(1.0, 1) == 1.0
    h100 = sum(Fraction(1, i) for i in range(1, 101))
    assert expected_cluster_count(1.0, 100) == pytest.approx(float(h100), rel=1e-14)
    assert round(expected_cluster_count(1.0, 100), 3) == 5.187
    assert abs(expected_cluster_count(2.0, 1000) / (2 * math.log(1000)) - 1) < 0.15
    assert approx_cluster_count(1.0, 100) == pytest.approx(4.605, abs=1e-3)


def test_partition_canonical():
    a = CrpPartition((5, 5, 2, 9))
    assert a.assignments == (0, 0, 1, 2)
    assert a.cluster_sizes == (2, 1, 1)
    assert a.blocks() == CrpPartition((1, 1, 0, 3)).blocks()

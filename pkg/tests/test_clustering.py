import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metric_bayes.clustering import (
    ClusteringError,
    GibbsConfig,
    ScanPartitionResult,
    classify_clusters,
    gibbs_chain,
    gibbs_partition,
    likelihood_ratio,
    partition_scan,
)
from metric_bayes.dp_core import CrpPartition, UniformRect
from metric_bayes.measurement_model import JointPriorConfig, Origin
from metric_bayes.tracker import ObsModel
from oracles import exact_partition_posterior


# small scene: region far larger than the noise so the uniform edge is irrelevant
REGION = UniformRect((-60.0, -60.0), (60.0, 60.0))
Q = np.array([[1.5, 0.3], [0.3, 0.8]])
S = Q + np.array([[4.0, -1.0], [-1.0, 3.0]])
ZPRED = np.array([0.5, -0.5])
Z4 = np.array([[0.0, 0.0], [0.8, -0.4], [2.5, 1.0], [-1.5, 2.0]])
PRIOR = JointPriorConfig(alpha_c=0.7, base_c=REGION, alpha_t=0.9)


@pytest.fixture(scope="module")
def exact4():
    return exact_partition_posterior(Z4, PRIOR.alpha_t, PRIOR.alpha_c, REGION.area, ZPRED, S, Q)


def test_exact_posterior_has_bell4_support(exact4):
    assert len(exact4) == 15
    assert sum(math.exp(v) for v in exact4.values()) == pytest.approx(1.0)


def test_gibbs_matches_enumeration(exact4):
    cfg = GibbsConfig(n_sweeps=10_200, burn_in=200)
    trace, _ = gibbs_chain(Z4, PRIOR, ZPRED, S, Q, cfg, np.random.default_rng(7))
    counts = {}
    for row in trace[cfg.burn_in:]:
        key = CrpPartition(tuple(row)).blocks()
        counts[key] = counts.get(key, 0) + 1
    n = trace.shape[0] - cfg.burn_in
    tv = 0.5 * sum(abs(counts.get(k, 0) / n - math.exp(v)) for k, v in exact4.items())
    assert tv < 0.03


def test_chain_log_joint_matches_enumeration(exact4):
    # the kernel's log joint differs from the exact log posterior by a constant
    cfg = GibbsConfig(n_sweeps=300, burn_in=0)
    trace, logp = gibbs_chain(Z4, PRIOR, ZPRED, S, Q, cfg, np.random.default_rng(1))
    diffs = [lp - exact4[CrpPartition(tuple(row)).blocks()] for row, lp in zip(trace, logp)]
    assert np.ptp(diffs) < 1e-4


def test_single_measurement_single_cluster(rng):
    for _ in range(10):
        part = gibbs_partition(rng.normal(size=(1, 2)), PRIOR, ZPRED, S, Q,
                               GibbsConfig(5, 1), rng)
        assert part.cluster_sizes == (1,)


def test_empty_scan():
    assert gibbs_partition(np.zeros((0, 2)), PRIOR, ZPRED, S, Q).num_items == 0


def test_identical_points_share_cluster(rng):
    prior = JointPriorConfig(alpha_c=0.01, base_c=REGION, alpha_t=0.01)
    z = np.array([[3.0, -2.0], [3.0, -2.0]])
    together = sum(gibbs_partition(z, prior, ZPRED, S, Q, GibbsConfig(10, 2), rng).num_clusters == 1
                   for _ in range(1000))
    assert together / 1000 > 0.95


def test_singular_innovation_rejected(rng):
    with pytest.raises(ClusteringError):
        gibbs_partition(Z4, PRIOR, ZPRED, Q, Q, GibbsConfig(5, 1), rng)


def test_gibbs_config_validation():
    with pytest.raises(ClusteringError):
        GibbsConfig(10, 10)
    with pytest.raises(ClusteringError):
        GibbsConfig(0, 0)


# --- classification -----------------------------------------------------------

def test_near_cluster_is_target():
    z = np.array([[0.0, 0.0], [500.0, 0.0]])
    res = classify_clusters(CrpPartition((0, 1)), z, np.zeros(2), 100 * np.eye(2))
    assert res.labels == (Origin.TARGET, Origin.CLUTTER)
    assert res.m_t + res.m_c == 2


def test_single_cluster_is_target():
    res = classify_clusters(CrpPartition((0, 0, 0)), np.ones((3, 2)), np.zeros(2), np.eye(2))
    assert res.m_t == 3 and res.m_c == 0


def test_tie_goes_to_larger_cluster():
    # centroids at (+10, 0) and (-10, 0), sizes 3 and 1
    z = np.array([[-10.0, 0.0], [9.0, 0.0], [10.0, 0.0], [11.0, 0.0]])
    res = classify_clusters(CrpPartition((0, 1, 1, 1)), z, np.zeros(2), 25 * np.eye(2))
    assert res.target_indices() == [1, 2, 3]


def test_tie_equal_sizes_goes_to_lower_index():
    z = np.array([[-10.0, 0.0], [10.0, 0.0]])
    res = classify_clusters(CrpPartition((0, 1)), z, np.zeros(2), np.eye(2))
    assert res.target_indices() == [0]


coords = st.floats(-300, 300, allow_nan=False)


@given(st.lists(st.tuples(coords, coords), min_size=1, max_size=6),
       st.lists(st.integers(0, 3), min_size=6, max_size=6),
       st.tuples(coords, coords), st.tuples(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4)))
def test_classification_translation_invariant(pts, labels, pred, shift):
    z = np.array(pts)
    part = CrpPartition(tuple(labels[:len(pts)]))
    cov = np.array([[400.0, 50.0], [50.0, 300.0]])
    a = classify_clusters(part, z, np.array(pred), cov)
    b = classify_clusters(part, z + np.array(shift), np.array(pred) + np.array(shift), cov)
    assert a.labels == b.labels
    assert sum(1 for k in range(part.num_clusters)
               if all(a.labels[i] is Origin.TARGET for i in part.members(k))) == 1


# --- likelihood ratio ---------------------------------------------------------

OBS = ObsModel.position(10.0)
SQUARE = UniformRect((-1000, -1000), (1000, 1000))


def _result(labels):
    return ScanPartitionResult(tuple(labels), CrpPartition(tuple(range(len(labels)))), 0)


def test_llr_empty():
    assert likelihood_ratio(_result([]), np.zeros((0, 2)), np.zeros(4), OBS, SQUARE) == 0.0


def test_llr_single_target_closed_form():
    x = np.array([10.0, 20.0, 1.0, 1.0])
    llr = likelihood_ratio(_result([Origin.TARGET]), np.array([[10.0, 20.0]]), x, OBS, SQUARE)
    assert llr == pytest.approx(math.log(4e6) - math.log(200 * math.pi), rel=1e-12)
    assert llr == pytest.approx(8.75, abs=1e-2)


def test_llr_clutter_additivity(rng):
    x = np.zeros(4)
    z = np.vstack(([[0.0, 0.0]], rng.uniform(-1000, 1000, size=(4, 2))))
    one = likelihood_ratio(_result([Origin.TARGET] + [Origin.CLUTTER] * 2), z[:3], x, OBS, SQUARE)
    two = likelihood_ratio(_result([Origin.TARGET] + [Origin.CLUTTER] * 4), z, x, OBS, SQUARE)
    assert two - one == pytest.approx(-2 * math.log(1 / SQUARE.area))
    assert two < 2 * one  # sanity: finite values


def test_llr_clutter_outside_region_flags():
    z = np.array([[0.0, 0.0], [5000.0, 0.0]])
    llr = likelihood_ratio(_result([Origin.TARGET, Origin.CLUTTER]), z, np.zeros(4), OBS, SQUARE)
    assert llr == math.inf


def test_llr_constant_density():
    z = np.array([[0.0, 0.0], [5000.0, 0.0]])
    llr = likelihood_ratio(_result([Origin.TARGET, Origin.CLUTTER]), z, np.zeros(4), OBS, 0.25)
    assert llr == pytest.approx(-math.log(200 * math.pi) - 2 * math.log(0.25))


@given(st.floats(0, 200), st.floats(0, 200), st.floats(0, math.tau))
def test_llr_monotone_in_distance(r1, dr, angle):
    d = np.array([math.cos(angle), math.sin(angle)])
    near = likelihood_ratio(_result([Origin.TARGET]), (r1 * d)[None], np.zeros(4), OBS, SQUARE)
    far = likelihood_ratio(_result([Origin.TARGET]), ((r1 + dr) * d)[None], np.zeros(4), OBS, SQUARE)
    assert far <= near + 1e-12


# --- full scan ----------------------------------------------------------------

def test_partition_scan_flags_far_target(rng):
    z = np.array([[900.0, 900.0]])
    res = partition_scan(z, JointPriorConfig(5.0, SQUARE, 0.95), np.zeros(2),
                         np.array([[200.0, 0.0], [0.0, 200.0]]), OBS.Q, GibbsConfig(10, 2), rng)
    assert res.target_log_odds < 0 and not res.confirmed
    assert res.m_t == 1

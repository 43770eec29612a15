"""Single-target tracking in clutter with a joint Dirichlet-process measurement prior.

Subpackages and modules:

* :mod:`.dp_core`            stick-breaking, CRP, DP posterior
* :mod:`.measurement_model`  joint clutter/target DP prior
* :mod:`.clustering`         collapsed Gibbs partition of a scan
* :mod:`.tracker`            Kalman and particle recursions
* :mod:`.baselines`          NN and PDA filters
* :mod:`.simulator`          trajectories and cluttered scans
* :mod:`.harness`            Monte Carlo benchmark and reports
"""
from ._kernels import BACKEND as KERNEL_BACKEND
from .baselines import GateConfig, nn_step, pda_step
from .clustering import (
    ClusteringError,
    GibbsConfig,
    ScanPartitionResult,
    classify_clusters,
    gibbs_partition,
    likelihood_ratio,
    partition_scan,
)
from .config import RunConfig, build_run_config, load_config_values
from .dp_core import (
    CrpPartition,
    DiscreteMeasure,
    DpParameterError,
    DpParams,
    GaussianMeasure,
    UniformRect,
    dp_posterior,
    expected_cluster_count,
    predictive_probabilities,
    sample_crp_partition,
    sample_dp,
    sample_stick_breaking,
)
from .harness import MseReport, compute_mse, read_report, run_monte_carlo, write_report
from .measurement_model import JointPriorConfig, Origin
from .simulator import (
    GroundTruth,
    Measurement,
    ScenarioConfig,
    read_ground_truth,
    simulate_ground_truth,
    simulate_scan,
    simulate_trajectory,
    write_ground_truth,
)
from .tracker import (
    GaussianBelief,
    MotionModel,
    ObsModel,
    ParticleBelief,
    metric_bayes_step,
    naive_bayes_step,
    predict,
    update,
)

__version__ = "0.1.0"

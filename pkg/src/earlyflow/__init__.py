"""Delay-aware early classification of encrypted traffic flows.

Flows are summarized by 24 statistics over packet sizes and inter-arrival
times.  A cascade of sparse, cost-weighted logistic models is trained over a
grid of prefix lengths; at run time a per-packet stopping rule balances the
expected misclassification cost of deciding now against the delay cost of
waiting for more packets.
"""

from .arrival import (
    ArrivalModel,
    class_rates,
    cvm_statistic,
    exponential_log_likelihood,
    fit_exponential_rate,
    ks_statistic,
    mse_arrival,
)
from .detector import (
    CostCurve,
    Detection,
    DetectionReport,
    DetectorConfig,
    DetectorState,
    expected_misclass_cost,
    run_flow,
    similarity_weights,
    step,
    time_cost,
    total_cost_curve,
)
from .errors import ArtifactError, InternalError, ValidationError
from .features import (
    FEATURE_FUNCTION_NAMES,
    FEATURE_NAMES_24,
    J_MIN,
    FeatureCostProfile,
    FeatureId,
    compute_feature,
    default_cost_profile,
    design_matrix,
    feature_id,
    feature_matrix,
    feature_row,
    profile_feature_costs,
)
from .learner import (
    CascadeModel,
    Metrics,
    SolverConfig,
    SubsetModel,
    evaluate,
    expected_train_cost,
    load_cascade,
    save_cascade,
    select_lambda0,
    train_cascade,
    train_subset,
)
from .opmode import (
    DEFAULT_MODES,
    ForestConfig,
    ForestModel,
    fit_forest,
    load_forest,
    mode_confusion,
    rf_feature_importance,
    save_forest,
    train_opmode_lr,
    train_random_forest,
)
from .traffic import (
    ClassGeneratorSpec,
    LabeledDataset,
    PacketRecord,
    Trace,
    assemble_flows,
    dataset_to_packets,
    generate_synthetic,
    load_dataset,
    make_prefix,
    read_packet_stream,
    save_dataset,
    split_dataset,
    write_packet_stream,
)

__version__ = "0.1.0"

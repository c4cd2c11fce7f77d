"""Data quality metrics and resampling-based bias assessment for location-ping data."""

__version__ = "0.1.0"

from .metrics import QualityMetrics, metrics_vector
from .resample import (
    BiasRecord,
    SelectionCriterion,
    compute_bias,
    generate_resample_grid,
    resample_day,
    run_bias_experiment,
    select_ground_truth_days,
)
from .segmentation import CRITERION_1, CRITERION_2, CRITERION_3, Criterion, evaluate_criterion
from .staypoints import StayParams, StayPoint, count_stays, detect_stays, haversine_m
from .stats import M1, M2, M3, clustered_covariance, fit_bias_model, fit_ols, mann_whitney_u, vif
from .traj import Corpus, Ping, UserDay, parse_ping_record, partition_user_days, validate_user_day

__all__ = [
    "BiasRecord", "CRITERION_1", "CRITERION_2", "CRITERION_3", "Corpus", "Criterion", "M1", "M2", "M3",
    "Ping", "QualityMetrics", "SelectionCriterion", "StayParams", "StayPoint", "UserDay",
    "clustered_covariance", "compute_bias", "count_stays", "detect_stays", "evaluate_criterion",
    "fit_bias_model", "fit_ols", "generate_resample_grid", "haversine_m", "mann_whitney_u", "metrics_vector",
    "parse_ping_record", "partition_user_days", "resample_day", "run_bias_experiment",
    "select_ground_truth_days", "validate_user_day", "vif",
]

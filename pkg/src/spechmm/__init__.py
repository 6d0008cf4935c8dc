"""Spectral learning and Baum-Welch EM for discrete HMMs, with an
experiment harness for error/negative-probability sweeps and likelihood
surface analysis.

Charts (matplotlib) load lazily via spechmm.charts; importing the package
itself stays numpy-only.
"""

from .em import EmConfig, EmResult, dataset_log_likelihood, em_fit, forward_backward
from .errors import FormatError, SpechmmError, ValidationError
from .hmm import (
    Dataset,
    ExactMoments,
    HmmParams,
    all_sequences,
    exact_moments,
    joint_probability_forward,
    joint_probability_forward_batch,
    joint_probability_operators,
    observable_operator,
    random_hmm,
    read_dataset,
    read_model,
    sample_sequences,
    validate_params,
    write_dataset,
    write_model,
)
from .likelihood import (
    ConsistencyCell,
    LikelihoodCurve,
    SymmetricHmmSpec,
    count_unimodal_modes,
    em_consistency_experiment,
    likelihood_at,
    likelihood_curve,
    read_consistency_csv,
    write_consistency_csv,
    write_curve_csv,
)
from .metrics import (
    MetricsRecord,
    apply_correction,
    clamp_normalize,
    neg_prop,
    normalized_l1,
    read_metrics_csv,
    sign_flip_heuristic,
    total_variation,
    write_metrics_csv,
)
from .seeding import derive_seed
from .spectral import (
    MomentEstimates,
    ObservableOperators,
    compute_subspace,
    estimate_moments,
    learn_spectral,
    moments_from_exact,
    predict_joint,
    predict_joint_batch,
    read_operators,
    write_operators,
)
from .sweep import ExperimentConfig, config_from_mapping, parse_config_file, run_sweep

__version__ = "0.1.0"

__all__ = [
    "ConsistencyCell",
    "Dataset",
    "EmConfig",
    "EmResult",
    "ExactMoments",
    "ExperimentConfig",
    "FormatError",
    "HmmParams",
    "LikelihoodCurve",
    "MetricsRecord",
    "MomentEstimates",
    "ObservableOperators",
    "SpechmmError",
    "SymmetricHmmSpec",
    "ValidationError",
    "all_sequences",
    "apply_correction",
    "clamp_normalize",
    "compute_subspace",
    "config_from_mapping",
    "count_unimodal_modes",
    "dataset_log_likelihood",
    "derive_seed",
    "em_consistency_experiment",
    "em_fit",
    "estimate_moments",
    "exact_moments",
    "forward_backward",
    "joint_probability_forward",
    "joint_probability_forward_batch",
    "joint_probability_operators",
    "learn_spectral",
    "likelihood_at",
    "likelihood_curve",
    "moments_from_exact",
    "neg_prop",
    "normalized_l1",
    "observable_operator",
    "parse_config_file",
    "predict_joint",
    "predict_joint_batch",
    "random_hmm",
    "read_consistency_csv",
    "read_dataset",
    "read_metrics_csv",
    "read_model",
    "read_operators",
    "run_sweep",
    "sample_sequences",
    "sign_flip_heuristic",
    "total_variation",
    "validate_params",
    "write_consistency_csv",
    "write_curve_csv",
    "write_dataset",
    "write_metrics_csv",
    "write_model",
    "write_operators",
]

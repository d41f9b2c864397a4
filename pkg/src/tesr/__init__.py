"""Transfer learning through sufficient, domain-invariant representations.

The package trains a shared representation on several source domains so
that it predicts the response (distance covariance pushed up) while being
indistinguishable across domains (energy distance to a reference pushed
down), then augments it with a target-specific representation that is
independent of the shared one.  A linear variant, synthetic data
generators, and a benchmarking harness round out the toolkit.
"""

from .dependence import (
    COINCIDENT_TOL,
    dcov_grad_u,
    dcov_u,
    dcov_u_bruteforce,
    energy_distance,
    energy_grad_u,
    gaussian_reference,
    grad_through_distances,
    u_centered,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    config_from_dict,
    evaluate,
    load_config,
    load_csv_dataset,
    load_pooled_csv,
    run_experiment,
    summarize,
    write_dataset,
    write_results,
)
from .linear import (
    LinearRep,
    fit_linear_augment,
    fit_linear_sirep,
    orthonormalize,
    principal_angles,
    projection_matrix,
)
from .networks import MlpNet, MlpSpec, build_head_net, build_rep_net, net_forward, rep_forward
from .simgen import (
    eval_component,
    example3_distance_profile,
    fn_cosine_distance,
    fn_l1_distance,
    gen_example1,
    gen_example2,
    gen_example3,
    gen_example_s1,
    GeneratedStudy,
    mc_center,
)
from .training import (
    DomainDataset,
    TesrConfig,
    TesrModel,
    predict,
    source_loss,
    target_loss,
    tesr_features,
    train_ddr,
    train_dnn,
    train_predictor,
    train_stage1,
    train_stage2,
    train_tesr,
)

__version__ = "0.1.0"

__all__ = [
    "COINCIDENT_TOL",
    "DomainDataset",
    "ExperimentConfig",
    "GeneratedStudy",
    "LinearRep",
    "MlpNet",
    "MlpSpec",
    "ResultRow",
    "TesrConfig",
    "TesrModel",
    "build_head_net",
    "build_rep_net",
    "config_from_dict",
    "dcov_grad_u",
    "dcov_u",
    "dcov_u_bruteforce",
    "energy_distance",
    "energy_grad_u",
    "eval_component",
    "evaluate",
    "example3_distance_profile",
    "fit_linear_augment",
    "fit_linear_sirep",
    "fn_cosine_distance",
    "fn_l1_distance",
    "gaussian_reference",
    "gen_example1",
    "gen_example2",
    "gen_example3",
    "gen_example_s1",
    "grad_through_distances",
    "load_config",
    "load_csv_dataset",
    "load_pooled_csv",
    "mc_center",
    "net_forward",
    "orthonormalize",
    "predict",
    "principal_angles",
    "projection_matrix",
    "rep_forward",
    "run_experiment",
    "source_loss",
    "summarize",
    "target_loss",
    "tesr_features",
    "train_ddr",
    "train_dnn",
    "train_predictor",
    "train_stage1",
    "train_stage2",
    "train_tesr",
    "u_centered",
    "write_dataset",
    "write_results",
]

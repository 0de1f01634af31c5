"""Partly smooth regularizers: geometry, certificates, solvers, experiments.

The package answers one question end to end: given a low-complexity
regression problem, does penalized estimation recover the exact structure
(support, active groups, rank, cosupport) of the ground truth?  It provides
the regularizers themselves, a pre-certificate that predicts recovery from
the design covariance alone, a forward-backward solver that reports when its
iterates lock onto the final model, and Monte-Carlo harnesses that measure
all of this empirically.
"""

from .certificate import (
    Certificate,
    StabilityReport,
    UniquenessReport,
    certify_uniqueness,
    check_model_stability,
    dual_certificate_at_solution,
    linearized_precertificate,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    MuRule,
    TrialRecord,
    consistency_sweep,
    find_certified_design,
    identification_profile,
    noise_stability_sweep,
    sharpness_experiment,
    write_plot_csv,
    write_records_csv,
    write_summary_json,
)
from .linalg import (
    InjectivityReport,
    Subspace,
    check_covariance,
    check_symmetric,
    project,
    pseudoinverse,
    restricted_injectivity,
    restricted_operator,
    spectral_norm,
    subspace_distance,
)
from .problems import (
    DesignSpec,
    ProblemInstance,
    SignalSpec,
    canonical_parameters,
    correlation_noise,
    generate_instance,
    load_matrix_csv,
    make_design,
    make_signal,
)
from .regularizers import (
    AnalysisL1,
    CertificateVerdict,
    GroupL1L2,
    L1,
    ModelDescriptor,
    ModelGeometry,
    Nuclear,
    Regularizer,
    same_model,
)
from .solver import (
    CanonicalParameters,
    SolveOptions,
    SolveResult,
    forward_backward,
    objective,
    solve_path,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisL1",
    "CanonicalParameters",
    "Certificate",
    "CertificateVerdict",
    "DesignSpec",
    "ExperimentConfig",
    "ExperimentResult",
    "GroupL1L2",
    "InjectivityReport",
    "L1",
    "ModelDescriptor",
    "ModelGeometry",
    "MuRule",
    "Nuclear",
    "ProblemInstance",
    "Regularizer",
    "SignalSpec",
    "SolveOptions",
    "SolveResult",
    "StabilityReport",
    "Subspace",
    "TrialRecord",
    "UniquenessReport",
    "canonical_parameters",
    "certify_uniqueness",
    "check_covariance",
    "check_model_stability",
    "check_symmetric",
    "consistency_sweep",
    "correlation_noise",
    "dual_certificate_at_solution",
    "find_certified_design",
    "forward_backward",
    "generate_instance",
    "identification_profile",
    "linearized_precertificate",
    "load_matrix_csv",
    "make_design",
    "make_signal",
    "noise_stability_sweep",
    "objective",
    "project",
    "pseudoinverse",
    "restricted_injectivity",
    "restricted_operator",
    "same_model",
    "sharpness_experiment",
    "solve_path",
    "spectral_norm",
    "subspace_distance",
    "write_plot_csv",
    "write_records_csv",
    "write_summary_json",
]

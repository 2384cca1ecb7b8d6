"""Linear Galerkin methods and adversarial right-hand sides that defeat them."""

from .adversary import (
    AdversaryWitness,
    CertificateReport,
    MethodConfig,
    Tolerances,
    WorstCaseReport,
    construct_witness,
    extend_trial_system,
    image_tests,
    solution_error_bound,
    sweep,
    trial_tests,
    verify_witness,
    worst_case_residual,
)
from .function_space import (
    BasisFamily,
    FamilyKind,
    GridFunction,
    QuadratureGrid,
    gram_matrix,
    independence_score,
    inner_product,
    l2_norm,
    make_grid,
    sample_family,
)
from .functionals import FunctionalSet, LinearFunctional, apply, apply_all, functional_matrix
from .galerkin import (
    ApproxSolution,
    GalerkinSystem,
    assemble,
    build_solution,
    coefficients_cramer,
    coefficients_solve,
    orthogonality_defect,
    residual_norm,
)
from .operators import (
    Kernel,
    OperatorImages,
    OperatorKind,
    OperatorSpec,
    apply_operator,
    compute_images,
    operator_norm_estimate,
    shift_operator,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryWitness",
    "ApproxSolution",
    "BasisFamily",
    "CertificateReport",
    "FamilyKind",
    "FunctionalSet",
    "GalerkinSystem",
    "GridFunction",
    "Kernel",
    "LinearFunctional",
    "MethodConfig",
    "OperatorImages",
    "OperatorKind",
    "OperatorSpec",
    "QuadratureGrid",
    "Tolerances",
    "WorstCaseReport",
    "apply",
    "apply_all",
    "apply_operator",
    "assemble",
    "build_solution",
    "coefficients_cramer",
    "coefficients_solve",
    "compute_images",
    "construct_witness",
    "extend_trial_system",
    "functional_matrix",
    "gram_matrix",
    "image_tests",
    "independence_score",
    "inner_product",
    "l2_norm",
    "make_grid",
    "operator_norm_estimate",
    "orthogonality_defect",
    "residual_norm",
    "sample_family",
    "shift_operator",
    "solution_error_bound",
    "sweep",
    "trial_tests",
    "verify_witness",
    "worst_case_residual",
]

"""Self-similar Markov martingales with prescribed marginals.

Construct processes that share every one-dimensional marginal with a given
self-similar Markov martingale (Brownian-type Gaussian martingales, centred
squared Bessel, stable, and two-point sign-flip references) by randomising
their transition kernels with a subordinator, simulate them at scale, and
verify the claimed properties statistically.
"""

from .errors import CalibrationError, TestInapplicableError, UnsupportedVariantError
from .generator import (
    FDCheck,
    GeneratorEvaluator,
    Polynomial,
    TestFunction,
    build_mimic_generator,
    closed_form_generator,
    finite_difference_generator_check,
    predictable_qv,
    probe_record,
    realized_qv,
)
from .mimic import (
    PathEnsemble,
    TimeGrid,
    exp_martingale_transform,
    export_binary,
    export_csv,
    generate_ensemble,
    hermite_transform,
    hermite_value,
    load_binary,
    markov_step,
    randomized_transition_sample,
    timechange_path,
    timechange_path_parts,
)
from .reference import (
    GaussianMartingale,
    ReferenceProcess,
    SignFlipMartingale,
    SquaredBesselMartingale,
    StableMartingale,
    reference_from_config,
)
from .subordinator import (
    SubordinatorSpec,
    calibrate,
    jump_exponent,
    laplace_exponent,
    sample_R,
    sample_increments,
)
from .verify import (
    TestReport,
    ks_two_sample,
    marginal_match_test,
    martingale_slope_test,
    self_similarity_test,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "FDCheck",
    "GaussianMartingale",
    "GeneratorEvaluator",
    "PathEnsemble",
    "Polynomial",
    "ReferenceProcess",
    "SignFlipMartingale",
    "SquaredBesselMartingale",
    "StableMartingale",
    "SubordinatorSpec",
    "TestFunction",
    "TestInapplicableError",
    "TestReport",
    "TimeGrid",
    "UnsupportedVariantError",
    "build_mimic_generator",
    "calibrate",
    "closed_form_generator",
    "exp_martingale_transform",
    "export_binary",
    "export_csv",
    "finite_difference_generator_check",
    "generate_ensemble",
    "hermite_transform",
    "hermite_value",
    "jump_exponent",
    "ks_two_sample",
    "laplace_exponent",
    "load_binary",
    "marginal_match_test",
    "markov_step",
    "martingale_slope_test",
    "predictable_qv",
    "probe_record",
    "randomized_transition_sample",
    "realized_qv",
    "reference_from_config",
    "sample_R",
    "sample_increments",
    "self_similarity_test",
    "timechange_path",
    "timechange_path_parts",
]

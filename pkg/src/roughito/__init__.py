"""Rough-path numerics: truncated tensor groups, Ito/Stratonovich lifts,
RDE solving, the pathwise Ito lemma and the averaging scheme."""

from .errors import DivergedError, InvalidArgumentError, RoughPathError, UnsupportedFieldError
from .tensor import (
    Decomposition,
    TruncatedTensor,
    decompose_geo_drift,
    dilate,
    homogeneous_norm,
    tensor_exp,
    tensor_inv,
    tensor_log,
    tensor_mul,
)
from .paths import (
    GridPath,
    RoughPathGrid,
    SignaturePath,
    chen_increment,
    lyons_extend,
    pl_signature,
    segment_signature,
)
from .variation import dp_distance, infinity_variation, p_variation
from .lifts import (
    BracketGrid,
    NoiseSpec,
    PerturbedLift,
    bracket_fine,
    bracket_pl,
    ito_lift,
    martingale_from_phi,
    perturbed_lift,
    pl_ito_lift,
    sample_brownian,
    shift_level2,
    strat_lift,
)
from .fields import VectorField, get_field
from .rde import RdeSolution, dff, enhance_solution, rde_solve, rough_integral_one_form, sde_euler_maruyama
from .averaging import (
    SchemeConfig,
    SchemeOutput,
    concat_discounted,
    convergence_study,
    expected_increment_inverse,
    ito_rough_driver,
    strat_increment_pair,
)
from .itolemma import HPath, build_h_path, verify_ito_lemma, young_integral
from .bdg import MomentReport, bdg_ratio_check

__version__ = "0.1.0"

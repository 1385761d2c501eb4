"""Data-driven spectral regularization of linear ill-posed inverse problems.

The library evaluates everything in the coordinates of a singular system (or
a diagonal frame decomposition): moment laws describe data and noise, filter
constructors produce the classical, MSE-optimal, worst-case-optimal and
denoiser-induced coefficient sequences, and the risk/rate modules verify the
convergence behavior numerically at desk scale.
"""

__version__ = "0.1.0"

from .sequences import (
    CoefficientVector,
    DimensionError,
    SpectralSequence,
    SPACE_X,
    SPACE_Y,
    elementwise,
    sum_tail,
)
from .operators import (
    SingularSystem,
    apply_forward,
    apply_pseudo_inverse,
    from_matrix,
    load_matrix_csv,
    make_synthetic,
    save_matrix_csv,
)
from .laws import (
    DataLaw,
    NoiseLaw,
    colored_noise,
    continuity_constant,
    law_from_decay,
    law_from_moments,
    law_from_source_condition,
    noise_from_moments,
    noise_level,
    sample,
    white_noise,
)
from .filters import (
    FilterSpec,
    adv_inf_filter,
    apply_filter,
    custom_filter,
    denoiser_lambda,
    h_tau,
    mse_filter,
    prox_scale,
    tikhonov,
    tsvd,
)
from .risk import (
    RiskReport,
    WorstCaseResult,
    analytic_risk,
    deterministic_x_risk,
    generic_risk,
    monte_carlo_risk,
    risk_bounds,
    worst_case_l2,
    worst_case_sinf,
)
from .advtrain import (
    TrainConfig,
    TrainResult,
    adv2_convergence_probe,
    adv_inf_convergence_probe,
    capped_pinv_filter,
    train_adv2,
    truncated_pinv_filter,
)
from .frames import (
    DFDSystem,
    FrameSystem,
    build_dfd,
    doubled_basis_frame,
    frame_bounds,
    frame_from_csv,
    frame_mse_filter,
    frame_moments_from_covariance,
    frame_reconstruct,
    mercedes_benz_frame,
    orthonormal_frame,
    synthesis_bound_check,
)
from .pnp import (
    DenoiserSpec,
    apply_denoiser,
    contraction_factors,
    denoiser_self_supervised_optimality,
    pnp_iterate,
)
from .ratelab import (
    RateExperiment,
    power_sum_random_sweep,
    interpolation_random_sweep,
    classical_reference_curve,
    decay_instance,
    fit_loglog_slope,
    validate_power_sum_lemmas,
    validate_interpolation_lemma,
    run_rate_experiment,
    saturation_probe,
    source_instance,
    theory_exponent_decay,
    theory_exponent_source,
)

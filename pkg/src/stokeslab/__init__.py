"""stokeslab: weighted decay estimates for the heat/Stokes semigroup and
time-periodic Navier-Stokes fixed points on a truncated whole space."""

from .grid import (
    Field,
    Grid,
    SpectralField,
    divergence,
    from_spectral,
    gradient,
    inner,
    integrate,
    l2_norm,
    laplacian,
    load_field,
    save_field,
    to_spectral,
)
from .weights import (
    AqReport,
    HypothesisSet,
    Interval,
    RadialWeight,
    admissible_range,
    aq_check,
    feasibility,
    feasibility_scan,
    maximal_function,
    mollifier_sup,
    sobolev_embedding_ratio,
)
from .semigroup import (
    DecaySeries,
    ExponentFit,
    decay_harness,
    decay_rate,
    fit_power_law,
    fractional_integral,
    half_laplacian,
    heat_apply,
    heat_kernel,
    heat_kernel_field,
    kernel_domination_constant,
    leray_project,
    predicted_exponent,
    riesz_gradient_check,
    semigroup_gradient_apply,
    stokes_apply,
    write_decay_csv,
)
from .exterior import (
    AnnulusSpec,
    CutoffPair,
    RadialCutoff,
    bogovskii_apply,
    build_cutoffs,
    divergence_defect,
    solenoidal_extension,
)
from .periodic import (
    ContractionError,
    PeriodicForce,
    PeriodicSolution,
    PicardConfig,
    nonlinearity,
    periodicity_check,
    picard_solve,
    poincare_map,
    random_solenoidal_force,
    single_mode_force,
    weighted_report,
)
from .corpus import PRNG_ID, corpus_seeds, random_smooth_field

__version__ = "0.1.0"

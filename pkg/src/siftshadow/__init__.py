"""siftshadow: Pliss sifting, quasi-expanding string calculus, constructive
pseudo-orbit shadowing/closing, subadditive averaging, and periodic-repeller
extraction for nonuniformly expanding circle maps and 2x2 cocycles."""

__version__ = "0.1.0"

from .dynamics import (
    ExponentEstimate,
    OrbitString,
    check_periodic,
    conorm,
    expansion_indicator_over_set,
    kingman_doubling_average,
    log_conorm,
    min_lyapunov_estimate,
    orbit_string,
    periodic_word_exponent,
    random_word,
    scan_bm_cocycle,
)
from .errors import (
    BadParameters,
    ContractionFailed,
    DepthTooLarge,
    DepthTooSmall,
    GapTooLarge,
    HypothesesNotMet,
    InvalidConfig,
    NoHyperbolicTimes,
    NoRecurrence,
    NotGammaString,
    NotPeriodic,
    NotQuasiExpanding,
    SchemaMismatch,
    SiftShadowError,
    SingularMatrix,
)
from .extension import (
    BackwardBranch,
    TGammaReport,
    check_t_gamma_set,
    enumerate_branches,
    extension_metric,
    tgamma_report_payload,
    validate_branch,
)
from .maps import (
    MAP_ZOO,
    MapSystem,
    ShiftPoint,
    Word,
    bm_cocycle,
    bm_matrices,
    circle_dist,
    doubling,
    iterate_map,
    make_map,
    neutral_fixed,
    perturbed_doubling,
    pl_tent,
)
from .pipeline import (
    AbnormalVerdict,
    ExpansionFit,
    RepellerRecord,
    RepellerSearchReport,
    default_repeller_config,
    directed_hausdorff_circle,
    estimate_expansion_constants,
    find_repellers,
    search_abnormal,
    verify_abnormal,
)
from .shadowing import (
    Lift,
    PseudoOrbitChain,
    RescaledChain,
    ShadowingConfig,
    ShadowResult,
    build_lift,
    chain_from_bases,
    chain_is_quasi_expanding,
    close_periodic,
    compose_and_rescale,
    plan_shadowing_config,
    shadow_finite,
    solve_contraction,
    validate_chain,
)
from .strings import (
    PositiveString,
    RealString,
    SiftResult,
    classify_gaps,
    extract_bad_quasi_string,
    is_gamma_string,
    is_obstruction,
    is_quasi_expanding,
    is_quasi_expanding_positive,
    pliss_constants,
    pliss_sift,
    suffix_averages,
    well_adapted,
)

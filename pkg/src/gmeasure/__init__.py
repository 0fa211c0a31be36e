"""Numerics for g-function chains.

Models of g-functions on finite alphabets, exact transfer-operator
diagnostics, maximal and block couplings, renewal analysis of the dominating
disagreement chain, and closed-form uniqueness criteria, plus a reproducible
CLI experiment runner.
"""

__version__ = "0.1.0"

from .errors import (
    BudgetError,
    ConfigError,
    ConvergenceError,
    GMeasureError,
    TruncationError,
)
from .gmodel import (
    Alphabet,
    ExponentialCoefficients,
    FiniteMemoryModel,
    LongRangeLinearModel,
    PowerLawCoefficients,
    VariationProfile,
    Word,
    binary_alphabet,
    cylinder_prob,
    eval_g,
    iid_model,
    load_model,
    parse_model,
    rho_interval,
    variation_profile,
)
from .transfer import (
    StationaryMeasure,
    TransferOperator,
    apply_Ln,
    indicator,
    stationary,
    uniqueness_diagnostic,
)
from .coupling import (
    BlockSchedule,
    CouplingState,
    CouplingTable,
    FiniteDist,
    constant_schedule,
    dbar,
    dn_bruteforce,
    estimate_disagreement,
    maximal_coupling,
    next_block,
    sample_block_coupling,
)
from .renewal import (
    AlphaBeta,
    RenewalSpec,
    build_alphabeta,
    disagreement_bound_sweep,
    effective_lattice,
    period,
    renewal_limit,
    renewal_solve,
)
from .criteria import (
    CUBIC_REMAINDER_K2,
    CriterionReport,
    ExponentialVariation,
    FiniteRangeVariation,
    MAX_SITE_RATIO,
    PowerLawVariation,
    SingleSiteDSequence,
    TabulatedVariation,
    affinity_product_floor,
    block_tv_bounds,
    check_geometric_window_sums,
    check_rho_product_series,
    check_single_site_series,
    check_square_summable_variation,
    check_variation_o_sqrt,
    coupling_bound_ratio,
    geometric_blocks,
    hellinger_floor,
    single_site_tv_bound,
    tv_bound_from_site_ratios,
)

"""Idealized polarization Bell tests and the normalization artifacts that fake them."""

__version__ = "0.1.0"

from .errors import (
    BellSimError,
    DegenerateNormalizationError,
    DegenerateSamplingError,
    InvalidInputError,
    InvalidObservableError,
    InvalidStateError,
)
from .estimators import (
    CANONICAL_SETTINGS,
    TSIRELSON_BOUND,
    BellSettings,
    NormalizationScheme,
    ProbabilityTable,
    SettingQuadCounts,
    analytic_quad,
    bell_parameter,
    bell_value,
    correlation,
    normalize_standard,
    normalize_tilde,
    probability_table,
    q_functions,
)
from .lhv import enumerate_strategies, lhv_bound, strategy_bell_value
from .montecarlo import SamplerConfig, SamplerMode, acquire_quad, sample_counts, standard_error
from .optimize import chsh_optimize
from .quantum import (
    OUTCOME_PAIRS,
    Outcome,
    OutcomePair,
    TwoQubitState,
    alice_observable,
    bob_observable,
    eigenprojector,
    joint_probability,
    make_bell_state,
    make_product_hh,
)
from .scenarios import RateTable, ScenarioKind, SourceModel, analytic_rates, shifted_setting_identities

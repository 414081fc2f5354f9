"""Simulate Bell experiments with local hidden-variable toy models.

The package separates the assumptions behind Bell's inequality (settings
independence, factorizability and its parameter/outcome halves, and
independence of apparatus microstates) and lets each be checked, exactly
on a model's probability tables or statistically on a simulated ensemble.
"""

from ._version import __version__
from .auditors import (
    AuditVerdict,
    Condition,
    TheoremChainReport,
    audit_all,
    audit_determinism,
    audit_factorizability,
    audit_inverted_oi_pattern,
    audit_microstate_independence,
    audit_outcome_independence,
    audit_parameter_independence,
    audit_settings_independence,
    audit_structural_locality,
    audit_theorem_chain,
    outcome_marginals,
)
from .core import (
    Assumption,
    Direction,
    Ensemble,
    ModelSpec,
    RunRecord,
    SettingsPolicy,
    angle,
    paper_configuration,
    paper_policy,
    run_experiment,
)
from .errors import (
    BellsimError,
    InsufficientRuns,
    InvalidConfig,
    InvalidPolicy,
    InvalidWeights,
    ModelFailure,
    NoExactInterface,
    StrategyViolation,
    UndiscretizableState,
)
from .estimators import ChshReport, ExpectationEstimate, chsh_statistic, exact_expectation, mc_expectation
from .game import GameConfig, GameScore, Leak, Strategy, play_game, run_game
from .models import (
    ZOO_IDS,
    build_ablated_leak_model,
    build_factorizable_model,
    build_microstate_leak_model,
    build_model,
    build_random_factorizable_model,
    build_result_leak_demo_model,
    build_settings_dependent_model,
    build_sign_model,
    build_singlet_oracle,
    build_weighted_dice_model,
)

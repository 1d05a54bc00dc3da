"""Quantal-response equilibria with switching costs, game transformations,
and reform meta-games."""

from .chart import tax_sweep_svg
from .coordination import (
    SweepRow,
    ThresholdReport,
    WELFARE_MODES,
    binary_config,
    binary_game,
    coordination_game,
    critical_tax,
    delta,
    deletion_row,
    sweep_tax,
    tax_vs_deletion_threshold,
    welfare,
)
from .errors import (
    CapacityError,
    ContractionError,
    EvaluationError,
    InfeasibleTransformError,
    LabelCollisionError,
    NumericError,
    ReformLabError,
    SpecFormatError,
    UnknownLabelError,
)
from .games import Game, MixedProfile, expected_payoff, load_game, parse_game, pure_nash
from .metagame import (
    APPROVE,
    REJECT,
    MetaGame,
    MetaOutcome,
    MetaProfile,
    ReformSupport,
    SelectionRule,
    approve_cost_table,
    check_blocking,
    check_reform_supportable,
    enumerate_outcomes,
    evaluate,
    hyper_meta_nash,
    majority_rule,
    meta_nash,
    metagame_from_payoff_table,
    parse_metagame,
    reform_vote_metagame,
    unanimity_rule,
)
from .qre import (
    BinaryCoordParams,
    BinaryResult,
    QreConfig,
    QreResult,
    StaticsGradients,
    comparative_statics,
    effective_payoff,
    equilibrium_payoffs,
    find_all_fixed_points,
    finite_difference_statics,
    fixed_point_gap,
    logistic_map,
    logit_response,
    solve_binary,
    solve_qre,
)
from .transforms import (
    Add,
    Delete,
    Pipeline,
    PriceOnly,
    Replace,
    adapt_config,
    apply_transformation,
    compose,
    identity,
    parse_transformation,
)

__version__ = "0.1.0"

"""Occupancy-state planning and verification for finite-horizon POSGs."""

from .errors import (
    CapExceededError,
    ImpossibleObservationError,
    InconsistentOccupancyError,
    ModelValidationError,
    OccupancyGamesError,
    PosgParseError,
    UndefinedDecisionRuleError,
    UnknownSuiteError,
    UnreachableHistoryError,
)
from .model import (
    PosgModel,
    classify,
    horizon_for_epsilon,
    joint_dynamics,
    parse_posg,
    reinterpret_criterion,
)
from .occupancy import (
    ConditionalOccupancy,
    MarginalOccupancy,
    Mixture,
    OccupancyState,
    PlanTimeHistory,
    PrivateOccupancyState,
    PrivatePlanTimeHistory,
    decompose,
    expected_reward,
    factorize,
    initial_occupancy,
    occupancy_to_csv,
    occupancy_to_tree_text,
    private_occupancy,
    private_reward,
    private_step,
    recombine,
    recompose,
    step,
)
from .policies import (
    BehavioralPolicy,
    DecisionRule,
    JointHistory,
    JointPolicy,
    PolicyMixture,
    PolicyTree,
    PrivateHistory,
    decision_at,
    enumerate_pure_policies,
    policy_from_json,
    policy_to_json,
    project_plan_time,
)
from .evaluate import (
    QTable,
    SimResult,
    ValueTable,
    evaluate_history,
    evaluate_occupancy,
    linear_eval,
    q_tables,
    sim_result_to_csv,
    simulate,
    value_table_to_csv,
)
from .solve import (
    BestResponse,
    Equilibrium,
    MatrixGame,
    best_response_history,
    best_response_private,
    matrix_game_value,
    solve_dec,
    solve_stackelberg,
    solve_zero_sum,
)
from .verify import (
    PropertyReport,
    check_lipschitz,
    check_master_structure,
    check_slave_structure,
    check_sufficiency_master,
    check_sufficiency_private,
    lipschitz_constant,
    run_suite,
)

__version__ = "0.1.0"

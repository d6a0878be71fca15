"""Risk-aware distributed multi-agent Q-learning with CVaR objectives.

The package has two computational pillars plus shared machinery:

- `oracle`: known-model CVaR dynamic programming over value tables
  augmented with a confidence level, used as ground truth.
- `learner`: the distributed consensus + innovation Q-learning algorithm
  that estimates the same tables from a single shared trajectory without
  knowing the transition kernel.
- `risk`, `game`, `graph`: CVaR primitives on discrete distributions, the
  finite Markov game environment, and the communication graph with its
  step-size schedule checks.
- `harness` / `cli`: seeded experiment presets with CSV/SVG/JSON artifacts.
"""

from .game import (
    MarkovGame,
    RandomGameSpec,
    TrajectoryStep,
    average_cost,
    discounted_return,
    game_from_dict,
    game_to_dict,
    load_game,
    random_game,
    sample_transition,
    save_game,
    uniform_trajectory,
)
from .graph import (
    GraphTopology,
    ScheduleReport,
    WeightSchedule,
    laplacian,
    ring_topology,
    validate_schedule,
)
from .harness import (
    ExperimentConfig,
    OracleComparison,
    StrictModeError,
    compare_to_oracle,
    monotone_violation,
    preset,
    run_experiment,
)
from .learner import (
    AgentState,
    Checkpoint,
    LearnerConfig,
    RunHistory,
    TransitionEstimator,
    admissible_xis,
    consensus_spread,
    innovation,
    qd_step,
    run,
    windowed_spread_means,
)
from .oracle import (
    AugmentedQ,
    RiskNeutralResult,
    ValueIterationResult,
    bellman_apply,
    greedy_policy,
    inner_max,
    risk_neutral_vi,
    value_iterate,
)
from .risk import (
    DiscreteDistribution,
    YGrid,
    concavity_defect,
    cvar,
    cvar_bruteforce,
    interpolate_yq,
    max_concavity_defect,
    value_at_risk,
)

__version__ = "0.1.0"

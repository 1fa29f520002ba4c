"""Stackelberg equilibrium learning and exact solving for iterated matrix games."""

__version__ = "0.1.0"

from .composer import ComposerConfig, EpisodeComposer, LeaderEpisode, LeaderStep
from .games import (
    CANONICAL_12,
    COOPERATE,
    DEFECT,
    FOLLOWER,
    LEADER,
    GameError,
    MatrixGameSpec,
    MemoryMode,
    canonical_games,
    initial_state,
    load_game_file,
    observe,
    scale_rewards,
    step,
)
from .learners import (
    Experience,
    LearnerHyper,
    default_hyper,
    es_update,
    q_update,
    reinforce_update,
)
from .oracles import (
    ContextualMeta,
    ExactBestResponseOracle,
    QLearnInnerLoop,
    context_from_queries,
    enumerate_query_schedule,
    exact_best_response,
    pretrain_meta_follower,
    qlearn_best_response,
    respond,
)
from .policies import (
    ContextualFollowerPolicy,
    EpsilonGreedy,
    ParameterNoise,
    QTable,
    SoftmaxTabularPolicy,
    TabularDeterministicPolicy,
    act,
    induced_policy,
    load_policy,
    perturb_parameters,
    sample_random_leader_policy,
    save_policy,
)
from .solver import (
    StackelbergSolution,
    VerificationReport,
    divergence_limits,
    evaluate_policy_pair,
    solve_stackelberg,
    verify_equilibrium,
)
from .training import CurvePoint, TrainResult, train_leader

__all__ = [name for name in dir() if not name.startswith("_")]

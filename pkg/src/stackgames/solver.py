"""Ground-truth Stackelberg computation and equilibrium verification.

The solver enumerates every deterministic leader commitment, scores each
against the exact best-responding follower (ties in the leader's favor),
and returns the best. These games have at most 5 observations per side, so
the search space is tiny and results are exact.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import games
from .games import FOLLOWER, LEADER, MatrixGameSpec
from .learners import follower_gradient_hyper, reinforce_update
from .oracles import all_follower_policies, exact_best_response, play_episode
from .policies import SoftmaxTabularPolicy, TabularDeterministicPolicy

ENUMERATION_BOUND = 16
VERIFY_TOLERANCE = 0.5


class SolverError(ValueError):
    """Solver preconditions violated."""


@dataclass(frozen=True)
class StackelbergSolution:
    leader: TabularDeterministicPolicy
    follower: TabularDeterministicPolicy
    leader_value: float
    follower_value: float


def solve_stackelberg(game: MatrixGameSpec) -> StackelbergSolution:
    """Exhaustive search over deterministic leader commitments."""
    n_obs = game.observation_count
    if n_obs > ENUMERATION_BOUND:
        raise SolverError(
            f"{game.name!r} has {n_obs} observations, enumeration bound is "
            f"{ENUMERATION_BOUND}")
    best: StackelbergSolution | None = None
    for index in range(2 ** n_obs):
        leader = TabularDeterministicPolicy(
            tuple((index >> b) & 1 for b in range(n_obs)))
        follower, follower_value, leader_value = exact_best_response(game, leader)
        if best is None or leader_value > best.leader_value:
            best = StackelbergSolution(leader, follower, leader_value, follower_value)
    assert best is not None
    return best


def evaluate_policy_pair(game: MatrixGameSpec, leader, follower) -> tuple[float, float]:
    """Deterministic rollout; undiscounted (leader, follower) episode sums."""
    return play_episode(game, leader, follower)


def expected_leader_value(game: MatrixGameSpec, leader: SoftmaxTabularPolicy,
                          follower: TabularDeterministicPolicy) -> float:
    """Exact expected undiscounted leader value of a stochastic leader.

    Forward pass over the reachable-state distribution; the follower is
    deterministic so only the leader's per-observation action distribution
    matters. Used for noise-free gradient checks and verification.
    """
    dist: dict[tuple[int, int] | None, float] = {None: 1.0}
    total = 0.0
    state_proto = games.initial_state(game)
    for t in range(game.horizon):
        next_dist: dict[tuple[int, int] | None, float] = {}
        for prev, prob in dist.items():
            state = games.GameState(prev=prev, step_count=t)
            obs_l = games.observe(game, state, LEADER)
            obs_f = games.observe(game, state, FOLLOWER)
            a_f = follower.actions[obs_f]
            p_c, p_d = leader.action_probabilities(obs_l)
            for a_l, p_a in ((0, p_c), (1, p_d)):
                if p_a == 0.0:
                    continue
                total += prob * p_a * game.leader_payoff[a_l][a_f]
                key = (a_l, a_f)
                next_dist[key] = next_dist.get(key, 0.0) + prob * p_a
        dist = next_dist
    del state_proto
    return total


@dataclass
class VerificationReport:
    follower_improvement: float
    leader_value_before: float
    leader_value_after: float
    passed: bool
    best_follower: TabularDeterministicPolicy


def verify_equilibrium(
    game: MatrixGameSpec,
    leader: TabularDeterministicPolicy,
    incumbent_follower_value: float,
    iterations: int = 50,
    hyper=None,
    rng: random.Random | None = None,
    tolerance: float = VERIFY_TOLERANCE,
    leader_value_before: float | None = None,
) -> VerificationReport:
    """Post-training equilibrium check: freeze the leader, retrain a follower.

    A fresh policy-gradient follower trains against the frozen leader; the
    report compares the best follower value it reaches with the value the
    incumbent follower was achieving. A genuine equilibrium admits no
    improvement beyond noise, and the leader's value must not move.

    Training uses centered rewards when the payoffs allow it (the
    baseline-free score-function update stalls on uniformly negative
    returns); values are measured on the game as given.
    """
    if rng is None:
        rng = random.Random(0)
    if hyper is None:
        hyper = follower_gradient_hyper(iterations=iterations)
    try:
        training_game = games.scale_rewards(game)
    except games.GameError:
        training_game = game
    follower = SoftmaxTabularPolicy.uniform(game.observation_count)

    best_value = float("-inf")
    best_policy = follower.greedy()
    for _ in range(iterations):
        for _ in range(hyper.batch_episodes):
            steps = _follower_episode(training_game, leader, follower, rng)
            follower = reinforce_update(follower, steps, hyper.lr, hyper.gamma)
        greedy = follower.greedy()
        _, value = play_episode(game, leader, greedy)
        if value > best_value:
            best_value = value
            best_policy = greedy
    improvement = best_value - incumbent_follower_value
    value_after, _ = play_episode(game, leader, best_policy)
    if leader_value_before is None:
        leader_value_before = value_after
    passed = (improvement < tolerance
              and abs(value_after - leader_value_before) < tolerance)
    return VerificationReport(
        follower_improvement=improvement,
        leader_value_before=leader_value_before,
        leader_value_after=value_after,
        passed=passed,
        best_follower=best_policy,
    )


def _follower_episode(game, leader, follower, rng) -> list[tuple[int, int, float]]:
    state = games.initial_state(game)
    steps = []
    for _ in range(game.horizon):
        obs_f = games.observe(game, state, FOLLOWER)
        a_f = follower.act(obs_f, rng=rng)
        a_l = leader.act(games.observe(game, state, LEADER))
        state, _, r_f = games.step(game, state, a_l, a_f)
        steps.append((obs_f, a_f, r_f))
    return steps


def best_follower_value(game: MatrixGameSpec, leader) -> float:
    """Maximum follower value over all deterministic followers."""
    return max(play_episode(game, leader, follower)[1]
               for follower in all_follower_policies(game.memory))


def divergence_limits(gamma: float, horizon: int) -> tuple[float, float, float]:
    """Analytic Q-value limits of the hidden-query diverging leader.

    g = (1 - gamma^(h/2)) / (1 - gamma); the cooperate and defect values at
    the "other defected" observation converge to -2g and -3g.
    """
    if gamma == 1.0:
        raise SolverError("gamma = 1 makes the limit expression divide by zero")
    if not 0.0 < gamma < 1.0:
        raise SolverError(f"gamma must be in (0, 1), got {gamma}")
    if horizon < 0 or horizon % 2 != 0:
        raise SolverError(f"horizon must be a nonnegative even integer, got {horizon}")
    g = (1.0 - gamma ** (horizon / 2)) / (1.0 - gamma)
    return g, -2.0 * g, -3.0 * g

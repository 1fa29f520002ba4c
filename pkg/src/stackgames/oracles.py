"""Follower best-response oracles.

Three interchangeable implementations of the map from a leader policy to a
follower response: exhaustive search over deterministic followers, an
inner-loop tabular Q-learner, and a pre-trained contextual meta-policy.
Every oracle interacts with the leader policy exclusively through ``act``
calls (query access); none of them reads policy internals.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache

from . import games
from .games import FOLLOWER, LEADER, MatrixGameSpec, MemoryMode
from .learners import (
    LearnerHyper,
    discounted_returns,
    follower_gradient_hyper,
    mc_q_update_inplace,
    qlearn_follower_hyper,
)
from .policies import (
    Context,
    ContextualFollowerPolicy,
    EpsilonGreedy,
    QTable,
    TabularDeterministicPolicy,
    act,
    context_index,
    induced_policy,
    sample_random_leader_policy,
)


class OracleError(ValueError):
    """Oracle misconfiguration (e.g. memory-mode mismatch)."""


QuerySchedule = tuple[int, ...]


def enumerate_query_schedule(memory: MemoryMode) -> QuerySchedule:
    """Every leader observation once, in canonical order."""
    return tuple(range(memory.observation_count))


def context_from_queries(leader, schedule: QuerySchedule,
                         rng: random.Random | None = None) -> Context:
    """Ask the leader for its action at every scheduled observation."""
    return tuple(act(leader, obs, rng=rng) for obs in schedule)


def all_follower_policies(memory: MemoryMode) -> list[TabularDeterministicPolicy]:
    n = memory.observation_count
    return [TabularDeterministicPolicy(tuple((i >> b) & 1 for b in range(n)))
            for i in range(2 ** n)]


def play_episode(game: MatrixGameSpec, leader, follower,
                 rng: random.Random | None = None) -> tuple[float, float]:
    """Roll out one episode; returns undiscounted (leader, follower) sums."""
    state = games.initial_state(game)
    total_leader = total_follower = 0.0
    for _ in range(game.horizon):
        a_l = act(leader, games.observe(game, state, LEADER), rng=rng)
        a_f = act(follower, games.observe(game, state, FOLLOWER), rng=rng)
        state, r_l, r_f = games.step(game, state, a_l, a_f)
        total_leader += r_l
        total_follower += r_f
    return total_leader, total_follower


@lru_cache(maxsize=4096)
def _best_response_to_answers(
    game: MatrixGameSpec, answers: tuple[int, ...]
) -> tuple[TabularDeterministicPolicy, float, float]:
    leader = TabularDeterministicPolicy(answers)
    best: tuple[float, float, int, TabularDeterministicPolicy] | None = None
    for index, follower in enumerate(all_follower_policies(game.memory)):
        v_l, v_f = play_episode(game, leader, follower)
        # Maximize follower value; break ties in the leader's favor
        # (strong Stackelberg), then by lowest policy index.
        key = (v_f, v_l, -index)
        if best is None or key > (best[0], best[1], -best[2]):
            best = (v_f, v_l, index, follower)
    assert best is not None
    v_f, v_l, _, follower = best
    return follower, v_f, v_l


def exact_best_response(
    game: MatrixGameSpec, leader, rng: random.Random | None = None
) -> tuple[TabularDeterministicPolicy, float, float]:
    """Enumerate all deterministic followers against the queried leader.

    Returns (follower, follower_value, leader_value) for a follower
    maximizing its own undiscounted episode reward, ties resolved in the
    leader's favor. The leader is characterized entirely by its answers to
    the canonical query schedule, so results are cached per answer vector.
    """
    schedule = enumerate_query_schedule(game.memory)
    answers = context_from_queries(leader, schedule, rng=rng)
    return _best_response_to_answers(game, answers)


def qlearn_best_response(game: MatrixGameSpec, leader, hyper: LearnerHyper,
                         rng: random.Random) -> QTable:
    """Q-learning for the follower against a frozen leader.

    Runs ``hyper.iterations`` episodes with epsilon-greedy exploration,
    pulling each visited action value toward its episodic reward-to-go.
    Return targets rather than one-step bootstrapping matter here: with
    other-agent-only memory the follower cannot see its own previous
    action, so the leader's delayed retaliation lands while the follower
    observes "other cooperated" and a bootstrapped update would charge the
    punishment to the wrong entry. The discounted return from the step
    that actually defected keeps the credit assignment honest.
    """
    exploration = hyper.exploration
    if exploration is None:
        exploration = EpsilonGreedy(0.1)
    q = QTable.zeros(game.observation_count, exploration)
    for _ in range(hyper.iterations):
        run_follower_learning_episode(game, leader, q, hyper.lr, hyper.gamma, rng)
    return q


def run_follower_learning_episode(
    game: MatrixGameSpec, leader, q: QTable, alpha: float, gamma: float,
    rng: random.Random, leader_rng: random.Random | None = None,
) -> list[tuple[int, int, float]]:
    """One exploratory follower episode, updated in place at episode end.

    Returns the leader's (obs, action, reward) steps so a composer can fold
    them into the leader's experience. ``rng`` drives follower exploration;
    a separate ``leader_rng`` keeps a stochastic leader's sampling stream
    independent of the follower's.
    """
    state = games.initial_state(game)
    leader_steps: list[tuple[int, int, float]] = []
    follower_steps: list[tuple[int, int, float]] = []
    for t in range(game.horizon):
        obs_f = games.observe(game, state, FOLLOWER)
        a_f = q.act(obs_f, rng=rng)
        obs_l = games.observe(game, state, LEADER)
        a_l = act(leader, obs_l, rng=leader_rng or rng)
        state, r_l, r_f = games.step(game, state, a_l, a_f)
        follower_steps.append((obs_f, a_f, r_f))
        leader_steps.append((obs_l, a_l, r_l))
    mc_q_update_inplace(q.values, follower_steps, alpha, gamma)
    return leader_steps


def pretrain_meta_follower(
    game: MatrixGameSpec,
    hyper: LearnerHyper | None = None,
    rng: random.Random | None = None,
    representation: str = "table",
) -> tuple[ContextualFollowerPolicy, int]:
    """Train a context-conditioned follower against random leader policies.

    Each episode draws a fresh deterministic leader uniformly, builds its
    context from the query schedule, rolls out the game with the follower
    sampling from its contextual distribution, and applies a batched
    score-function policy-gradient update with a running per-context
    return baseline (the initial observation is visited once per episode,
    so without the variance reduction those cells converge far too slowly
    to cover every context). The leader never explores.

    Returns the trained policy and the number of environment steps used.
    """
    if hyper is None:
        hyper = follower_gradient_hyper()
    if rng is None:
        rng = random.Random(0)
    schedule = enumerate_query_schedule(game.memory)
    n_obs = game.observation_count
    policy = ContextualFollowerPolicy(n_obs, len(schedule), representation)
    baseline = [[0.0] * n_obs for _ in range(2 ** len(schedule))]
    env_steps = 0
    for _ in range(hyper.iterations):
        batch: list[tuple[Context, list[tuple[int, int, float]]]] = []
        for _ in range(hyper.batch_episodes):
            leader = sample_random_leader_policy(game.memory, rng)
            context = context_from_queries(leader, schedule)
            steps: list[tuple[int, int, float]] = []
            state = games.initial_state(game)
            for _ in range(game.horizon):
                obs_f = games.observe(game, state, FOLLOWER)
                a_f = policy.act(obs_f, rng=rng, context=context)
                a_l = act(leader, games.observe(game, state, LEADER))
                state, _, r_f = games.step(game, state, a_l, a_f)
                steps.append((obs_f, a_f, r_f))
            env_steps += game.horizon
            batch.append((context, steps))
        _apply_contextual_gradient(policy, batch, baseline, hyper.lr, hyper.gamma)
    return policy, env_steps


_BASELINE_LR = 0.1


def _apply_contextual_gradient(
    policy: ContextualFollowerPolicy,
    batch: list[tuple[Context, list[tuple[int, int, float]]]],
    baseline: list[list[float]],
    lr: float,
    gamma: float,
) -> None:
    scale = lr / len(batch)
    n_obs = policy.n_obs
    for context, steps in batch:
        ci = context_index(context)
        base_row = baseline[ci]
        returns = discounted_returns([r for (_, _, r) in steps], gamma)
        for (obs, action, _), g in zip(steps, returns):
            advantage = g - base_row[obs]
            base_row[obs] += _BASELINE_LR * (g - base_row[obs])
            p_c, p_d = policy.action_probabilities(obs, context)
            grad = [-p_c, -p_d]
            grad[action] += 1.0
            if policy.representation == "table":
                rows = policy.table[ci]
                rows[obs][0] += scale * advantage * grad[0]
                rows[obs][1] += scale * advantage * grad[1]
            else:
                for a in range(2):
                    coeff = scale * advantage * grad[a]
                    policy.weights[a][obs] += coeff
                    for i, bit in enumerate(context):
                        if bit:
                            policy.weights[a][n_obs + i] += coeff


@dataclass(frozen=True)
class ExactBestResponseOracle:
    """Exhaustive best response computed from the leader's query answers."""


@dataclass
class QLearnInnerLoop:
    """Follower learns from scratch (or resumes) inside each leader episode."""

    hyper: LearnerHyper = field(default_factory=qlearn_follower_hyper)


@dataclass
class ContextualMeta:
    """Pre-trained contextual meta-policy keyed by leader query answers."""

    policy: ContextualFollowerPolicy


OracleKind = ExactBestResponseOracle | QLearnInnerLoop | ContextualMeta


def respond(oracle: OracleKind, game: MatrixGameSpec, leader,
            rng: random.Random | None = None) -> TabularDeterministicPolicy:
    """Produce a follower policy for play against the given leader."""
    if isinstance(oracle, ExactBestResponseOracle):
        return exact_best_response(game, leader, rng=rng)[0]
    if isinstance(oracle, QLearnInnerLoop):
        if rng is None:
            raise OracleError("QLearnInnerLoop needs an rng")
        return induced_policy(qlearn_best_response(game, leader, oracle.hyper, rng))
    if isinstance(oracle, ContextualMeta):
        schedule = enumerate_query_schedule(game.memory)
        meta = oracle.policy
        if meta.n_obs != game.observation_count or meta.n_queries != len(schedule):
            raise OracleError(
                f"meta policy shaped for {meta.n_obs} observations / "
                f"{meta.n_queries} queries does not match game "
                f"{game.name!r} ({game.observation_count} observations)")
        context = context_from_queries(leader, schedule, rng=rng)
        return meta.response_policy(context)
    raise OracleError(f"unknown oracle {oracle!r}")

"""Leader training loops over composed episodes.

Four algorithms share one driver: a value-based learner with parameter
noise (Monte-Carlo control on a tabular Q-table), the score-function
policy gradient, a clipped-surrogate gradient with a value baseline, and
an evolutionary search over whole policies. The value-based learner uses
episodic return targets rather than one-step bootstrapping: with a fixed
behavior policy per episode, each action's value then tracks the returns
its own commitments earn, which is the quantity that drives both the
query-visible construction and the hidden-query divergence.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .composer import ComposerConfig, EpisodeComposer, LeaderEpisode
from .games import MatrixGameSpec
from .learners import (
    CLIPPED_SURROGATE,
    EVOLUTION_STRATEGIES,
    Q_LEARN,
    REINFORCE,
    LearnerHyper,
    LearnerError,
    clipped_surrogate_update,
    discounted_returns,
    es_update,
    softmax_grad_log,
)
from .oracles import OracleKind
from .policies import (
    ParameterNoise,
    QTable,
    SoftmaxTabularPolicy,
    TabularDeterministicPolicy,
    induced_policy,
    perturb_parameters,
)


@dataclass(frozen=True)
class CurvePoint:
    env_steps: int
    leader_mean_reward: float
    follower_mean_reward: float


@dataclass
class TrainResult:
    policy: object
    greedy_policy: TabularDeterministicPolicy
    curve: list[CurvePoint]
    env_steps: int
    composer: "EpisodeComposer | None" = None


def _effective_obs(step, n_obs: int, phase_bit: bool) -> int:
    return step.obs + step.phase * n_obs if phase_bit else step.obs


def train_leader(
    game: MatrixGameSpec,
    oracle: OracleKind,
    config: ComposerConfig | None = None,
    hyper: LearnerHyper | None = None,
    rng: random.Random | None = None,
    oracle_rng: random.Random | None = None,
    max_env_steps: int | None = None,
    step_offset: int = 0,
) -> TrainResult:
    """Train a leader policy against the composed episode construction.

    Returns the trained policy plus a learning curve of cumulative
    environment steps (including ``step_offset``, e.g. follower
    pre-training) against mean play-segment episode reward.
    """
    if hyper is None:
        raise LearnerError("train_leader requires a hyperparameter bundle")
    if rng is None:
        rng = random.Random(0)
    config = config or ComposerConfig()
    composer = EpisodeComposer(game, oracle, config)
    n_obs = game.observation_count
    n_eff = 2 * n_obs if config.leader_phase_bit else n_obs

    trainer = {
        Q_LEARN: _train_qlearn,
        REINFORCE: _train_reinforce,
        CLIPPED_SURROGATE: _train_clipped,
        EVOLUTION_STRATEGIES: _train_es,
    }[hyper.algorithm]
    result = trainer(game, composer, hyper, rng, oracle_rng or rng, n_eff,
                     max_env_steps, step_offset)
    result.composer = composer
    return result


def _episode_steps(episode: LeaderEpisode, n_obs: int,
                   phase_bit: bool) -> list[tuple[int, int, float]]:
    return [(_effective_obs(s, n_obs, phase_bit), s.action, s.reward)
            for s in episode.steps]


def _train_qlearn(game, composer, hyper, rng, oracle_rng, n_eff, max_env_steps, step_offset):
    q = QTable.zeros(n_eff)
    exploration = hyper.exploration or ParameterNoise(1.0)
    curve: list[CurvePoint] = []
    env_steps = step_offset
    phase_bit = composer.config.leader_phase_bit
    n_obs = game.observation_count
    for iteration in range(hyper.iterations):
        rewards, follower_rewards = [], []
        for _ in range(hyper.batch_episodes):
            if isinstance(exploration, ParameterNoise):
                stddev = exploration.stddev
                if hyper.noise_decay:
                    stddev *= max(0.0, 1.0 - iteration / max(1, hyper.iterations - 1))
                behavior = perturb_parameters(q, stddev, rng)
            else:
                behavior = QTable(q.values, exploration)
            episode = composer.compose(behavior, rng, oracle_rng)
            steps = _episode_steps(episode, n_obs, phase_bit)
            returns = discounted_returns([r for (_, _, r) in steps], hyper.gamma)
            # One update per visited cell per episode, toward the mean of
            # that episode's reward-to-go targets. Averaging over visit
            # positions is what lets a cell visited many times per episode
            # (e.g. every step of a single-observation game) accumulate
            # evidence at the nominal learning rate instead of being
            # overwritten by its own last visit.
            targets: dict[tuple[int, int], list[float]] = {}
            for (obs, action, _), g in zip(steps, returns):
                targets.setdefault((obs, action), []).append(g)
            for (obs, action), gs in targets.items():
                mean_g = sum(gs) / len(gs)
                q.values[obs][action] = ((1.0 - hyper.lr) * q.values[obs][action]
                                         + hyper.lr * mean_g)
            env_steps += len(episode.steps)
            rewards.append(episode.play_reward)
            follower_rewards.append(episode.follower_play_reward)
        curve.append(_point(env_steps, rewards, follower_rewards))
        if max_env_steps is not None and env_steps >= max_env_steps:
            break
    return TrainResult(q, induced_policy(q), curve, env_steps)


def _train_reinforce(game, composer, hyper, rng, oracle_rng, n_eff, max_env_steps, step_offset):
    policy = SoftmaxTabularPolicy.uniform(n_eff)
    curve: list[CurvePoint] = []
    env_steps = step_offset
    phase_bit = composer.config.leader_phase_bit
    n_obs = game.observation_count
    for _ in range(hyper.iterations):
        grads = [[0.0, 0.0] for _ in range(n_eff)]
        rewards, follower_rewards = [], []
        for _ in range(hyper.batch_episodes):
            episode = composer.compose(policy, rng, oracle_rng)
            steps = _episode_steps(episode, n_obs, phase_bit)
            returns = discounted_returns([r for (_, _, r) in steps], hyper.gamma)
            for (obs, action, _), g in zip(steps, returns):
                glog = softmax_grad_log(policy, obs, action)
                grads[obs][0] += g * glog[0]
                grads[obs][1] += g * glog[1]
            env_steps += len(episode.steps)
            rewards.append(episode.play_reward)
            follower_rewards.append(episode.follower_play_reward)
        scale = hyper.lr / hyper.batch_episodes
        for obs in range(n_eff):
            policy.logits[obs][0] += scale * grads[obs][0]
            policy.logits[obs][1] += scale * grads[obs][1]
        curve.append(_point(env_steps, rewards, follower_rewards))
        if max_env_steps is not None and env_steps >= max_env_steps:
            break
    return TrainResult(policy, policy.greedy(), curve, env_steps)


def _train_clipped(game, composer, hyper, rng, oracle_rng, n_eff, max_env_steps, step_offset):
    policy = SoftmaxTabularPolicy.uniform(n_eff)
    value_table = [0.0] * n_eff
    curve: list[CurvePoint] = []
    env_steps = step_offset
    phase_bit = composer.config.leader_phase_bit
    n_obs = game.observation_count
    for _ in range(hyper.iterations):
        batch = []
        rewards, follower_rewards = [], []
        for _ in range(hyper.batch_episodes):
            episode = composer.compose(policy, rng, oracle_rng)
            batch.append(_episode_steps(episode, n_obs, phase_bit))
            env_steps += len(episode.steps)
            rewards.append(episode.play_reward)
            follower_rewards.append(episode.follower_play_reward)
        policy, value_table = clipped_surrogate_update(policy, value_table, batch, hyper)
        curve.append(_point(env_steps, rewards, follower_rewards))
        if max_env_steps is not None and env_steps >= max_env_steps:
            break
    return TrainResult(policy, policy.greedy(), curve, env_steps)


def _train_es(game, composer, hyper, rng, oracle_rng, n_eff, max_env_steps, step_offset):
    population_size = hyper.population or 16
    population = [
        TabularDeterministicPolicy(tuple(rng.randrange(2) for _ in range(n_eff)))
        for _ in range(population_size)
    ]
    curve: list[CurvePoint] = []
    env_steps = step_offset
    best_policy, best_fitness = population[0], float("-inf")
    for _ in range(hyper.iterations):
        fitnesses = []
        follower_rewards = []
        for individual in population:
            total = 0.0
            for _ in range(hyper.batch_episodes):
                episode = composer.compose(individual, rng, oracle_rng)
                total += episode.play_reward
                env_steps += len(episode.steps)
                follower_rewards.append(episode.follower_play_reward)
            fitnesses.append(total / hyper.batch_episodes)
        elite = max(range(len(population)), key=lambda i: fitnesses[i])
        if fitnesses[elite] >= best_fitness:
            best_fitness = fitnesses[elite]
            best_policy = population[elite]
        curve.append(_point(env_steps, [fitnesses[elite]], follower_rewards))
        population = es_update(population, fitnesses, hyper, rng)
        if max_env_steps is not None and env_steps >= max_env_steps:
            break
    return TrainResult(best_policy, best_policy, curve, env_steps)


def _point(env_steps: int, rewards: list[float],
           follower_rewards: list[float]) -> CurvePoint:
    mean = sum(rewards) / len(rewards) if rewards else 0.0
    mean_f = sum(follower_rewards) / len(follower_rewards) if follower_rewards else 0.0
    return CurvePoint(env_steps, mean, mean_f)

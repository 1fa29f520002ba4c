"""Update rules and hyperparameter bundles for all learning algorithms.

Contains the one-step TD rule for Q-tables, Monte-Carlo return targets,
the score-function policy-gradient update, a clipped-surrogate (PPO-style)
update with a tabular value baseline, and a population update for
evolutionary strategies. Training loops that drive these rules against
composed episodes live in ``training``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .policies import (
    COOPERATE,
    EpsilonGreedy,
    Exploration,
    ParameterNoise,
    QTable,
    SoftmaxTabularPolicy,
    TabularDeterministicPolicy,
)

Q_LEARN = "qlearn"
REINFORCE = "reinforce"
CLIPPED_SURROGATE = "clipped_surrogate"
EVOLUTION_STRATEGIES = "evolution_strategies"

ALGORITHMS = (Q_LEARN, REINFORCE, CLIPPED_SURROGATE, EVOLUTION_STRATEGIES)


class LearnerError(ValueError):
    """Invalid hyperparameters or malformed training inputs."""


@dataclass
class LearnerHyper:
    algorithm: str
    lr: float
    gamma: float = 0.99
    iterations: int = 500
    batch_episodes: int = 10
    exploration: Exploration = None
    clip: float | None = None
    population: int | None = None
    noise_std: float | None = None
    elite_fraction: float = 0.25
    noise_decay: bool = False

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise LearnerError(f"unknown algorithm {self.algorithm!r}")
        if self.lr <= 0.0:
            raise LearnerError(f"lr must be > 0, got {self.lr}")
        if not 0.0 < self.gamma <= 1.0:
            raise LearnerError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.iterations < 0:
            raise LearnerError(f"iterations must be >= 0, got {self.iterations}")


def default_hyper(algorithm: str, **overrides) -> LearnerHyper:
    """Published defaults for each algorithm (batch sizes are in episodes)."""
    defaults = {
        Q_LEARN: dict(lr=0.05, gamma=0.99, iterations=4000, batch_episodes=1,
                      exploration=ParameterNoise(1.0)),
        REINFORCE: dict(lr=0.156, gamma=0.99, iterations=1200, batch_episodes=7),
        CLIPPED_SURROGATE: dict(lr=0.008, gamma=0.99, iterations=500,
                                batch_episodes=66, clip=0.2),
        EVOLUTION_STRATEGIES: dict(lr=1.0, gamma=1.0, iterations=40,
                                   batch_episodes=2, population=16, noise_std=1.0),
    }
    config = dict(defaults[algorithm])
    config.update(overrides)
    return LearnerHyper(algorithm=algorithm, **config)


def follower_gradient_hyper(**overrides) -> LearnerHyper:
    """Policy-gradient follower defaults (pre-training and verification)."""
    config = dict(lr=0.02, gamma=1.0, iterations=500, batch_episodes=10)
    config.update(overrides)
    return LearnerHyper(algorithm=REINFORCE, **config)


def qlearn_follower_hyper(**overrides) -> LearnerHyper:
    """Tabular Q-learning follower defaults for the inner-loop oracle."""
    config = dict(lr=0.1, gamma=0.99, iterations=2000, batch_episodes=1,
                  exploration=EpsilonGreedy(0.1))
    config.update(overrides)
    return LearnerHyper(algorithm=Q_LEARN, **config)


@dataclass(frozen=True)
class Experience:
    obs: int
    action: int
    reward: float
    next_obs: int
    done: bool


def q_update(q: QTable, e: Experience, alpha: float, gamma: float) -> QTable:
    """One-step TD update: q(s,a) <- (1-a)q(s,a) + a(r + g max q(s',.)).

    Terminal experiences drop the bootstrap term. Returns a new table.
    """
    if not 0.0 < alpha <= 1.0:
        raise LearnerError(f"alpha must be in (0, 1], got {alpha}")
    out = q.copy()
    _q_update_inplace(out.values, e, alpha, gamma)
    return out


def _q_update_inplace(values: list[list[float]], e: Experience,
                      alpha: float, gamma: float) -> None:
    target = e.reward
    if not e.done:
        target += gamma * max(values[e.next_obs])
    values[e.obs][e.action] = (1.0 - alpha) * values[e.obs][e.action] + alpha * target


def discounted_returns(rewards: list[float], gamma: float) -> list[float]:
    """Reward-to-go G_t for every step of one episode."""
    returns = [0.0] * len(rewards)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        returns[t] = acc
    return returns


def mc_q_update_inplace(values: list[list[float]], steps: list[tuple[int, int, float]],
                        alpha: float, gamma: float) -> None:
    """Every-visit Monte-Carlo control update from one episode.

    Each visited (obs, action) is pulled toward its own discounted
    reward-to-go. Unlike the TD rule there is no bootstrapping across
    entries, so each action's value tracks the returns its own episodes
    actually produced.
    """
    returns = discounted_returns([r for (_, _, r) in steps], gamma)
    for (obs, action, _), g in zip(steps, returns):
        values[obs][action] = (1.0 - alpha) * values[obs][action] + alpha * g


def softmax_grad_log(policy: SoftmaxTabularPolicy, obs: int,
                     action: int) -> list[float]:
    """d ln pi(action|obs) / d logits[obs]: one-hot(action) - probs."""
    p_c, p_d = policy.action_probabilities(obs)
    grad = [-p_c, -p_d]
    grad[action] += 1.0
    return grad


def reinforce_update(policy: SoftmaxTabularPolicy,
                     steps: list[tuple[int, int, float]],
                     alpha: float, gamma: float) -> SoftmaxTabularPolicy:
    """Score-function update from one episode's (obs, action, reward) steps.

    Adds alpha * G_t * grad log pi(a_t|o_t) for every step, with G_t the
    discounted reward-to-go from t.
    """
    if not steps:
        raise LearnerError("reinforce_update requires a nonempty episode")
    out = policy.copy()
    returns = discounted_returns([r for (_, _, r) in steps], gamma)
    for (obs, action, _), g in zip(steps, returns):
        grad = softmax_grad_log(out, obs, action)
        out.logits[obs][0] += alpha * g * grad[0]
        out.logits[obs][1] += alpha * g * grad[1]
    return out


def clipped_surrogate_update(
    policy: SoftmaxTabularPolicy,
    value_table: list[float],
    episodes: list[list[tuple[int, int, float]]],
    hyper: LearnerHyper,
    epochs: int = 10,
    value_lr: float = 0.2,
) -> tuple[SoftmaxTabularPolicy, list[float]]:
    """PPO-style update over a batch of complete episodes.

    Advantages are reward-to-go minus a per-observation value baseline;
    probability ratios are clipped at 1 +/- clip. The value table is
    regressed toward the observed reward-to-go.
    """
    if not episodes:
        raise LearnerError("clipped_surrogate_update requires a nonempty batch")
    clip = hyper.clip if hyper.clip is not None else 0.2

    samples: list[tuple[int, int, float]] = []  # (obs, action, return)
    for steps in episodes:
        returns = discounted_returns([r for (_, _, r) in steps], hyper.gamma)
        samples.extend((obs, action, g) for (obs, action, _), g in zip(steps, returns))

    advantages = [g - value_table[obs] for (obs, _, g) in samples]
    mean_adv = sum(advantages) / len(advantages)
    var = sum((a - mean_adv) ** 2 for a in advantages) / len(advantages)
    std = math.sqrt(var)
    if std > 1e-8:
        advantages = [(a - mean_adv) / std for a in advantages]

    old_probs = [policy.action_probabilities(obs)[0] if action == COOPERATE
                 else policy.action_probabilities(obs)[1]
                 for (obs, action, _) in samples]

    out = policy.copy()
    n = len(samples)
    for _ in range(epochs):
        grads = [[0.0, 0.0] for _ in out.logits]
        for (obs, action, _), adv, old_p in zip(samples, advantages, old_probs):
            probs = out.action_probabilities(obs)
            ratio = probs[action] / old_p if old_p > 1e-12 else 0.0
            clipped_out = (ratio > 1.0 + clip and adv > 0) or (ratio < 1.0 - clip and adv < 0)
            if clipped_out:
                continue
            glog = softmax_grad_log(out, obs, action)
            weight = ratio * adv
            grads[obs][0] += weight * glog[0]
            grads[obs][1] += weight * glog[1]
        for obs, row in enumerate(grads):
            out.logits[obs][0] += hyper.lr * row[0] / n
            out.logits[obs][1] += hyper.lr * row[1] / n

    new_values = value_table[:]
    counts = [0] * len(value_table)
    sums = [0.0] * len(value_table)
    for (obs, _, g) in samples:
        counts[obs] += 1
        sums[obs] += g
    for obs in range(len(new_values)):
        if counts[obs]:
            target = sums[obs] / counts[obs]
            new_values[obs] += value_lr * (target - new_values[obs])
    return out, new_values


def es_update(population: list, fitnesses: list[float], hyper: LearnerHyper,
              rng: random.Random) -> list:
    """Truncation-selection step over whole-policy fitness scalars.

    The single best policy survives unchanged; the rest of the next
    generation are mutated copies of the top fraction. Never sees
    per-step data, only one fitness value per policy.
    """
    if not population:
        raise LearnerError("es_update requires a nonempty population")
    if len(population) != len(fitnesses):
        raise LearnerError("population and fitnesses must have equal length")
    order = sorted(range(len(population)), key=lambda i: fitnesses[i], reverse=True)
    n_parents = max(1, int(len(population) * hyper.elite_fraction))
    parents = [population[i] for i in order[:n_parents]]
    next_population = [parents[0]]
    noise = hyper.noise_std if hyper.noise_std is not None else 1.0
    while len(next_population) < len(population):
        parent = parents[rng.randrange(len(parents))]
        next_population.append(_mutate_policy(parent, noise, rng))
    return next_population


def _mutate_policy(policy, noise_std: float, rng: random.Random):
    if isinstance(policy, TabularDeterministicPolicy):
        actions = list(policy.actions)
        flipped = False
        for i in range(len(actions)):
            if rng.random() < 0.2:
                actions[i] = 1 - actions[i]
                flipped = True
        if not flipped:
            i = rng.randrange(len(actions))
            actions[i] = 1 - actions[i]
        return TabularDeterministicPolicy(tuple(actions))
    if isinstance(policy, SoftmaxTabularPolicy):
        out = policy.copy()
        for row in out.logits:
            row[0] += rng.gauss(0.0, noise_std)
            row[1] += rng.gauss(0.0, noise_std)
        return out
    raise LearnerError(f"cannot mutate {type(policy).__name__}")

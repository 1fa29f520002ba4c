"""Leader episode construction: query segment plus play segment.

The leader's learning problem is built from two parts. First the follower
oracle's queries are replayed as leader observations with zero reward;
then one episode of the underlying game is played against the follower the
oracle computed. Ablation flags deliberately break individual pieces of
this construction:

- ``queries_in_leader_batch=False`` drops the query steps from the episode
  the leader trains on (the follower still conditions on the answers).
- ``reward_during_initial=True`` lets the leader accrue game reward while
  an inner-loop follower is still learning.
- ``leader_phase_bit=True`` doubles the leader's observation space with a
  query/play indicator, letting it behave differently in the two segments.
- ``follower_reset=False`` lets an inner-loop follower resume its previous
  Q-table instead of starting fresh each leader episode.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import games
from .games import FOLLOWER, LEADER, MatrixGameSpec
from .oracles import (
    ContextualMeta,
    OracleKind,
    QLearnInnerLoop,
    _best_response_to_answers,
    enumerate_query_schedule,
    exact_best_response,
    play_episode,
    run_follower_learning_episode,
)
from .policies import (
    Context,
    EpsilonGreedy,
    QTable,
    TabularDeterministicPolicy,
    act,
    induced_policy,
)

QUERY = "query"
PLAY = "play"


class ComposerError(ValueError):
    """Invalid composer configuration for the chosen oracle or policy."""


@dataclass(frozen=True)
class ComposerConfig:
    queries_in_leader_batch: bool = True
    reward_during_initial: bool = False
    leader_phase_bit: bool = False
    follower_reset: bool = True
    subsample_inner_steps: int | None = None


@dataclass(frozen=True, slots=True)
class LeaderStep:
    obs: int
    phase: int  # 0 during queries, 1 during play
    action: int
    reward: float
    segment: str


@dataclass
class LeaderEpisode:
    steps: list[LeaderStep]
    follower_used: TabularDeterministicPolicy
    context: Context | None = None
    follower_play_reward: float = 0.0

    @property
    def play_reward(self) -> float:
        return sum(s.reward for s in self.steps if s.segment == PLAY)

    @property
    def total_reward(self) -> float:
        return sum(s.reward for s in self.steps)


class _PhaseView:
    """Presents a fixed phase to a phase-bit leader policy."""

    def __init__(self, leader, phase: int, n_obs: int, enabled: bool) -> None:
        self.leader = leader
        self.offset = phase * n_obs if enabled else 0

    def act(self, obs: int, rng=None, context=None) -> int:
        return act(self.leader, obs + self.offset, rng=rng)


class EpisodeComposer:
    """Builds leader episodes for one (game, oracle, config) triple.

    Owns the cross-episode state needed by ``follower_reset=False``; a
    composer instance is single-threaded.
    """

    def __init__(self, game: MatrixGameSpec, oracle: OracleKind,
                 config: ComposerConfig | None = None) -> None:
        self.game = game
        self.oracle = oracle
        self.config = config or ComposerConfig()
        self.retained_q: QTable | None = None
        if (self.config.reward_during_initial
                and not isinstance(oracle, QLearnInnerLoop)):
            raise ComposerError(
                "reward_during_initial requires an oracle with learning episodes "
                f"(got {type(oracle).__name__})")

    def _check_phase_capacity(self, leader) -> None:
        if not self.config.leader_phase_bit:
            return
        needed = 2 * self.game.observation_count
        size = None
        if isinstance(leader, TabularDeterministicPolicy):
            size = len(leader.actions)
        elif hasattr(leader, "logits"):
            size = len(leader.logits)
        elif hasattr(leader, "values"):
            size = len(leader.values)
        if size is not None and size < needed:
            raise ComposerError(
                f"phase-bit leader needs {needed} observation entries, policy has {size}")

    def compose(self, leader, rng: random.Random,
                oracle_rng: random.Random | None = None) -> LeaderEpisode:
        """Build one leader episode; ``oracle_rng`` isolates the follower
        oracle's own randomness from the leader's action sampling."""
        self._check_phase_capacity(leader)
        if isinstance(self.oracle, QLearnInnerLoop):
            return self._compose_inner_loop(leader, rng, oracle_rng or rng)
        return self._compose_query_replay(leader, rng)

    def _compose_query_replay(self, leader, rng: random.Random) -> LeaderEpisode:
        game = self.game
        n_obs = game.observation_count
        query_view = _PhaseView(leader, 0, n_obs, self.config.leader_phase_bit)
        schedule = enumerate_query_schedule(game.memory)
        steps: list[LeaderStep] = []
        answers = []
        for obs in schedule:
            answer = query_view.act(obs, rng=rng)
            answers.append(answer)
            steps.append(LeaderStep(obs, 0, answer, 0.0, QUERY))
        answers = tuple(answers)

        if isinstance(self.oracle, ContextualMeta):
            meta = self.oracle.policy
            if meta.n_obs != n_obs or meta.n_queries != len(schedule):
                raise ComposerError(
                    f"meta policy does not match game {game.name!r}")
            follower = meta.response_policy(answers)
            context: Context | None = answers
        else:
            follower, _, _ = _best_response_to_answers(game, answers)
            context = None

        episode = self._play_segment(leader, follower, steps, rng)
        episode.context = context
        return episode

    def _compose_inner_loop(self, leader, rng: random.Random,
                            oracle_rng: random.Random) -> LeaderEpisode:
        game = self.game
        assert isinstance(self.oracle, QLearnInnerLoop)
        hyper = self.oracle.hyper
        query_view = _PhaseView(leader, 0, game.observation_count,
                                self.config.leader_phase_bit)
        if not self.config.follower_reset and self.retained_q is not None:
            q = self.retained_q
        else:
            exploration = hyper.exploration or EpsilonGreedy(0.1)
            q = QTable.zeros(game.observation_count, exploration)

        steps: list[LeaderStep] = []
        for _ in range(hyper.iterations):
            leader_steps = run_follower_learning_episode(
                game, query_view, q, hyper.lr, hyper.gamma, oracle_rng,
                leader_rng=rng)
            for obs, action, reward in leader_steps:
                recorded = reward if self.config.reward_during_initial else 0.0
                steps.append(LeaderStep(obs, 0, action, recorded, QUERY))
        if not self.config.follower_reset:
            self.retained_q = q

        limit = self.config.subsample_inner_steps
        if limit is not None and len(steps) > limit:
            stride = len(steps) / limit
            steps = [steps[int(i * stride)] for i in range(limit)]

        follower = induced_policy(q)
        return self._play_segment(leader, follower, steps, rng)

    def _play_segment(self, leader, follower, query_steps: list[LeaderStep],
                      rng: random.Random) -> LeaderEpisode:
        game = self.game
        play_view = _PhaseView(leader, 1, game.observation_count,
                               self.config.leader_phase_bit)
        steps = query_steps if self.config.queries_in_leader_batch else []
        state = games.initial_state(game)
        follower_reward = 0.0
        for _ in range(game.horizon):
            obs_l = games.observe(game, state, LEADER)
            a_l = play_view.act(obs_l, rng=rng)
            a_f = follower.act(games.observe(game, state, FOLLOWER))
            state, r_l, r_f = games.step(game, state, a_l, a_f)
            steps.append(LeaderStep(obs_l, 1, a_l, r_l, PLAY))
            follower_reward += r_f
        return LeaderEpisode(steps=steps, follower_used=follower,
                             follower_play_reward=follower_reward)


def compose_episode(game: MatrixGameSpec, leader, oracle: OracleKind,
                    config: ComposerConfig | None = None,
                    rng: random.Random | None = None) -> LeaderEpisode:
    """One-shot composition without retained cross-episode state."""
    return EpisodeComposer(game, oracle, config).compose(leader, rng or random.Random(0))


@dataclass
class LemmaReport:
    """Runtime check of the two conditions a sound leader problem must meet."""

    best_response_gap: float
    condition1_pass: bool
    episode_reward_gap: float
    condition2_pass: bool

    @property
    def passed(self) -> bool:
        return self.condition1_pass and self.condition2_pass


def check_lemma_conditions(episode: LeaderEpisode, game: MatrixGameSpec,
                           leader, tolerance: float = 1e-9) -> LemmaReport:
    """Verify a composed episode against the exact oracle.

    Condition 1: the follower the episode used is (close to) an exact best
    response to the leader. Condition 2: the episode's total reward equals
    the leader's exact play value against that follower. Expects a
    deterministic leader, for which both checks are noise-free.
    """
    _, br_value, _ = exact_best_response(game, leader)
    leader_value, follower_value = play_episode(game, leader, episode.follower_used)
    br_gap = br_value - follower_value
    reward_gap = abs(episode.total_reward - leader_value)
    return LemmaReport(
        best_response_gap=br_gap,
        condition1_pass=br_gap <= tolerance,
        episode_reward_gap=reward_gap,
        condition2_pass=reward_gap <= tolerance,
    )

"""Experiment orchestration: configuration, seeded runs, presets, CSV output.

A run trains one leader against one follower oracle on one game for one
seed, then evaluates the frozen greedy commitment and verifies the
equilibrium by retraining a fresh follower against it. Every run derives
its randomness from named streams of the root seed, so toggling one
component never shifts another's stream and identical configs produce
byte-identical output files.
"""

from __future__ import annotations

import csv
import json
import random
import re
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path

from .composer import ComposerConfig, EpisodeComposer, LeaderEpisode
from .games import (
    CANONICAL_12,
    MatrixGameSpec,
    MemoryMode,
    canonical_games,
    load_game_file,
    scale_rewards,
)
from .learners import (
    ALGORITHMS,
    CLIPPED_SURROGATE,
    EVOLUTION_STRATEGIES,
    Q_LEARN,
    REINFORCE,
    LearnerHyper,
    default_hyper,
    follower_gradient_hyper,
    qlearn_follower_hyper,
)
from .oracles import (
    ContextualMeta,
    ExactBestResponseOracle,
    QLearnInnerLoop,
    pretrain_meta_follower,
)
from .policies import (
    EpsilonGreedy,
    ParameterNoise,
    TabularDeterministicPolicy,
    save_policy,
)
from .solver import solve_stackelberg, verify_equilibrium
from .training import TrainResult, train_leader

CSV_HEADER = "run_id,seed,env_steps,leader_mean_episode_reward,follower_mean_episode_reward"

FIGURE_IDS = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig9", "thm2")

ORACLE_KINDS = ("exact", "qlearn", "meta")
SCALES = ("table", "centered")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


def stream_rng(seed: int, name: str) -> random.Random:
    """Named deterministic random stream derived from a root seed."""
    return random.Random(f"{seed}/{name}")


# Preset games used by the ablation figures. Both are oriented so that the
# follower-preferred action is index 0, the action a zero-initialized
# Q-learning follower plays on ties; the leader-preferred equilibrium then
# genuinely has to be discovered, which is the asymmetry these experiments
# are about. Payoffs for the "modified" variants are not published values.
def modified_battle_of_the_sexes(penalty: bool = True) -> MatrixGameSpec:
    leader = ((1.0, -4.0), (-4.0, 2.0)) if penalty else ((1.0, 0.0), (0.0, 2.0))
    return MatrixGameSpec(
        "battle of the sexes modified" + (" (penalty)" if penalty else ""),
        leader, ((2.0, 0.0), (0.0, 0.1)),
        horizon=1, memory=MemoryMode.SINGLE_SHOT)


def relabeled_battle_of_the_sexes() -> MatrixGameSpec:
    # canonical battle of the sexes with both players' actions renamed
    return MatrixGameSpec(
        "battle of the sexes (relabeled)",
        ((1.0, 0.0), (0.0, 2.0)), ((2.0, 0.0), (0.0, 1.0)),
        horizon=1, memory=MemoryMode.SINGLE_SHOT)


def _preset_games() -> dict[str, MatrixGameSpec]:
    games = canonical_games()
    games[modified_battle_of_the_sexes(True).name] = modified_battle_of_the_sexes(True)
    games[modified_battle_of_the_sexes(False).name] = modified_battle_of_the_sexes(False)
    games[relabeled_battle_of_the_sexes().name] = relabeled_battle_of_the_sexes()
    return games


@dataclass
class ExperimentConfig:
    run_id: str
    game: MatrixGameSpec
    oracle: str = "exact"
    algorithm: str = CLIPPED_SURROGATE
    leader_hyper: LearnerHyper | None = None
    inner_hyper: LearnerHyper | None = None
    pretrain_hyper: LearnerHyper | None = None
    representation: str = "table"
    composer: ComposerConfig = field(default_factory=ComposerConfig)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    budget: int | None = None
    scale: str = "table"
    train_centered: bool = False
    eval_episodes: int = 5
    eval_inner_iterations: int = 100
    verify_iterations: int = 50
    final_tail_episodes: int = 50

    def __post_init__(self) -> None:
        if self.oracle not in ORACLE_KINDS:
            raise ConfigError(f"unknown oracle kind {self.oracle!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.scale not in SCALES:
            raise ConfigError(f"unknown report scale {self.scale!r}")
        if self.budget is not None and self.budget <= 0:
            raise ConfigError("budget must be positive")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.leader_hyper is None:
            self.leader_hyper = default_hyper(self.algorithm)
        if self.inner_hyper is None:
            self.inner_hyper = qlearn_follower_hyper()
        if self.pretrain_hyper is None:
            self.pretrain_hyper = follower_gradient_hyper()


@dataclass
class SeedResult:
    seed: int
    final_value: float
    eval_value: float
    eval_follower_value: float
    first_reach: dict[float, int]
    env_steps: int
    pretrain_steps: int
    verify_improvement: float
    verify_passed: bool
    equilibrium: bool
    greedy_policy: TabularDeterministicPolicy
    train_result: TrainResult
    curve_path: Path | None = None
    policy_path: Path | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    reference_value: float
    records: list[SeedResult]
    summary_path: Path | None = None

    def median_final(self) -> float:
        return statistics.median(r.final_value for r in self.records)

    def median_first_reach(self, threshold: float) -> float:
        return statistics.median(r.first_reach.get(threshold, r.env_steps)
                                 for r in self.records)


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def _training_game(config: ExperimentConfig) -> tuple[MatrixGameSpec, float]:
    """Return the game trained on and the episode-reward shift back to the
    payoff-table scale."""
    if config.train_centered:
        scaled = scale_rewards(config.game)
        return scaled, 1.5 * config.game.horizon
    return config.game, 0.0


def _report(value_raw: float, shift: float, config: ExperimentConfig) -> float:
    table_value = value_raw - shift
    if config.scale == "centered":
        return table_value + 1.5 * config.game.horizon
    return table_value


def _build_oracle(config: ExperimentConfig, game: MatrixGameSpec, seed: int,
                  inner_hyper: LearnerHyper | None = None):
    if config.oracle == "exact":
        return ExactBestResponseOracle(), 0
    if config.oracle == "qlearn":
        return QLearnInnerLoop(inner_hyper or config.inner_hyper), 0
    meta, steps = pretrain_meta_follower(
        game, config.pretrain_hyper, stream_rng(seed, "follower"),
        representation=config.representation)
    return ContextualMeta(meta), steps


def _play_phase_policy(policy: TabularDeterministicPolicy, n_obs: int,
                       phase_bit: bool) -> TabularDeterministicPolicy:
    if not phase_bit:
        return policy
    return TabularDeterministicPolicy(policy.actions[n_obs:])


def run_seed(config: ExperimentConfig, seed: int) -> SeedResult:
    """Pre-train (if needed), train the leader, evaluate, verify."""
    game, shift = _training_game(config)
    oracle, pretrain_steps = _build_oracle(config, game, seed)
    result = train_leader(
        game, oracle, config.composer, config.leader_hyper,
        rng=stream_rng(seed, "leader"), oracle_rng=stream_rng(seed, "oracle"),
        max_env_steps=config.budget, step_offset=pretrain_steps)

    # final reported value: mean over the trailing window of the curve
    batch = max(1, config.leader_hyper.batch_episodes)
    tail = max(1, -(-config.final_tail_episodes // batch))
    window = result.curve[-tail:] if result.curve else []
    final_raw = (sum(p.leader_mean_reward for p in window) / len(window)
                 if window else 0.0)
    final_value = _report(final_raw, shift, config)

    eval_value_raw, eval_follower_raw, eval_episodes = _evaluate(
        config, game, result, seed)
    eval_value = _report(eval_value_raw, shift, config)
    eval_follower = eval_follower_raw - (shift if config.scale == "table" else 0.0)

    verify_report = _verify(config, result, eval_value_raw - shift,
                            eval_follower_raw - shift, seed)

    reach: dict[float, int] = {}
    reference = solve_stackelberg(config.game).leader_value
    threshold = reference - 0.5
    for point in result.curve:
        if _report(point.leader_mean_reward, shift, config) >= threshold:
            reach[threshold] = point.env_steps
            break

    return SeedResult(
        seed=seed,
        final_value=final_value,
        eval_value=eval_value,
        eval_follower_value=eval_follower,
        first_reach=reach,
        env_steps=result.env_steps,
        pretrain_steps=pretrain_steps,
        verify_improvement=verify_report.follower_improvement,
        verify_passed=verify_report.passed,
        equilibrium=verify_report.passed,
        greedy_policy=result.greedy_policy,
        train_result=result,
    )


def _evaluate(config: ExperimentConfig, game: MatrixGameSpec,
              result: TrainResult, seed: int) -> tuple[float, float, list[LeaderEpisode]]:
    """Greedy-commitment evaluation with exploration disabled.

    For the inner-loop oracle the follower relearns over a longer horizon
    (or resumes its retained table when resets are off) so the measurement
    reflects the commitment rather than follower-learning noise.
    """
    greedy = result.greedy_policy
    if config.oracle == "qlearn":
        if config.composer.follower_reset:
            eval_hyper = replace(config.inner_hyper,
                                 iterations=max(config.eval_inner_iterations,
                                                config.inner_hyper.iterations))
            composer = EpisodeComposer(game, QLearnInnerLoop(eval_hyper),
                                       replace(config.composer,
                                               reward_during_initial=False))
        else:
            composer = EpisodeComposer(game, QLearnInnerLoop(config.inner_hyper),
                                       replace(config.composer,
                                               reward_during_initial=False))
            composer.retained_q = (result.composer.retained_q.copy()
                                   if result.composer.retained_q else None)
    else:
        composer = EpisodeComposer(game, result.composer.oracle, config.composer)
    rng = stream_rng(seed, "eval")
    oracle_rng = stream_rng(seed, "eval-oracle")
    episodes = [composer.compose(greedy, rng, oracle_rng)
                for _ in range(config.eval_episodes)]
    value = sum(e.play_reward for e in episodes) / len(episodes)
    follower = sum(e.follower_play_reward for e in episodes) / len(episodes)
    return value, follower, episodes


def _verify(config: ExperimentConfig, result: TrainResult,
            leader_table_value: float, incumbent_follower_value: float,
            seed: int):
    """Equilibrium verification on the table-scale game."""
    play_policy = _play_phase_policy(result.greedy_policy,
                                     config.game.observation_count,
                                     config.composer.leader_phase_bit)
    return verify_equilibrium(
        config.game, play_policy, incumbent_follower_value,
        iterations=config.verify_iterations,
        rng=stream_rng(seed, "verify"),
        leader_value_before=leader_table_value)


def run_experiment(config: ExperimentConfig,
                   out_dir: str | Path | None = None,
                   trace: bool = False) -> ExperimentResult:
    """Run every seed; write one curve CSV per seed plus a summary."""
    records = [run_seed(config, seed) for seed in config.seeds]
    reference = solve_stackelberg(config.game).leader_value
    result = ExperimentResult(config=config, reference_value=reference,
                              records=records)
    if out_dir is not None:
        _write_outputs(result, Path(out_dir), trace=trace)
    return result


def _write_outputs(result: ExperimentResult, out_dir: Path,
                   trace: bool = False) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    config = result.config
    game, shift = _training_game(config)
    for record in result.records:
        curve_path = out_dir / f"{config.run_id}_seed{record.seed}.csv"
        with curve_path.open("w", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            for point in record.train_result.curve:
                leader = _report(point.leader_mean_reward, shift, config)
                follower = point.follower_mean_reward - (
                    shift if config.scale == "table" else 0.0)
                fh.write(f"{config.run_id},{record.seed},{point.env_steps},"
                         f"{leader!r},{follower!r}\n")
        record.curve_path = curve_path
        policy_path = out_dir / f"{config.run_id}_seed{record.seed}.policy"
        save_policy(record.greedy_policy, policy_path)
        record.policy_path = policy_path
        if trace:
            _write_trace(config, game, record, out_dir)

    meta_path = out_dir / f"{config.run_id}.meta.json"
    reference = result.reference_value
    if config.scale == "centered":
        reference = reference + 1.5 * config.game.horizon
    meta_path.write_text(json.dumps({
        "run_id": config.run_id,
        "game": config.game.name,
        "scale": config.scale,
        "reference_value": reference,
    }, indent=2) + "\n")

    summary_path = out_dir / f"{config.run_id}_summary.csv"
    with summary_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_id", "seed", "final_value", "eval_value",
                         "reference_value", "env_steps", "pretrain_steps",
                         "verify_improvement", "verify_passed", "equilibrium"])
        for record in result.records:
            writer.writerow([
                config.run_id, record.seed, repr(record.final_value),
                repr(record.eval_value), repr(reference), record.env_steps,
                record.pretrain_steps, repr(record.verify_improvement),
                record.verify_passed, record.equilibrium,
            ])
    result.summary_path = summary_path


def _write_trace(config: ExperimentConfig, game: MatrixGameSpec,
                 record: SeedResult, out_dir: Path) -> None:
    composer = EpisodeComposer(game, record.train_result.composer.oracle,
                               config.composer)
    episode = composer.compose(record.greedy_policy,
                               stream_rng(record.seed, "trace"),
                               stream_rng(record.seed, "trace-oracle"))
    path = out_dir / f"{config.run_id}_seed{record.seed}.trace.tsv"
    with path.open("w") as fh:
        for step in episode.steps:
            fh.write(f"{step.segment}\t{step.obs}\t{step.phase}\t"
                     f"{step.action}\t{step.reward!r}\n")


# ---------------------------------------------------------------------------
# Figure presets
# ---------------------------------------------------------------------------

def meta_ppo_config(game: MatrixGameSpec, run_id: str,
                    seeds: tuple[int, ...] = (0, 1, 2, 3, 4),
                    budget: int = 100_000,
                    composer: ComposerConfig | None = None) -> ExperimentConfig:
    """Meta-follower oracle with a clipped-surrogate leader.

    Published layer sizes target a deep-net stack; on tabular softmax
    policies the same compute budget is better spent on many small
    batches, which both finds the commitment and saturates it.
    """
    return ExperimentConfig(
        run_id=run_id,
        game=game,
        oracle="meta",
        algorithm=CLIPPED_SURROGATE,
        leader_hyper=default_hyper(CLIPPED_SURROGATE, lr=0.2, gamma=1.0,
                                   iterations=370, batch_episodes=9),
        pretrain_hyper=follower_gradient_hyper(lr=0.05, iterations=500),
        composer=composer or ComposerConfig(),
        seeds=seeds,
        budget=budget,
        train_centered=True,
    )


def preset_fig3(seeds: tuple[int, ...] = (0, 1, 2, 3, 4)) -> list[ExperimentConfig]:
    """Meta oracle + clipped-surrogate leader on the 12 canonical games."""
    games = canonical_games()
    return [meta_ppo_config(games[name], f"fig3-{_slug(name)}", seeds)
            for name in CANONICAL_12]


def preset_fig4(seeds: tuple[int, ...] = (0, 1, 2, 3, 4)) -> list[ExperimentConfig]:
    """Hidden-query failures and controls on the modified dilemma."""
    game = canonical_games()["prisoners dilemma modified"]
    hidden = ComposerConfig(queries_in_leader_batch=False)
    return [
        ExperimentConfig(
            run_id="fig4-qlearn-hidden", game=game, oracle="exact",
            algorithm=Q_LEARN,
            leader_hyper=default_hyper(Q_LEARN, lr=0.05, gamma=0.99,
                                       iterations=5000, batch_episodes=1,
                                       exploration=ParameterNoise(1.0)),
            composer=hidden, seeds=seeds),
        ExperimentConfig(
            run_id="fig4-es-hidden", game=game, oracle="exact",
            algorithm=EVOLUTION_STRATEGIES,
            leader_hyper=default_hyper(EVOLUTION_STRATEGIES, iterations=30,
                                       population=16, batch_episodes=2),
            composer=hidden, seeds=seeds),
        ExperimentConfig(
            run_id="fig4-qlearn-visible", game=game, oracle="exact",
            algorithm=Q_LEARN,
            leader_hyper=default_hyper(Q_LEARN, lr=0.05, gamma=0.99,
                                       iterations=6000, batch_episodes=1,
                                       exploration=ParameterNoise(1.5)),
            seeds=seeds),
        ExperimentConfig(
            run_id="fig4-ppo-visible", game=game, oracle="exact",
            algorithm=CLIPPED_SURROGATE,
            leader_hyper=default_hyper(CLIPPED_SURROGATE, lr=0.2, gamma=1.0,
                                       iterations=400, batch_episodes=9),
            seeds=seeds),
    ]


def preset_fig5(seeds: tuple[int, ...] = (0, 1, 2, 3, 4)) -> list[ExperimentConfig]:
    """Leader invariance ablation: phase-bit observation on vs off."""
    game = canonical_games()["prisoners dilemma"]
    configs = []
    for phase_bit in (False, True):
        run_id = "fig5-phasebit-on" if phase_bit else "fig5-invariant"
        configs.append(meta_ppo_config(
            game, run_id, seeds,
            composer=ComposerConfig(leader_phase_bit=phase_bit)))
    return configs


def fig6_inner_hyper() -> LearnerHyper:
    return qlearn_follower_hyper(lr=0.2, iterations=20,
                                 exploration=EpsilonGreedy(0.2))


def preset_fig6(seeds: tuple[int, ...] = tuple(range(10))) -> list[ExperimentConfig]:
    """Leader reward during follower learning, on vs off.

    The leader learning rate is deliberately small: the violating arm's
    returns sum over the whole learning phase, and a coarse learner would
    lock onto whichever commitment its first episodes happened to sample
    instead of comparing the two.
    """
    configs = []
    for penalty in (False, True):
        game = modified_battle_of_the_sexes(penalty)
        tag = "penalty-" if penalty else ""
        for violate in (False, True):
            arm = "reward-during-learning" if violate else "compliant"
            configs.append(ExperimentConfig(
                run_id=f"fig6-{tag}{arm}",
                game=game, oracle="qlearn", algorithm=Q_LEARN,
                inner_hyper=fig6_inner_hyper(),
                leader_hyper=default_hyper(Q_LEARN, lr=0.01, gamma=1.0,
                                           iterations=1200, batch_episodes=1,
                                           exploration=ParameterNoise(1.0)),
                composer=ComposerConfig(reward_during_initial=violate),
                eval_inner_iterations=200,
                seeds=seeds))
    return configs


def preset_fig7(seeds: tuple[int, ...] = tuple(range(10))) -> list[ExperimentConfig]:
    """Follower-reset ablation on battle of the sexes."""
    game = relabeled_battle_of_the_sexes()
    configs = []
    for reset in (True, False):
        configs.append(ExperimentConfig(
            run_id="fig7-reset" if reset else "fig7-noreset",
            game=game, oracle="qlearn", algorithm=Q_LEARN,
            inner_hyper=qlearn_follower_hyper(lr=0.04, iterations=15,
                                              exploration=EpsilonGreedy(0.2)),
            leader_hyper=default_hyper(Q_LEARN, lr=0.1, gamma=1.0,
                                       iterations=400, batch_episodes=1,
                                       exploration=ParameterNoise(1.0),
                                       noise_decay=True),
            composer=ComposerConfig(follower_reset=reset),
            eval_inner_iterations=150,
            seeds=seeds))
    return configs


def preset_fig9(seeds: tuple[int, ...] = (0, 1, 2, 3, 4)) -> list[ExperimentConfig]:
    """Sample-efficiency comparison: meta oracle vs inner-loop Q-learning."""
    game = canonical_games()["prisoners dilemma"]
    meta = meta_ppo_config(game, "fig9-meta", seeds)
    inner = ExperimentConfig(
        run_id="fig9-innerq", game=game, oracle="qlearn",
        algorithm=CLIPPED_SURROGATE,
        inner_hyper=qlearn_follower_hyper(lr=0.2, iterations=12,
                                          exploration=EpsilonGreedy(0.2)),
        leader_hyper=default_hyper(CLIPPED_SURROGATE, lr=0.2, gamma=1.0,
                                   iterations=900, batch_episodes=9),
        seeds=seeds,
        budget=1_000_000,
        train_centered=True,
    )
    return [meta, inner]


def preset_thm2(seeds: tuple[int, ...] = (0, 1, 2, 3, 4)) -> list[ExperimentConfig]:
    """Divergence of per-step RL leaders against immediate best response."""
    game = canonical_games()["prisoners dilemma modified"]
    hidden = ComposerConfig(queries_in_leader_batch=False)
    return [
        ExperimentConfig(
            run_id="thm2-qlearn", game=game, oracle="exact", algorithm=Q_LEARN,
            leader_hyper=default_hyper(Q_LEARN, lr=0.05, gamma=0.99,
                                       iterations=5000, batch_episodes=1,
                                       exploration=ParameterNoise(1.0)),
            composer=hidden, seeds=seeds),
        ExperimentConfig(
            run_id="thm2-reinforce", game=game, oracle="exact",
            algorithm=REINFORCE,
            leader_hyper=default_hyper(REINFORCE, lr=0.01, gamma=0.99,
                                       iterations=2000, batch_episodes=10),
            composer=hidden, seeds=seeds),
    ]


_PRESETS = {
    "fig3": preset_fig3,
    "fig4": preset_fig4,
    "fig5": preset_fig5,
    "fig6": preset_fig6,
    "fig7": preset_fig7,
    "fig9": preset_fig9,
    "thm2": preset_thm2,
}


def reproduce(figure_id: str, out_dir: str | Path | None = None,
              seeds: tuple[int, ...] | None = None,
              trace: bool = False) -> dict[str, ExperimentResult]:
    """Run every experiment bundled under one figure identifier."""
    if figure_id not in _PRESETS:
        raise ConfigError(
            f"unknown figure id {figure_id!r}; expected one of {FIGURE_IDS}")
    maker = _PRESETS[figure_id]
    configs = maker(seeds) if seeds is not None else maker()
    results = {}
    for config in configs:
        results[config.run_id] = run_experiment(config, out_dir, trace=trace)
    return results


# ---------------------------------------------------------------------------
# Config-file parsing
# ---------------------------------------------------------------------------

_SECTION_KEYS = {
    "game": {"name", "file", "scale"},
    "oracle": {"kind", "representation", "pretrain_iterations", "pretrain_lr",
               "pretrain_batch_episodes", "inner_iterations", "inner_lr",
               "inner_gamma", "inner_epsilon"},
    "leader": {"algorithm", "lr", "gamma", "iterations", "batch_episodes",
               "clip", "population", "noise_std", "noise_decay", "epsilon",
               "exploration"},
    "composer": {"queries_in_leader_batch", "reward_during_initial",
                 "leader_phase_bit", "follower_reset", "subsample_inner_steps"},
    "run": {"run_id", "seeds", "budget", "train_centered", "eval_episodes"},
}

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


def _parse_bool(value: str, lineno: int) -> bool:
    if value.lower() in _TRUE:
        return True
    if value.lower() in _FALSE:
        return False
    raise ConfigError(f"line {lineno}: expected a boolean, got {value!r}")


def parse_config(text: str, base_dir: str | Path = ".") -> ExperimentConfig:
    """Parse the flat sectioned ``key = value`` experiment format.

    Unknown sections or keys are hard errors including the line number.
    Unset values fall back to the published hyperparameter defaults.
    """
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in _SECTION_KEYS:
                raise ConfigError(
                    f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SECTION_KEYS[current]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{current}]")
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        sections[current][key] = (value, lineno)

    def take(section: str, key: str, default=None):
        entry = sections.get(section, {}).get(key)
        return entry if entry is not None else (default, 0)

    game_name, lineno = take("game", "name")
    game_file, file_lineno = take("game", "file")
    if game_name is None and game_file is None:
        raise ConfigError("a [game] section with 'name' or 'file' is required")
    if game_name is not None and game_file is not None:
        raise ConfigError("[game] must set either 'name' or 'file', not both")
    if game_file is not None:
        game = load_game_file(Path(base_dir) / game_file)
    else:
        games = _preset_games()
        if game_name not in games:
            raise ConfigError(
                f"line {lineno}: unknown game {game_name!r}")
        game = games[game_name]

    oracle_kind, lineno = take("oracle", "kind", "exact")
    if oracle_kind not in ORACLE_KINDS:
        raise ConfigError(f"line {lineno}: unknown oracle kind {oracle_kind!r}")

    algorithm, lineno = take("leader", "algorithm", CLIPPED_SURROGATE)
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"line {lineno}: unknown algorithm {algorithm!r}")

    def number(section, key, default, conv=float):
        value, lineno = take(section, key)
        if value is None:
            return default
        try:
            return conv(value)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: expected a number for {key!r}, got {value!r}")

    leader = default_hyper(algorithm)
    leader.lr = number("leader", "lr", leader.lr)
    leader.gamma = number("leader", "gamma", leader.gamma)
    leader.iterations = number("leader", "iterations", leader.iterations, int)
    leader.batch_episodes = number("leader", "batch_episodes",
                                   leader.batch_episodes, int)
    leader.clip = number("leader", "clip", leader.clip)
    leader.population = number("leader", "population", leader.population, int)
    noise_std = take("leader", "noise_std")[0]
    epsilon = take("leader", "epsilon")[0]
    if noise_std is not None and epsilon is not None:
        raise ConfigError("[leader] sets both noise_std and epsilon")
    if noise_std is not None:
        leader.exploration = ParameterNoise(float(noise_std))
    elif epsilon is not None:
        leader.exploration = EpsilonGreedy(float(epsilon))
    decay, lineno = take("leader", "noise_decay")
    if decay is not None:
        leader.noise_decay = _parse_bool(decay, lineno)

    inner = qlearn_follower_hyper(
        lr=number("oracle", "inner_lr", 0.1),
        gamma=number("oracle", "inner_gamma", 0.99),
        iterations=number("oracle", "inner_iterations", 2000, int),
        exploration=EpsilonGreedy(number("oracle", "inner_epsilon", 0.1)))
    pretrain = follower_gradient_hyper(
        lr=number("oracle", "pretrain_lr", 0.02),
        iterations=number("oracle", "pretrain_iterations", 500, int),
        batch_episodes=number("oracle", "pretrain_batch_episodes", 10, int))
    representation, lineno = take("oracle", "representation", "table")
    if representation not in ("table", "linear"):
        raise ConfigError(f"line {lineno}: unknown representation {representation!r}")

    composer_kwargs = {}
    for key in ("queries_in_leader_batch", "reward_during_initial",
                "leader_phase_bit", "follower_reset"):
        value, lineno = take("composer", key)
        if value is not None:
            composer_kwargs[key] = _parse_bool(value, lineno)
    subsample, _ = take("composer", "subsample_inner_steps")
    if subsample is not None:
        composer_kwargs["subsample_inner_steps"] = int(subsample)

    seeds_text, _ = take("run", "seeds", "0")
    try:
        seeds = tuple(int(s.strip()) for s in seeds_text.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"could not parse seeds {seeds_text!r}")
    budget_text, _ = take("run", "budget")
    train_centered, lineno = take("run", "train_centered")
    scale, lineno2 = take("game", "scale", "table")
    if scale not in SCALES:
        raise ConfigError(f"line {lineno2}: unknown scale {scale!r}")

    run_id, _ = take("run", "run_id",
                     f"{_slug(game.name)}-{oracle_kind}-{_slug(algorithm)}")

    return ExperimentConfig(
        run_id=run_id,
        game=game,
        oracle=oracle_kind,
        algorithm=algorithm,
        leader_hyper=leader,
        inner_hyper=inner,
        pretrain_hyper=pretrain,
        representation=representation,
        composer=ComposerConfig(**composer_kwargs),
        seeds=seeds,
        budget=int(budget_text) if budget_text else None,
        scale=scale,
        train_centered=(_parse_bool(train_centered, lineno)
                        if train_centered is not None else False),
        eval_episodes=number("run", "eval_episodes", 5, int),
    )

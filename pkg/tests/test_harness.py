from pathlib import Path

import pytest

from stackgames.cli import main
from stackgames.composer import ComposerConfig
from stackgames.experiments import (
    ConfigError,
    ExperimentConfig,
    meta_ppo_config,
    modified_battle_of_the_sexes,
    parse_config,
    preset_fig3,
    preset_fig4,
    preset_fig5,
    preset_fig6,
    preset_fig7,
    preset_fig9,
    preset_thm2,
    relabeled_battle_of_the_sexes,
    reproduce,
    run_experiment,
    stream_rng,
)
from stackgames.games import canonical_games
from stackgames.learners import CLIPPED_SURROGATE, Q_LEARN, default_hyper
from stackgames.policies import ParameterNoise, load_policy
from stackgames.solver import solve_stackelberg

MINIMAL_CONFIG = """\
[game]
name = prisoners dilemma modified

[leader]
algorithm = clipped_surrogate
"""


def quick_config(run_id="quick", seeds=(0,), **overrides) -> ExperimentConfig:
    defaults = dict(
        run_id=run_id,
        game=canonical_games()["prisoners dilemma modified"],
        oracle="exact",
        algorithm=CLIPPED_SURROGATE,
        leader_hyper=default_hyper(CLIPPED_SURROGATE, lr=0.2, gamma=1.0,
                                   iterations=40, batch_episodes=9),
        seeds=seeds,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


def test_parse_minimal_config_uses_defaults():
    config = parse_config(MINIMAL_CONFIG)
    assert config.game.name == "prisoners dilemma modified"
    assert config.oracle == "exact"
    assert config.leader_hyper.lr == 0.008  # published clipped-surrogate default
    assert config.leader_hyper.clip == 0.2
    assert config.seeds == (0,)
    assert config.scale == "table"


def test_parse_config_rejects_unknown_key_with_line_number():
    bad = MINIMAL_CONFIG + "lr_typo = 3\n"
    with pytest.raises(ConfigError, match="line 6"):
        parse_config(bad)
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[nonsense]\nx = 1\n")
    with pytest.raises(ConfigError, match="unknown game"):
        parse_config("[game]\nname = not a game\n")


def test_parse_config_composer_flags_round_trip():
    text = MINIMAL_CONFIG + "\n[composer]\nqueries_in_leader_batch = false\n"
    config = parse_config(text)
    assert config.composer == ComposerConfig(queries_in_leader_batch=False)


def test_parse_config_full_sections():
    text = """\
[game]
name = battle of the sexes
scale = table

[oracle]
kind = qlearn
inner_iterations = 20
inner_lr = 0.2
inner_epsilon = 0.2

[leader]
algorithm = qlearn
lr = 0.1
gamma = 1.0
iterations = 50
noise_std = 1.0
noise_decay = true

[composer]
follower_reset = false

[run]
run_id = custom
seeds = 3,4
budget = 5000
"""
    config = parse_config(text)
    assert config.run_id == "custom"
    assert config.oracle == "qlearn"
    assert config.inner_hyper.iterations == 20
    assert config.algorithm == Q_LEARN
    assert config.leader_hyper.exploration == ParameterNoise(1.0)
    assert config.leader_hyper.noise_decay is True
    assert config.composer.follower_reset is False
    assert config.seeds == (3, 4)
    assert config.budget == 5000


def test_stream_rngs_are_independent_and_deterministic():
    a = stream_rng(7, "leader").random()
    b = stream_rng(7, "follower").random()
    assert a != b
    assert stream_rng(7, "leader").random() == a


def test_run_experiment_writes_per_seed_files(tmp_path):
    config = quick_config(seeds=(0, 1, 2, 3, 4))
    result = run_experiment(config, tmp_path)
    curves = sorted(tmp_path.glob("quick_seed*.csv"))
    assert len(curves) == 5
    assert (tmp_path / "quick_summary.csv").exists()
    assert (tmp_path / "quick.meta.json").exists()
    policies = sorted(tmp_path.glob("quick_seed*.policy"))
    assert len(policies) == 5
    loaded = load_policy(policies[0])
    assert loaded == result.records[0].greedy_policy


def test_run_experiment_is_bitwise_reproducible(tmp_path):
    config = quick_config(seeds=(1,))
    run_experiment(config, tmp_path / "a")
    run_experiment(config, tmp_path / "b")
    first = (tmp_path / "a" / "quick_seed1.csv").read_bytes()
    second = (tmp_path / "b" / "quick_seed1.csv").read_bytes()
    assert first == second


def test_env_step_accounting_matches_episode_lengths(tmp_path):
    config = quick_config(seeds=(0,))
    result = run_experiment(config, tmp_path)
    record = result.records[0]
    episode_length = 13  # 3 queries + 10 play steps
    per_iteration = 9 * episode_length
    steps = [p.env_steps for p in record.train_result.curve]
    assert steps == [per_iteration * (i + 1) for i in range(len(steps))]
    assert record.env_steps == steps[-1]


def test_every_run_ends_with_verification():
    config = quick_config(seeds=(0, 1))
    result = run_experiment(config)
    for record in result.records:
        assert record.verify_improvement == record.verify_improvement
        assert record.equilibrium == record.verify_passed


def test_summary_final_value_matches_solver_on_harmony():
    config = meta_ppo_config(canonical_games()["harmony"], "harmony-check",
                             seeds=(0,))
    config.pretrain_hyper.iterations = 150
    config.leader_hyper.iterations = 120
    result = run_experiment(config)
    reference = solve_stackelberg(canonical_games()["harmony"]).leader_value
    assert result.records[0].final_value >= reference - 0.5


def test_meta_ppo_reaches_optimum_on_modified_pd():
    # optimum 0 on the table scale, within the combined-step budget
    config = meta_ppo_config(canonical_games()["prisoners dilemma modified"],
                             "pdm-meta", seeds=(0,))
    result = run_experiment(config)
    record = result.records[0]
    assert record.env_steps <= 100_000
    assert record.final_value >= -0.5


def test_meta_reference_value_matches_solver(tmp_path):
    import json

    config = quick_config(seeds=(0,))
    run_experiment(config, tmp_path)
    meta = json.loads((tmp_path / "quick.meta.json").read_text())
    game = canonical_games()["prisoners dilemma modified"]
    assert meta["reference_value"] == solve_stackelberg(game).leader_value


def test_centered_scale_reporting():
    config = quick_config(seeds=(0,), scale="centered", train_centered=True)
    result = run_experiment(config)
    # optimum 0 on the table scale is +15 on the centered episode scale
    assert result.records[0].eval_value == pytest.approx(15.0)


def test_preset_shapes():
    assert len(preset_fig3()) == 12
    assert {c.run_id for c in preset_fig4()} == {
        "fig4-qlearn-hidden", "fig4-es-hidden", "fig4-qlearn-visible",
        "fig4-ppo-visible"}
    assert {c.composer.leader_phase_bit for c in preset_fig5()} == {True, False}
    fig6 = preset_fig6()
    assert len(fig6) == 4
    assert all(len(c.seeds) == 10 for c in fig6)
    fig7 = preset_fig7()
    assert {c.composer.follower_reset for c in fig7} == {True, False}
    fig9 = preset_fig9()
    assert {c.oracle for c in fig9} == {"meta", "qlearn"}
    thm2 = preset_thm2()
    assert {c.algorithm for c in thm2} == {"qlearn", "reinforce"}
    assert all(not c.composer.queries_in_leader_batch for c in thm2)


def test_reproduce_rejects_unknown_figure():
    with pytest.raises(ConfigError):
        reproduce("fig42")


def test_preset_games_are_relabelings():
    bots = canonical_games()["battle of the sexes"]
    relabeled = relabeled_battle_of_the_sexes()
    # swapping both players' action labels maps one onto the other
    for i in range(2):
        for j in range(2):
            assert relabeled.leader_payoff[i][j] == bots.leader_payoff[1 - i][1 - j]
            assert relabeled.follower_payoff[i][j] == bots.follower_payoff[1 - i][1 - j]
    assert solve_stackelberg(relabeled).leader_value == 2.0
    assert solve_stackelberg(modified_battle_of_the_sexes(False)).leader_value == 2.0


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_solve_exact_and_golden(tmp_path, capsys):
    golden = tmp_path / "golden.csv"
    assert main(["solve-exact", "--golden", str(golden)]) == 0
    out = capsys.readouterr().out
    assert "battle of the sexes,0,0,2.0,1.0" in out
    assert golden.exists()
    assert main(["solve-exact", "--golden", str(golden)]) == 0
    golden.write_text(golden.read_text().replace("2.0", "3.0"))
    assert main(["solve-exact", "--golden", str(golden)]) == 3


def test_cli_golden_matches_frozen_file(capsys):
    frozen = Path(__file__).resolve().parent.parent / "data" / "golden_solutions.csv"
    assert main(["solve-exact", "--golden", str(frozen)]) == 0
    assert "golden check passed" in capsys.readouterr().out


def test_cli_train_and_plot(tmp_path, capsys):
    config = tmp_path / "exp.conf"
    config.write_text("""\
[game]
name = prisoners dilemma modified

[leader]
algorithm = clipped_surrogate
lr = 0.2
gamma = 1.0
iterations = 30
batch_episodes = 9

[run]
seeds = 0
""")
    out_dir = tmp_path / "out"
    assert main(["train", "--config", str(config), "--out", str(out_dir),
                 "--dump-episodes"]) == 0
    csvs = list(out_dir.glob("*seed0.csv"))
    assert len(csvs) == 1
    traces = list(out_dir.glob("*seed0.trace.tsv"))
    assert len(traces) == 1
    line = traces[0].read_text().splitlines()[0].split("\t")
    assert line[0] in ("query", "play") and len(line) == 5

    plots = tmp_path / "plots"
    assert main(["plot", str(out_dir), "--out", str(plots)]) == 0
    assert len(list(plots.glob("*.svg"))) == 1


def test_cli_train_bad_config_exits_2(tmp_path):
    config = tmp_path / "bad.conf"
    config.write_text("[game]\nname = prisoners dilemma\nbogus = 1\n")
    assert main(["train", "--config", str(config)]) == 2
    assert main(["train", "--config", str(tmp_path / "missing.conf")]) == 2


def test_cli_verify_pass_and_fail(tmp_path):
    from stackgames.policies import TabularDeterministicPolicy, save_policy

    tft = TabularDeterministicPolicy((0, 0, 1))
    path = tmp_path / "tft.policy"
    save_policy(tft, path)
    assert main(["verify", str(path), "--game", "prisoners dilemma modified"]) == 0

    # follower indifference between columns the leader cares about: the
    # retrained follower drifts and the leader value swings, failing the
    # leader-value-unchanged condition
    game_file = tmp_path / "drift.txt"
    game_file.write_text("""\
name = drift
leader_payoff = 5,0;5,0
follower_payoff = 1,1;1,1
horizon = 1
memory = single
gamma = 0.99
""")
    fragile = tmp_path / "fragile.policy"
    save_policy(TabularDeterministicPolicy((0,)), fragile)
    assert main(["verify", str(fragile), "--game-file", str(game_file),
                 "--seed", "0"]) == 3
    assert main(["verify", str(fragile), "--game-file", str(game_file),
                 "--seed", "1"]) == 0


def test_cli_verify_unknown_game(tmp_path):
    from stackgames.policies import TabularDeterministicPolicy, save_policy

    path = tmp_path / "p.policy"
    save_policy(TabularDeterministicPolicy((0,)), path)
    assert main(["verify", str(path), "--game", "nope"]) == 2


def test_cli_game_file_round_trip(tmp_path, capsys):
    game_file = tmp_path / "game.txt"
    game_file.write_text("""\
name = custom single shot
leader_payoff = 2,0;0,1
follower_payoff = 1,0;0,2
horizon = 1
memory = single
gamma = 0.99
""")
    assert main(["solve-exact", "--game-file", str(game_file)]) == 0
    assert "custom single shot,0,0,2.0,1.0" in capsys.readouterr().out

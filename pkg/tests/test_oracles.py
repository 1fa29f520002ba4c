import random

import pytest

from stackgames.games import MemoryMode, canonical_games
from stackgames.learners import qlearn_follower_hyper, follower_gradient_hyper
from stackgames.oracles import (
    ContextualMeta,
    ExactBestResponseOracle,
    OracleError,
    QLearnInnerLoop,
    all_follower_policies,
    context_from_queries,
    enumerate_query_schedule,
    exact_best_response,
    play_episode,
    pretrain_meta_follower,
    qlearn_best_response,
    respond,
)
from stackgames.policies import (
    QueryCountingPolicy,
    TabularDeterministicPolicy,
    induced_policy,
)

TFT_OTHER = TabularDeterministicPolicy((0, 0, 1))
TFT_JOINT = TabularDeterministicPolicy((0, 0, 1, 0, 1))
ALWAYS_DEFECT = TabularDeterministicPolicy((1, 1, 1))


def test_query_schedule_lengths_and_order():
    assert enumerate_query_schedule(MemoryMode.OTHER_ONLY) == (0, 1, 2)
    assert enumerate_query_schedule(MemoryMode.JOINT_ONE_STEP) == (0, 1, 2, 3, 4)
    assert enumerate_query_schedule(MemoryMode.SINGLE_SHOT) == (0,)


def test_context_from_queries():
    schedule = enumerate_query_schedule(MemoryMode.OTHER_ONLY)
    assert context_from_queries(TFT_OTHER, schedule) == (0, 0, 1)
    assert context_from_queries(ALWAYS_DEFECT, schedule) == (1, 1, 1)
    joint = enumerate_query_schedule(MemoryMode.JOINT_ONE_STEP)
    assert context_from_queries(TFT_JOINT, joint) == (0, 0, 1, 0, 1)


def test_context_uses_query_access_only():
    counted = QueryCountingPolicy(TFT_OTHER)
    schedule = enumerate_query_schedule(MemoryMode.OTHER_ONLY)
    context_from_queries(counted, schedule)
    assert counted.calls == len(schedule)


def test_exact_best_response_modified_pd_vs_tit_for_tat():
    game = canonical_games()["prisoners dilemma modified"]
    follower, follower_value, leader_value = exact_best_response(game, TFT_OTHER)
    assert follower.actions == (0, 0, 0)  # always cooperate
    assert leader_value == 0.0
    assert follower_value == -10.0


def test_exact_best_response_vs_always_defect_defects_on_path():
    game = canonical_games()["prisoners dilemma modified"]
    follower, follower_value, _ = exact_best_response(game, ALWAYS_DEFECT)
    # on-path behavior is always defect (the other-cooperated entry is
    # unreachable against an always-defecting leader)
    assert follower.actions[0] == 1
    assert follower.actions[2] == 1
    assert follower_value == -20.0


def test_exact_best_response_standard_pd_vs_tit_for_tat():
    game = canonical_games()["prisoners dilemma"]
    follower, follower_value, leader_value = exact_best_response(game, TFT_JOINT)
    assert follower.actions == (0, 0, 0, 0, 0)
    assert follower_value == -10.0
    assert leader_value == -10.0


def test_exact_best_response_optimality_by_re_enumeration():
    # independent check: the returned value dominates every alternative
    for name in ("prisoners dilemma modified", "chicken", "battle of the sexes"):
        game = canonical_games()[name]
        n = game.observation_count
        for index in range(2 ** n):
            leader = TabularDeterministicPolicy(
                tuple((index >> b) & 1 for b in range(n)))
            _, follower_value, leader_value = exact_best_response(game, leader)
            for follower in all_follower_policies(game.memory):
                v_l, v_f = play_episode(game, leader, follower)
                assert v_f <= follower_value
                if v_f == follower_value:
                    assert v_l <= leader_value  # strong tie rule


def test_exact_best_response_query_purity():
    game = canonical_games()["prisoners dilemma modified"]
    counted = QueryCountingPolicy(TFT_OTHER)
    exact_best_response(game, counted)
    # one query per observation; rollouts run against the answer vector
    assert counted.calls == 3


def test_qlearn_best_response_converges_to_exact():
    game = canonical_games()["prisoners dilemma modified"]
    hyper = qlearn_follower_hyper(lr=0.1, gamma=0.99, iterations=2000)
    q = qlearn_best_response(game, TFT_OTHER, hyper, random.Random(0))
    assert induced_policy(q).actions == (0, 0, 0)

    q2 = qlearn_best_response(game, ALWAYS_DEFECT, hyper, random.Random(1))
    learned = induced_policy(q2)
    assert learned.actions[0] == 1 and learned.actions[2] == 1


def test_qlearn_best_response_zero_iterations():
    game = canonical_games()["prisoners dilemma modified"]
    hyper = qlearn_follower_hyper(iterations=0)
    q = qlearn_best_response(game, TFT_OTHER, hyper, random.Random(0))
    assert q.values == [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]


def test_qlearn_best_response_query_purity():
    game = canonical_games()["prisoners dilemma modified"]
    counted = QueryCountingPolicy(TFT_OTHER)
    hyper = qlearn_follower_hyper(iterations=50)
    qlearn_best_response(game, counted, hyper, random.Random(2))
    assert counted.calls == 50 * game.horizon  # one query per learning step


@pytest.fixture(scope="module")
def pretrained_modified_pd():
    game = canonical_games()["prisoners dilemma modified"]
    from stackgames.games import scale_rewards

    hyper = follower_gradient_hyper(lr=0.05, iterations=300, batch_episodes=10)
    policy, steps = pretrain_meta_follower(scale_rewards(game), hyper,
                                           random.Random(7))
    assert steps == 300 * 10 * game.horizon
    return policy


def test_meta_follower_best_responds_to_tit_for_tat(pretrained_modified_pd):
    game = canonical_games()["prisoners dilemma modified"]
    response = pretrained_modified_pd.response_policy((0, 0, 1))
    assert response.actions == (0, 0, 0)


def test_meta_follower_best_responds_to_always_defect(pretrained_modified_pd):
    response = pretrained_modified_pd.response_policy((1, 1, 1))
    assert response.actions[0] == 1 and response.actions[2] == 1


def test_meta_follower_sound_for_every_context(pretrained_modified_pd):
    # soundness sweep: within 0.5 of the exact best-response value on the
    # table scale, for all 8 contexts
    game = canonical_games()["prisoners dilemma modified"]
    for index in range(8):
        leader = TabularDeterministicPolicy(
            tuple((index >> b) & 1 for b in range(3)))
        context = context_from_queries(
            leader, enumerate_query_schedule(game.memory))
        response = pretrained_modified_pd.response_policy(context)
        _, achieved = play_episode(game, leader, response)
        _, best_value, _ = exact_best_response(game, leader)
        assert achieved >= best_value - 0.5, f"context {context}"


def test_respond_exact_dispatch_matches_exact_best_response():
    game = canonical_games()["prisoners dilemma modified"]
    direct, _, _ = exact_best_response(game, TFT_OTHER)
    via_dispatch = respond(ExactBestResponseOracle(), game, TFT_OTHER)
    assert direct == via_dispatch


def test_respond_qlearn_dispatch_converges():
    game = canonical_games()["prisoners dilemma modified"]
    oracle = QLearnInnerLoop(qlearn_follower_hyper(iterations=2000))
    follower = respond(oracle, game, TFT_OTHER, random.Random(4))
    exact, _, _ = exact_best_response(game, TFT_OTHER)
    assert follower == exact


def test_respond_meta_dispatch(pretrained_modified_pd):
    game = canonical_games()["prisoners dilemma modified"]
    follower = respond(ContextualMeta(pretrained_modified_pd), game, TFT_OTHER,
                       random.Random(5))
    exact, _, _ = exact_best_response(game, TFT_OTHER)
    assert follower == exact


def test_respond_meta_rejects_mode_mismatch(pretrained_modified_pd):
    game = canonical_games()["prisoners dilemma"]  # joint memory, 5 observations
    with pytest.raises(OracleError):
        respond(ContextualMeta(pretrained_modified_pd), game, TFT_JOINT,
                random.Random(6))


def test_best_response_invariant_under_reward_scaling():
    from stackgames.games import scale_rewards

    game = canonical_games()["prisoners dilemma modified"]
    scaled = scale_rewards(game)
    for index in range(8):
        leader = TabularDeterministicPolicy(
            tuple((index >> b) & 1 for b in range(3)))
        plain, _, _ = exact_best_response(game, leader)
        shifted, _, _ = exact_best_response(scaled, leader)
        assert plain == shifted


def test_strong_stackelberg_tie_breaking():
    # constant follower payoffs tie every follower policy; the oracle must
    # then pick a follower maximizing the leader's value
    from stackgames.games import MatrixGameSpec

    game = MatrixGameSpec("ties", ((1, 0), (0, 0)), ((0, 0), (0, 0)),
                          horizon=1, memory=MemoryMode.SINGLE_SHOT)
    follower, follower_value, leader_value = exact_best_response(
        game, TabularDeterministicPolicy((0,)))
    assert follower_value == 0.0
    assert leader_value == 1.0
    assert follower.actions == (0,)

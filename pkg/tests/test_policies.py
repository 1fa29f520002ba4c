import math
import random

import pytest

from stackgames.games import MemoryMode
from stackgames.policies import (
    ContextualFollowerPolicy,
    EpsilonGreedy,
    PolicyError,
    QTable,
    QueryCountingPolicy,
    SoftmaxTabularPolicy,
    TabularDeterministicPolicy,
    act,
    all_contexts,
    context_index,
    induced_policy,
    load_policy,
    perturb_parameters,
    sample_random_leader_policy,
    save_policy,
)

TIT_FOR_TAT_OTHER = TabularDeterministicPolicy((0, 0, 1))


def chi2_sf(x, df):
    """Survival function of the chi-squared distribution.

    Regularized upper incomplete gamma via series / continued fraction
    (enough accuracy for a p-value threshold check).
    """
    a, half_x = df / 2.0, x / 2.0
    if half_x <= 0:
        return 1.0
    if half_x < a + 1:
        # lower series
        term = 1.0 / a
        total = term
        n = a
        for _ in range(500):
            n += 1
            term *= half_x / n
            total += term
            if term < total * 1e-12:
                break
        p_lower = total * math.exp(-half_x + a * math.log(half_x) - math.lgamma(a))
        return 1.0 - p_lower
    # upper continued fraction (Lentz)
    tiny = 1e-300
    b = half_x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-12:
            break
    return h * math.exp(-half_x + a * math.log(half_x) - math.lgamma(a))


def test_deterministic_act_ignores_rng():
    assert TIT_FOR_TAT_OTHER.act(0) == 0
    assert TIT_FOR_TAT_OTHER.act(1) == 0
    assert act(TIT_FOR_TAT_OTHER, 2) == 1  # defect after the other defected


def test_epsilon_greedy_defect_probability():
    # induced action defect, epsilon 0.2 -> P(defect) = 0.9
    q = QTable([[0.0, 1.0]], EpsilonGreedy(0.2))
    rng = random.Random(0)
    n = 100_000
    defects = sum(q.act(0, rng=rng) for _ in range(n))
    assert abs(defects / n - 0.9) < 0.01
    # induced action cooperate, epsilon 0.2 -> P(defect) = 0.1
    q2 = QTable([[1.0, 0.0]], EpsilonGreedy(0.2))
    defects2 = sum(q2.act(0, rng=rng) for _ in range(n))
    assert abs(defects2 / n - 0.1) < 0.01


def test_softmax_symmetric_logits_sample_half():
    policy = SoftmaxTabularPolicy([[0.0, 0.0]])
    rng = random.Random(1)
    n = 100_000
    defects = sum(policy.act(0, rng=rng) for _ in range(n))
    assert abs(defects / n - 0.5) < 0.01


def test_induced_policy_tie_breaks_to_cooperate():
    assert induced_policy(QTable([[0.0, 0.0]])).actions == (0,)
    assert induced_policy(QTable([[-2.0, -1.0]])).actions == (1,)
    assert induced_policy(QTable([[-9.8, -14.7]])).actions == (0,)


def test_act_with_zero_epsilon_matches_induced_policy():
    rng = random.Random(3)
    q = QTable([[0.3, -0.2], [-1.0, 2.0], [0.0, 0.0]], EpsilonGreedy(0.0))
    det = induced_policy(q)
    for obs in range(3):
        for _ in range(10):
            assert q.act(obs, rng=rng) == det.act(obs)


def test_sample_random_leader_policy_uniform_single_shot():
    rng = random.Random(5)
    n = 100_000
    defects = sum(
        sample_random_leader_policy(MemoryMode.SINGLE_SHOT, rng).actions[0]
        for _ in range(n))
    assert abs(defects / n - 0.5) < 0.01


def test_sample_random_leader_policy_covers_all_joint_policies():
    rng = random.Random(6)
    seen = {sample_random_leader_policy(MemoryMode.JOINT_ONE_STEP, rng).actions
            for _ in range(10_000)}
    assert len(seen) == 32


def test_sample_random_leader_policy_chi_squared_uniformity():
    rng = random.Random(7)
    counts = [0] * 32
    n = 100_000
    for _ in range(n):
        policy = sample_random_leader_policy(MemoryMode.JOINT_ONE_STEP, rng)
        idx = sum(a << i for i, a in enumerate(policy.actions))
        counts[idx] += 1
    expected = n / 32
    stat = sum((c - expected) ** 2 / expected for c in counts)
    assert chi2_sf(stat, 31) > 0.001


def test_sampling_is_seed_deterministic():
    a = sample_random_leader_policy(MemoryMode.JOINT_ONE_STEP, random.Random(42))
    b = sample_random_leader_policy(MemoryMode.JOINT_ONE_STEP, random.Random(42))
    assert a == b


def test_perturb_parameters_zero_noise_is_identity():
    q = QTable([[1.0, -2.0], [0.5, 0.0]])
    out = perturb_parameters(q, 0.0, random.Random(0))
    assert out.values == q.values
    assert out.values is not q.values


def test_perturb_parameters_zero_mean():
    q = QTable([[0.0, 0.0]])
    rng = random.Random(9)
    n = 100_000
    total_c = total_d = 0.0
    for _ in range(n):
        out = perturb_parameters(q, 1.0, rng)
        total_c += out.values[0][0]
        total_d += out.values[0][1]
    assert abs(total_c / n) < 0.02
    assert abs(total_d / n) < 0.02
    assert q.values == [[0.0, 0.0]]  # original untouched


def test_perturb_parameters_flips_small_gaps():
    q = QTable([[0.1, 0.0]])
    rng = random.Random(10)
    flips = sum(
        induced_policy(perturb_parameters(q, 1.0, rng)) != induced_policy(q)
        for _ in range(2000))
    assert flips > 100


def test_perturb_parameters_rejects_negative_stddev():
    with pytest.raises(PolicyError):
        perturb_parameters(QTable([[0.0, 0.0]]), -1.0, random.Random(0))


def test_contextual_policy_requires_context():
    policy = ContextualFollowerPolicy(n_obs=3, n_queries=3)
    with pytest.raises(PolicyError):
        policy.act(0, rng=random.Random(0))
    with pytest.raises(PolicyError):
        TIT_FOR_TAT_OTHER.act(0, context=(0, 0, 1))


def test_contextual_table_and_linear_representations_agree():
    rng = random.Random(11)
    linear = ContextualFollowerPolicy(n_obs=5, n_queries=5, representation="linear")
    for row in linear.weights:
        for i in range(len(row)):
            row[i] = rng.gauss(0.0, 1.0)
    table = linear.as_table()
    for ctx in all_contexts(5):
        for obs in range(5):
            expected = linear.logits_for(obs, ctx)
            assert table.logits_for(obs, ctx) == pytest.approx(expected)
            assert table.greedy_action(obs, ctx) == linear.greedy_action(obs, ctx)


def test_context_index_round_trip():
    for n in (1, 3, 5):
        indices = {context_index(ctx) for ctx in all_contexts(n)}
        assert indices == set(range(2 ** n))


def test_query_counting_wrapper():
    counted = QueryCountingPolicy(TIT_FOR_TAT_OTHER)
    assert counted.act(2) == 1
    assert counted.act(0) == 0
    assert counted.calls == 2


def test_save_load_deterministic_policy(tmp_path):
    path = tmp_path / "det.policy"
    save_policy(TIT_FOR_TAT_OTHER, path)
    assert load_policy(path) == TIT_FOR_TAT_OTHER


def test_save_load_softmax_and_qtable(tmp_path):
    softmax = SoftmaxTabularPolicy([[0.25, -1.5], [3.0, 0.0]])
    save_policy(softmax, tmp_path / "s.policy")
    loaded = load_policy(tmp_path / "s.policy")
    assert isinstance(loaded, SoftmaxTabularPolicy)
    assert loaded.logits == softmax.logits

    q = QTable([[0.5, -9.25]])
    save_policy(q, tmp_path / "q.policy")
    loaded_q = load_policy(tmp_path / "q.policy")
    assert isinstance(loaded_q, QTable)
    assert loaded_q.values == q.values


def test_save_load_contextual_policy(tmp_path):
    rng = random.Random(13)
    policy = ContextualFollowerPolicy(n_obs=3, n_queries=3)
    for ctx_rows in policy.table:
        for row in ctx_rows:
            row[0] = rng.gauss(0, 1)
            row[1] = rng.gauss(0, 1)
    save_policy(policy, tmp_path / "meta.policy")
    loaded = load_policy(tmp_path / "meta.policy")
    for ctx in all_contexts(3):
        for obs in range(3):
            assert loaded.logits_for(obs, ctx) == pytest.approx(
                policy.logits_for(obs, ctx))

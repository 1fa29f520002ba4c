"""Policy and value-table representations for both players.

All policies expose ``act(obs, rng=None, context=None)`` returning an action
in {0, 1}. Deterministic policies ignore the rng. The module-level ``act``
function dispatches uniformly, which keeps best-response oracles honest:
they interact with a leader policy only through these calls.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .games import COOPERATE, DEFECT, MemoryMode

Context = tuple[int, ...]


class PolicyError(ValueError):
    """Invalid policy construction or act() call."""


@dataclass(frozen=True)
class EpsilonGreedy:
    epsilon: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise PolicyError(f"epsilon must be in [0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class ParameterNoise:
    stddev: float

    def __post_init__(self) -> None:
        if self.stddev < 0.0:
            raise PolicyError(f"stddev must be >= 0, got {self.stddev}")


Exploration = EpsilonGreedy | ParameterNoise | None


@dataclass(frozen=True)
class TabularDeterministicPolicy:
    """One fixed action per observation."""

    actions: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(a not in (0, 1) for a in self.actions):
            raise PolicyError(f"actions must be 0 or 1, got {self.actions}")

    def act(self, obs: int, rng: random.Random | None = None,
            context: Context | None = None) -> int:
        if context is not None:
            raise PolicyError("deterministic policy takes no context")
        return self.actions[obs]


def _softmax_pair(logit_c: float, logit_d: float) -> tuple[float, float]:
    m = max(logit_c, logit_d)
    ec = math.exp(logit_c - m)
    ed = math.exp(logit_d - m)
    z = ec + ed
    return ec / z, ed / z


@dataclass
class SoftmaxTabularPolicy:
    """Per-observation categorical distribution parametrized by logits."""

    logits: list[list[float]]

    def __post_init__(self) -> None:
        for row in self.logits:
            if len(row) != 2 or any(not math.isfinite(x) for x in row):
                raise PolicyError(f"logit rows must be two finite numbers, got {row!r}")

    @classmethod
    def uniform(cls, n_obs: int) -> "SoftmaxTabularPolicy":
        return cls([[0.0, 0.0] for _ in range(n_obs)])

    def action_probabilities(self, obs: int) -> tuple[float, float]:
        return _softmax_pair(*self.logits[obs])

    def act(self, obs: int, rng: random.Random | None = None,
            context: Context | None = None) -> int:
        if context is not None:
            raise PolicyError("softmax policy takes no context")
        if rng is None:
            raise PolicyError("sampling from a softmax policy requires an rng")
        p_c, _ = self.action_probabilities(obs)
        return COOPERATE if rng.random() < p_c else DEFECT

    def greedy(self) -> TabularDeterministicPolicy:
        return TabularDeterministicPolicy(
            tuple(DEFECT if row[DEFECT] > row[COOPERATE] else COOPERATE
                  for row in self.logits))

    def copy(self) -> "SoftmaxTabularPolicy":
        return SoftmaxTabularPolicy([row[:] for row in self.logits])


@dataclass
class QTable:
    """Action-value table with an optional exploration rule.

    With ``EpsilonGreedy(eps)`` the greedy action is flipped with
    probability eps/2, i.e. the defect probability is
    ``theta + (-1)^theta * eps/2`` for induced action theta. With
    ``ParameterNoise`` acting is greedy; the owning learner is expected to
    draw a perturbed copy per episode via ``perturb_parameters``.
    """

    values: list[list[float]]
    exploration: Exploration = None

    def __post_init__(self) -> None:
        for row in self.values:
            if len(row) != 2 or any(not math.isfinite(x) for x in row):
                raise PolicyError(f"q rows must be two finite numbers, got {row!r}")

    @classmethod
    def zeros(cls, n_obs: int, exploration: Exploration = None) -> "QTable":
        return cls([[0.0, 0.0] for _ in range(n_obs)], exploration)

    def greedy_action(self, obs: int) -> int:
        row = self.values[obs]
        return DEFECT if row[DEFECT] > row[COOPERATE] else COOPERATE

    def act(self, obs: int, rng: random.Random | None = None,
            context: Context | None = None) -> int:
        if context is not None:
            raise PolicyError("q-table policy takes no context")
        theta = self.greedy_action(obs)
        if isinstance(self.exploration, EpsilonGreedy):
            if rng is None:
                raise PolicyError("epsilon-greedy acting requires an rng")
            p_defect = theta + ((-1) ** theta) * (self.exploration.epsilon / 2.0)
            return DEFECT if rng.random() < p_defect else COOPERATE
        return theta

    def copy(self) -> "QTable":
        return QTable([row[:] for row in self.values], self.exploration)


def induced_policy(q: QTable) -> TabularDeterministicPolicy:
    """Greedy deterministic policy of a Q-table; ties resolve to cooperate."""
    return TabularDeterministicPolicy(
        tuple(q.greedy_action(obs) for obs in range(len(q.values))))


def perturb_parameters(q: QTable, stddev: float, rng: random.Random) -> QTable:
    """Fresh copy with independent Gaussian noise added to every value."""
    if stddev < 0.0:
        raise PolicyError(f"stddev must be >= 0, got {stddev}")
    return QTable([[v + rng.gauss(0.0, stddev) for v in row] for row in q.values],
                  exploration=None)


def context_index(context: Context) -> int:
    """Pack a context's answer bits into a table index."""
    idx = 0
    for i, answer in enumerate(context):
        idx += answer << i
    return idx


def all_contexts(n_queries: int) -> list[Context]:
    return [tuple((i >> b) & 1 for b in range(n_queries))
            for i in range(2 ** n_queries)]


@dataclass
class ContextualFollowerPolicy:
    """Follower policy conditioned on the leader's query answers.

    Two interchangeable representations:

    - ``"table"``: independent logit rows per (context, observation) pair.
    - ``"linear"``: logits are a linear map of one-hot(observation)
      concatenated with the context bits.
    """

    n_obs: int
    n_queries: int
    representation: str = "table"
    table: list[list[list[float]]] = field(default_factory=list)
    weights: list[list[float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.representation not in ("table", "linear"):
            raise PolicyError(f"unknown representation {self.representation!r}")
        if self.representation == "table" and not self.table:
            self.table = [[[0.0, 0.0] for _ in range(self.n_obs)]
                          for _ in range(2 ** self.n_queries)]
        if self.representation == "linear" and not self.weights:
            self.weights = [[0.0] * (self.n_obs + self.n_queries) for _ in range(2)]

    def logits_for(self, obs: int, context: Context) -> list[float]:
        if len(context) != self.n_queries:
            raise PolicyError(
                f"context length {len(context)} != query count {self.n_queries}")
        if self.representation == "table":
            return self.table[context_index(context)][obs]
        logits = []
        for a in range(2):
            w = self.weights[a]
            value = w[obs]
            for i, bit in enumerate(context):
                value += w[self.n_obs + i] * bit
            logits.append(value)
        return logits

    def action_probabilities(self, obs: int, context: Context) -> tuple[float, float]:
        return _softmax_pair(*self.logits_for(obs, context))

    def act(self, obs: int, rng: random.Random | None = None,
            context: Context | None = None) -> int:
        if context is None:
            raise PolicyError("contextual policy requires a context")
        if rng is None:
            raise PolicyError("sampling from a contextual policy requires an rng")
        p_c, _ = self.action_probabilities(obs, context)
        return COOPERATE if rng.random() < p_c else DEFECT

    def greedy_action(self, obs: int, context: Context) -> int:
        logits = self.logits_for(obs, context)
        return DEFECT if logits[DEFECT] > logits[COOPERATE] else COOPERATE

    def response_policy(self, context: Context) -> TabularDeterministicPolicy:
        """Materialize the greedy per-observation response for one context."""
        return TabularDeterministicPolicy(
            tuple(self.greedy_action(obs, context) for obs in range(self.n_obs)))

    def as_table(self) -> "ContextualFollowerPolicy":
        """Exact-table copy of this policy (evaluates the linear map everywhere)."""
        out = ContextualFollowerPolicy(self.n_obs, self.n_queries, "table")
        for ctx in all_contexts(self.n_queries):
            for obs in range(self.n_obs):
                out.table[context_index(ctx)][obs] = list(self.logits_for(obs, ctx))
        return out


Policy = (TabularDeterministicPolicy | SoftmaxTabularPolicy | QTable |
          ContextualFollowerPolicy)


def act(policy, obs: int, context: Context | None = None,
        rng: random.Random | None = None) -> int:
    """Uniform action dispatch over all policy representations."""
    return policy.act(obs, rng=rng, context=context)


class QueryCountingPolicy:
    """Wrapper that counts act() calls; used to audit oracle query purity."""

    def __init__(self, inner) -> None:
        self.inner = inner
        self.calls = 0

    def act(self, obs: int, rng: random.Random | None = None,
            context: Context | None = None) -> int:
        self.calls += 1
        return self.inner.act(obs, rng=rng, context=context)


def sample_random_leader_policy(memory: MemoryMode,
                                rng: random.Random) -> TabularDeterministicPolicy:
    """Uniform draw over all deterministic policies for the memory mode."""
    n = memory.observation_count
    return TabularDeterministicPolicy(tuple(rng.randrange(2) for _ in range(n)))


# ---------------------------------------------------------------------------
# Serialization: line-based text formats used by the CLI save/load flags.
# ---------------------------------------------------------------------------

_KIND_DET = "deterministic"
_KIND_SOFTMAX = "softmax"
_KIND_Q = "qtable"
_KIND_CONTEXTUAL = "contextual"


def save_policy(policy, path: str | Path) -> None:
    lines: list[str] = []
    if isinstance(policy, TabularDeterministicPolicy):
        lines.append(f"# stackgames policy kind={_KIND_DET}")
        for obs, action in enumerate(policy.actions):
            lines.append(f"{obs} {action}")
    elif isinstance(policy, SoftmaxTabularPolicy):
        lines.append(f"# stackgames policy kind={_KIND_SOFTMAX}")
        for obs, row in enumerate(policy.logits):
            lines.append(f"{obs} {row[0]!r} {row[1]!r}")
    elif isinstance(policy, QTable):
        lines.append(f"# stackgames policy kind={_KIND_Q}")
        for obs, row in enumerate(policy.values):
            lines.append(f"{obs} {row[0]!r} {row[1]!r}")
    elif isinstance(policy, ContextualFollowerPolicy):
        table = policy if policy.representation == "table" else policy.as_table()
        lines.append(f"# stackgames policy kind={_KIND_CONTEXTUAL} "
                     f"obs={table.n_obs} queries={table.n_queries}")
        for ctx in all_contexts(table.n_queries):
            ctx_str = "".join(str(b) for b in ctx)
            for obs in range(table.n_obs):
                row = table.table[context_index(ctx)][obs]
                lines.append(f"{obs} {ctx_str} {row[0]!r} {row[1]!r}")
    else:
        raise PolicyError(f"cannot serialize {type(policy).__name__}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_policy(path: str | Path):
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# stackgames policy kind="):
        raise PolicyError(f"{path}: not a stackgames policy file")
    header = dict(part.split("=", 1) for part in text[0][2:].split()[2:])
    kind = header["kind"]
    body = [line for line in text[1:] if line.strip()]
    if kind == _KIND_DET:
        actions = [0] * len(body)
        for line in body:
            obs, action = line.split()
            actions[int(obs)] = int(action)
        return TabularDeterministicPolicy(tuple(actions))
    if kind in (_KIND_SOFTMAX, _KIND_Q):
        rows: list[list[float]] = [[0.0, 0.0] for _ in body]
        for line in body:
            obs, lc, ld = line.split()
            rows[int(obs)] = [float(lc), float(ld)]
        return SoftmaxTabularPolicy(rows) if kind == _KIND_SOFTMAX else QTable(rows)
    if kind == _KIND_CONTEXTUAL:
        n_obs = int(header["obs"])
        n_queries = int(header["queries"])
        policy = ContextualFollowerPolicy(n_obs, n_queries, "table")
        for line in body:
            obs, ctx_str, lc, ld = line.split()
            ctx = tuple(int(b) for b in ctx_str)
            policy.table[context_index(ctx)][int(obs)] = [float(lc), float(ld)]
        return policy
    raise PolicyError(f"{path}: unknown policy kind {kind!r}")

"""Two-player iterated matrix game environments.

A game is a 2x2 bimatrix played for a fixed number of steps. Both agents
pick one of two actions per step (action 0 is "cooperate" / the first row
or column, action 1 is "defect" / the second). What each agent observes
about the past is controlled by a memory mode:

- ``JOINT_ONE_STEP``: both agents see the joint action pair from the
  previous step (5 observations: initial, CC, CD, DC, DD).
- ``OTHER_ONLY``: each agent sees only the other agent's previous action
  (3 observations: initial, other-cooperated, other-defected).
- ``SINGLE_SHOT``: no memory, a single observation.

Dynamics are deterministic; all types are immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

COOPERATE = 0
DEFECT = 1

LEADER = "leader"
FOLLOWER = "follower"

# Canonical observation orderings. First letter of a joint label is the
# leader's previous action, second the follower's.
JOINT_OBS_LABELS = ("initial", "CC", "CD", "DC", "DD")
OTHER_OBS_LABELS = ("initial", "otherC", "otherD")


class GameError(ValueError):
    """Contract violation in game construction or stepping."""


class MemoryMode(Enum):
    JOINT_ONE_STEP = "joint"
    OTHER_ONLY = "other"
    SINGLE_SHOT = "single"

    @property
    def observation_count(self) -> int:
        return {MemoryMode.JOINT_ONE_STEP: 5,
                MemoryMode.OTHER_ONLY: 3,
                MemoryMode.SINGLE_SHOT: 1}[self]

    @property
    def observation_labels(self) -> tuple[str, ...]:
        if self is MemoryMode.JOINT_ONE_STEP:
            return JOINT_OBS_LABELS
        if self is MemoryMode.OTHER_ONLY:
            return OTHER_OBS_LABELS
        return ("initial",)


PayoffMatrix = tuple[tuple[float, float], tuple[float, float]]


@dataclass(frozen=True)
class GameState:
    """Environment state: the previous joint action pair plus a step counter.

    ``prev`` is None on the initial step. The joint pair is stored even in
    OTHER_ONLY mode; ``observe`` projects it down per role.
    """

    prev: tuple[int, int] | None
    step_count: int


@dataclass(frozen=True)
class MatrixGameSpec:
    name: str
    leader_payoff: PayoffMatrix
    follower_payoff: PayoffMatrix
    horizon: int
    memory: MemoryMode
    discount: float = 0.99

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise GameError(f"horizon must be >= 1, got {self.horizon}")
        if not 0.0 < self.discount <= 1.0:
            raise GameError(f"discount must be in (0, 1], got {self.discount}")
        for matrix in (self.leader_payoff, self.follower_payoff):
            if len(matrix) != 2 or any(len(row) != 2 for row in matrix):
                raise GameError(f"payoff matrix must be 2x2, got {matrix!r}")
            for row in matrix:
                for entry in row:
                    if entry != entry or entry in (float("inf"), float("-inf")):
                        raise GameError(f"payoff entries must be finite, got {entry!r}")

    @property
    def observation_count(self) -> int:
        return self.memory.observation_count


def _m(rows: list[list[float]]) -> PayoffMatrix:
    return tuple(tuple(float(x) for x in row) for row in rows)  # type: ignore[return-value]


# The 12 canonical symmetric games. Rows are leader actions, columns follower
# actions. The follower matrix is the transpose-symmetric counterpart.
_CANONICAL_TABLE = {
    "prisoners dilemma": ([[-1, -3], [0, -2]], [[-1, 0], [-3, -2]]),
    "stag hunt": ([[0, -3], [-1, -2]], [[0, -1], [-3, -2]]),
    "assurance": ([[0, -3], [-2, -1]], [[0, -2], [-3, -1]]),
    "coordination": ([[0, -2], [-3, -1]], [[0, -3], [-2, -1]]),
    "mixedharmony": ([[0, -1], [-3, -2]], [[0, -3], [-1, -2]]),
    "harmony": ([[0, -1], [-2, -3]], [[0, -2], [-1, -3]]),
    "noconflict": ([[0, -2], [-1, -3]], [[0, -1], [-2, -3]]),
    "deadlock": ([[-2, -3], [0, -1]], [[-2, 0], [-3, -1]]),
    "prisoners delight": ([[-3, -2], [0, -1]], [[-3, 0], [-2, -1]]),
    "hero": ([[-3, -1], [0, -2]], [[-3, 0], [-1, -2]]),
    "battle": ([[-2, -1], [0, -3]], [[-2, 0], [-1, -3]]),
    "chicken": ([[-1, -2], [0, -3]], [[-1, 0], [-2, -3]]),
}

CANONICAL_12 = tuple(_CANONICAL_TABLE)


def canonical_games() -> dict[str, MatrixGameSpec]:
    """All 14 named game specs, keyed by name.

    The 12 canonical symmetric games run for 10 steps with joint one-step
    memory. "battle of the sexes" is a single-shot game and "prisoners
    dilemma modified" swaps the leader's rows and gives both agents memory
    of the other agent's action only.
    """
    games: dict[str, MatrixGameSpec] = {}
    for name, (lp, fp) in _CANONICAL_TABLE.items():
        games[name] = MatrixGameSpec(name, _m(lp), _m(fp), horizon=10,
                                     memory=MemoryMode.JOINT_ONE_STEP)
    games["battle of the sexes"] = MatrixGameSpec(
        "battle of the sexes", _m([[2, 0], [0, 1]]), _m([[1, 0], [0, 2]]),
        horizon=1, memory=MemoryMode.SINGLE_SHOT)
    games["prisoners dilemma modified"] = MatrixGameSpec(
        "prisoners dilemma modified", _m([[0, -2], [-1, -3]]), _m([[-1, 0], [-3, -2]]),
        horizon=10, memory=MemoryMode.OTHER_ONLY)
    return games


def initial_state(spec: MatrixGameSpec) -> GameState:
    return GameState(prev=None, step_count=0)


def step(spec: MatrixGameSpec, state: GameState, leader_action: int,
         follower_action: int) -> tuple[GameState, float, float]:
    """Play one joint action pair; returns (next_state, leader_r, follower_r)."""
    if state.step_count >= spec.horizon:
        raise GameError(
            f"cannot step terminal state (step {state.step_count} of horizon {spec.horizon})")
    if leader_action not in (0, 1) or follower_action not in (0, 1):
        raise GameError(f"actions must be 0 or 1, got {(leader_action, follower_action)}")
    r_leader = spec.leader_payoff[leader_action][follower_action]
    r_follower = spec.follower_payoff[leader_action][follower_action]
    next_state = GameState(prev=(leader_action, follower_action),
                           step_count=state.step_count + 1)
    return next_state, r_leader, r_follower


def observe(spec: MatrixGameSpec, state: GameState, role: str) -> int:
    """Project the state to the role's observation index."""
    if role not in (LEADER, FOLLOWER):
        raise GameError(f"role must be {LEADER!r} or {FOLLOWER!r}, got {role!r}")
    if spec.memory is MemoryMode.SINGLE_SHOT:
        return 0
    if state.prev is None:
        return 0
    prev_leader, prev_follower = state.prev
    if spec.memory is MemoryMode.JOINT_ONE_STEP:
        # Both roles share the joint index: [initial, CC, CD, DC, DD].
        return 1 + 2 * prev_leader + prev_follower
    other = prev_follower if role == LEADER else prev_leader
    return 1 + other


# Reward centering used during training: shifts the canonical entry set
# {0, -1, -2, -3} onto {1.5, 0.5, -0.5, -1.5}.
_SCALE_MAP = {0.0: 1.5, -1.0: 0.5, -2.0: -0.5, -3.0: -1.5}
SCALE_SHIFT = 1.5


def scale_rewards(spec: MatrixGameSpec) -> MatrixGameSpec:
    """Return a copy with both payoff matrices centered around zero."""
    def convert(matrix: PayoffMatrix) -> PayoffMatrix:
        out = []
        for row in matrix:
            for entry in row:
                if entry not in _SCALE_MAP:
                    raise GameError(
                        f"payoff entry {entry!r} outside the canonical set {{0,-1,-2,-3}}")
            out.append(tuple(_SCALE_MAP[entry] for entry in row))
        return tuple(out)  # type: ignore[return-value]

    return replace(spec, name=spec.name + " (scaled)",
                   leader_payoff=convert(spec.leader_payoff),
                   follower_payoff=convert(spec.follower_payoff))


_MEMORY_KEYWORDS = {
    "joint": MemoryMode.JOINT_ONE_STEP,
    "other": MemoryMode.OTHER_ONLY,
    "single": MemoryMode.SINGLE_SHOT,
}


def _parse_matrix(text: str) -> PayoffMatrix:
    rows = text.split(";")
    if len(rows) != 2:
        raise GameError(f"expected two ';'-separated rows, got {text!r}")
    matrix = []
    for row in rows:
        cells = [cell.strip() for cell in row.split(",")]
        if len(cells) != 2:
            raise GameError(f"expected two ','-separated entries per row, got {row!r}")
        matrix.append([float(cell) for cell in cells])
    return _m(matrix)


def load_game_file(path: str | Path) -> MatrixGameSpec:
    """Load a user-supplied game definition.

    Format, one ``key = value`` per line (# starts a comment)::

        name = my game
        leader_payoff = 2,0;0,1
        follower_payoff = 1,0;0,2
        horizon = 10
        memory = joint
        gamma = 0.99
    """
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GameError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in fields:
            raise GameError(f"{path}:{lineno}: duplicate key {key!r}")
        fields[key] = value

    required = {"name", "leader_payoff", "follower_payoff", "horizon", "memory", "gamma"}
    missing = required - fields.keys()
    if missing:
        raise GameError(f"{path}: missing keys: {sorted(missing)}")
    unknown = fields.keys() - required
    if unknown:
        raise GameError(f"{path}: unknown keys: {sorted(unknown)}")
    memory = _MEMORY_KEYWORDS.get(fields["memory"])
    if memory is None:
        raise GameError(f"{path}: memory must be one of {sorted(_MEMORY_KEYWORDS)}")
    return MatrixGameSpec(
        name=fields["name"],
        leader_payoff=_parse_matrix(fields["leader_payoff"]),
        follower_payoff=_parse_matrix(fields["follower_payoff"]),
        horizon=int(fields["horizon"]),
        memory=memory,
        discount=float(fields["gamma"]),
    )

#!/usr/bin/env python3
"""Straight-line brute-force Stackelberg enumeration, used to freeze the
golden solution file. Deliberately self-contained: game tables and episode
dynamics are written out directly here instead of importing the package,
so this is an independent path against which the solver is checked.

Usage: python scripts/independent_enum.py > data/golden_solutions.csv
"""

# name -> (leader payoff, follower payoff, horizon, memory)
# memory: "joint" = both agents see the previous joint action pair,
#         "other" = each agent sees the other agent's previous action,
#         "single" = no memory.
GAMES = {
    "prisoners dilemma": ([[-1, -3], [0, -2]], [[-1, 0], [-3, -2]], 10, "joint"),
    "stag hunt": ([[0, -3], [-1, -2]], [[0, -1], [-3, -2]], 10, "joint"),
    "assurance": ([[0, -3], [-2, -1]], [[0, -2], [-3, -1]], 10, "joint"),
    "coordination": ([[0, -2], [-3, -1]], [[0, -3], [-2, -1]], 10, "joint"),
    "mixedharmony": ([[0, -1], [-3, -2]], [[0, -3], [-1, -2]], 10, "joint"),
    "harmony": ([[0, -1], [-2, -3]], [[0, -2], [-1, -3]], 10, "joint"),
    "noconflict": ([[0, -2], [-1, -3]], [[0, -1], [-2, -3]], 10, "joint"),
    "deadlock": ([[-2, -3], [0, -1]], [[-2, 0], [-3, -1]], 10, "joint"),
    "prisoners delight": ([[-3, -2], [0, -1]], [[-3, 0], [-2, -1]], 10, "joint"),
    "hero": ([[-3, -1], [0, -2]], [[-3, 0], [-1, -2]], 10, "joint"),
    "battle": ([[-2, -1], [0, -3]], [[-2, 0], [-1, -3]], 10, "joint"),
    "chicken": ([[-1, -2], [0, -3]], [[-1, 0], [-2, -3]], 10, "joint"),
    "battle of the sexes": ([[2, 0], [0, 1]], [[1, 0], [0, 2]], 1, "single"),
    "prisoners dilemma modified": ([[0, -2], [-1, -3]], [[-1, 0], [-3, -2]], 10, "other"),
}

OBS_COUNT = {"joint": 5, "other": 3, "single": 1}


def obs_index(memory, prev_leader, prev_follower, role):
    if memory == "single":
        return 0
    if prev_leader is None:
        return 0
    if memory == "joint":
        return 1 + 2 * prev_leader + prev_follower
    other = prev_follower if role == "leader" else prev_leader
    return 1 + other


def episode_values(lp, fp, horizon, memory, leader, follower):
    prev_l = prev_f = None
    v_leader = 0.0
    v_follower = 0.0
    for _ in range(horizon):
        a_l = leader[obs_index(memory, prev_l, prev_f, "leader")]
        a_f = follower[obs_index(memory, prev_l, prev_f, "follower")]
        v_leader += lp[a_l][a_f]
        v_follower += fp[a_l][a_f]
        prev_l, prev_f = a_l, a_f
    return v_leader, v_follower


def policies(n_obs):
    return [[(i >> b) & 1 for b in range(n_obs)] for i in range(2 ** n_obs)]


def solve(name):
    lp, fp, horizon, memory = GAMES[name]
    n = OBS_COUNT[memory]
    best = None
    for leader in policies(n):
        # follower best response: max follower value, ties toward higher
        # leader value, then lowest policy index
        response = None
        for index, follower in enumerate(policies(n)):
            v_l, v_f = episode_values(lp, fp, horizon, memory, leader, follower)
            if response is None or (v_f, v_l, -index) > (response[0], response[1], -response[2]):
                response = (v_f, v_l, index, follower)
        v_f, v_l, _, follower = response
        if best is None or v_l > best[0]:
            best = (v_l, v_f, leader, follower)
    return best


def rows():
    out = []
    for name in GAMES:
        v_l, v_f, leader, follower = solve(name)
        out.append((name,
                    "".join(str(a) for a in leader),
                    "".join(str(a) for a in follower),
                    repr(v_l), repr(v_f)))
    return out


def main():
    print("game,leader_policy,follower_policy,leader_value,follower_value")
    for row in rows():
        print(",".join(row))


if __name__ == "__main__":
    main()

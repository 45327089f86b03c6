"""Fixed opponent policies for both games.

Soccer heuristics work purely from the (egocentric) observation key, so the
same code plays either seat.  Commons heuristics need the whole map and read
it from ``Observation.state``.
"""
from __future__ import annotations

import numpy as np

from qmixlab.envs import commons as cm
from qmixlab.envs import soccer as sc
from qmixlab.envs.base import Observation, Policy
from qmixlab.errors import UnknownOpponent


def _one_hot(n: int, a: int) -> np.ndarray:
    p = np.zeros(n)
    p[a] = 1.0
    return p


class UniformRandom(Policy):
    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self._p = np.full(n_actions, 1.0 / n_actions)

    def probs(self, obs: Observation) -> np.ndarray:
        return self._p

    def act(self, obs, rng) -> int:
        return int(rng.integers(self.n_actions))


def _soccer_view(key: int):
    me, other, code = sc.parts_from_key(key)
    me_rc, other_rc = divmod(me, sc.COLS), divmod(other, sc.COLS)
    if code >= 2:
        ball = divmod(code - 2, sc.COLS)
    else:
        ball = me_rc if code == 0 else other_rc
    return me_rc, other_rc, ball, code


def _step_toward(src, dst, cols_first: bool = True) -> int:
    dr, dc = dst[0] - src[0], dst[1] - src[1]
    col_move = sc.E if dc > 0 else sc.W if dc < 0 else None
    row_move = sc.S if dr > 0 else sc.N if dr < 0 else None
    order = (col_move, row_move) if cols_first else (row_move, col_move)
    for a in order:
        if a is not None:
            return a
    return sc.STAY


def _attack(me) -> int:
    r, c = me
    if r not in sc.GOAL_ROWS:
        return sc.S if r < sc.GOAL_ROWS[0] else sc.N
    return sc.E


class SoccerChaser(Policy):
    """Runs at the ball (or its carrier); once holding it, runs for the goal."""

    n_actions = 5

    def probs(self, obs: Observation) -> np.ndarray:
        me, other, ball, code = _soccer_view(obs.key)
        if code == 0:
            a = _attack(me)
        else:
            a = _step_toward(me, ball)
        return _one_hot(5, a)


class SoccerCamper(Policy):
    """Parks in front of its own goal, tracking the ball's row; attacks only when handed the ball."""

    n_actions = 5

    def probs(self, obs: Observation) -> np.ndarray:
        me, other, ball, code = _soccer_view(obs.key)
        if code == 0:
            return _one_hot(5, _attack(me))
        guard = (min(max(ball[0], sc.GOAL_ROWS[0]), sc.GOAL_ROWS[-1]), 0)
        if me == guard:
            return _one_hot(5, sc.STAY)
        return _one_hot(5, _step_toward(me, guard, cols_first=False))


def _ego_action(facing: int, direction: int) -> int:
    return (cm.FORWARD, cm.RIGHT, cm.BACKWARD, cm.LEFT)[(direction - facing) % 4]


def _commons_moves_toward(state, me, facing, target) -> list[int]:
    dr, dc = target[0] - me[0], target[1] - me[1]
    dirs = []
    if abs(dc) >= abs(dr):
        dirs += [1 if dc > 0 else 3] if dc else []
        dirs += [2 if dr > 0 else 0] if dr else []
    else:
        dirs += [2 if dr > 0 else 0] if dr else []
        dirs += [1 if dc > 0 else 3] if dc else []
    out = []
    for d in dirs:
        nxt = (me[0] + cm.DIRS[d][0], me[1] + cm.DIRS[d][1])
        if not cm._blocked(state.map, nxt):
            out.append(_ego_action(facing, d))
    return out


class CommonsHarvester(Policy):
    """Greedy apple collector: walks to the nearest apple (Manhattan distance)."""

    n_actions = cm.N_ACTIONS

    def _action(self, state, player) -> int:
        me = state.positions[player]
        if me is None:
            return cm.NOOP
        rows, cols = np.nonzero(state.apples)
        if rows.size == 0:
            return cm.NOOP
        dist = np.abs(rows - me[0]) + np.abs(cols - me[1])
        k = int(np.argmin(dist))
        moves = _commons_moves_toward(state, me, state.facings[player], (int(rows[k]), int(cols[k])))
        return moves[0] if moves else cm.NOOP

    def probs(self, obs: Observation) -> np.ndarray:
        return _one_hot(self.n_actions, self._action(obs.state, obs.player))


class CommonsTagger(Policy):
    """Hunts the other player and fires whenever it is in the beam; harvests while it is away."""

    n_actions = cm.N_ACTIONS

    def __init__(self, beam_length: int = cm.CommonsParams().beam_length):
        self.beam_length = beam_length
        self._harvest = CommonsHarvester()

    def _action(self, state, player) -> int:
        me, other = state.positions[player], state.positions[1 - player]
        if me is None:
            return cm.NOOP
        if other is None:
            return self._harvest._action(state, player)
        facing = state.facings[player]
        if other in cm.beam_cells(state.map, me, facing, self.beam_length):
            return cm.TAG
        for d in range(4):
            if other in cm.beam_cells(state.map, me, d, self.beam_length):
                rel = (d - facing) % 4
                return cm.TURN_LEFT if rel == 3 else cm.TURN_RIGHT
        moves = _commons_moves_toward(state, me, facing, other)
        return moves[0] if moves else cm.NOOP

    def probs(self, obs: Observation) -> np.ndarray:
        return _one_hot(self.n_actions, self._action(obs.state, obs.player))


SOCCER_OPPONENTS = {
    "random": lambda: UniformRandom(5),
    "chaser": SoccerChaser,
    "camper": SoccerCamper,
}
COMMONS_OPPONENTS = {
    "random": lambda: UniformRandom(cm.N_ACTIONS),
    "harvester": CommonsHarvester,
    "tagger": CommonsTagger,
}
_REGISTRY = {"soccer": SOCCER_OPPONENTS, "commons": COMMONS_OPPONENTS}


def scripted_opponent(opponent_id: str, env: str = "soccer") -> Policy:
    """Build a scripted opponent by id.

    ``"model:<path>"`` loads a saved Q-function and plays it greedily from
    the opponent's seat.
    """
    if opponent_id.startswith("model:"):
        from qmixlab.persist import load_model
        from qmixlab.qlearn.policies import GreedyPolicy

        return GreedyPolicy(load_model(opponent_id[len("model:"):]))
    try:
        return _REGISTRY[env][opponent_id]()
    except KeyError:
        known = sorted(_REGISTRY.get(env, {}))
        raise UnknownOpponent(f"unknown opponent {opponent_id!r} for {env!r}; known: {known}") from None

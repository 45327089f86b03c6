"""Two-player grid-world soccer.

The field is 5 rows by 4 columns.  Player 0 spawns on the west side and
attacks the east goal; player 1 mirrors it.  Goals are the off-field cells
beside rows 1 and 2.  Each step the two actions are executed one after the
other in a uniformly drawn order.  A player that moves into the ball
carrier's cell while the carrier still has to act takes the ball; every
other collision is a bounce.

Observations are egocentric: the observing player is always encoded as
"player 0" and, for the east-side player, the columns are mirrored so that
its target goal is on the east as well.  Action ids are interpreted in the
same mirrored frame.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from qmixlab.envs.base import Observation, StepOutcome
from qmixlab.errors import EpisodeFinished

ROWS, COLS = 5, 4
N_CELLS = ROWS * COLS
GOAL_ROWS = (1, 2)
BALL_SPAWNS = ((2, 1), (2, 2))
PLAYER_SPAWNS = ((2, 0), (2, 3))
STEP_CAP = 100

N, S, E, W, STAY = range(5)
ACTION_NAMES = ("N", "S", "E", "W", "stay")
MOVES = ((-1, 0), (1, 0), (0, 1), (0, -1), (0, 0))
_MIRROR_ACTION = (N, S, W, E, STAY)

GROUND = 2

# one-hot categories per cell, from the observer's point of view
SELF, SELF_BALL, OTHER, OTHER_BALL, BALL, EMPTY = range(6)
N_CATEGORIES = 6
OBS_DIM = N_CELLS * N_CATEGORIES
N_KEYS = N_CELLS * N_CELLS * (2 + N_CELLS)


@dataclass(frozen=True)
class SoccerState:
    pos0: tuple[int, int]
    pos1: tuple[int, int]
    holder: int  # 0, 1 or GROUND
    ball: tuple[int, int] | None  # ground cell, only while holder == GROUND
    t: int = 0
    done: bool = False

    @property
    def positions(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return self.pos0, self.pos1


def soccer_reset(seed: int) -> SoccerState:
    rng = np.random.default_rng(seed)
    ball = BALL_SPAWNS[int(rng.integers(2))]
    return SoccerState(PLAYER_SPAWNS[0], PLAYER_SPAWNS[1], GROUND, ball, 0)


def to_world_action(action: int, player: int) -> int:
    return _MIRROR_ACTION[action] if player == 1 else action


def soccer_resolve(state: SoccerState, actions, order, cap: int = STEP_CAP):
    """Apply egocentric ``actions`` in the given execution ``order``.

    Deterministic core of :func:`soccer_step`; returns a :class:`StepOutcome`.
    """
    if state.done:
        raise EpisodeFinished()
    pos = [state.pos0, state.pos1]
    holder, ball = state.holder, state.ball
    steal = False
    first = order[0]
    for i in order:
        a = to_world_action(int(actions[i]), i)
        if a == STAY:
            continue
        dr, dc = MOVES[a]
        r, c = pos[i]
        nr, nc = r + dr, c + dc
        if not 0 <= nc < COLS:
            if holder == i and nr in GOAL_ROWS:
                # leaving the field through a goal; own goals count for the opponent
                scorer = 0 if nc == COLS else 1
                rewards = (1.0, -1.0) if scorer == 0 else (-1.0, 1.0)
                nxt = SoccerState(pos[0], pos[1], holder, None, state.t + 1, True)
                return StepOutcome(nxt, rewards, True,
                                   {"scorer": scorer, "order": tuple(order), "steal": steal, "timeout": False})
            continue
        if not 0 <= nr < ROWS:
            continue
        j = 1 - i
        if (nr, nc) == pos[j]:
            if holder == j and i == first:
                holder = i
                steal = True
            continue
        pos[i] = (nr, nc)
        if holder == GROUND and ball == (nr, nc):
            holder, ball = i, None
    t = state.t + 1
    timeout = t >= cap
    nxt = SoccerState(pos[0], pos[1], holder, ball, t, timeout)
    return StepOutcome(nxt, (0.0, 0.0), timeout,
                       {"scorer": None, "order": tuple(order), "steal": steal, "timeout": timeout})


def soccer_step(state: SoccerState, actions, rng: np.random.Generator, cap: int = STEP_CAP) -> StepOutcome:
    if state.done:
        raise EpisodeFinished()
    order = (0, 1) if rng.random() < 0.5 else (1, 0)
    return soccer_resolve(state, actions, order, cap)


def _canonical(state: SoccerState, perspective: int):
    """(self cell, other cell, ball code) in the observer's mirrored frame."""
    me, other = (state.pos0, state.pos1) if perspective == 0 else (state.pos1, state.pos0)
    mirror = perspective == 1

    def cell(rc):
        r, c = rc
        return r * COLS + (COLS - 1 - c if mirror else c)

    if state.holder == GROUND:
        code = 2 + cell(state.ball)
    else:
        code = 0 if state.holder == perspective else 1
    return cell(me), cell(other), code


def key_from_parts(me: int, other: int, code: int) -> int:
    return (me * N_CELLS + other) * (2 + N_CELLS) + code


def parts_from_key(key: int) -> tuple[int, int, int]:
    rest, code = divmod(int(key), 2 + N_CELLS)
    me, other = divmod(rest, N_CELLS)
    return me, other, code


@lru_cache(maxsize=None)
def vector_from_key(key: int) -> np.ndarray:
    me, other, code = parts_from_key(key)
    cats = np.full(N_CELLS, EMPTY)
    if code >= 2:
        cats[code - 2] = BALL
    cats[me] = SELF_BALL if code == 0 else SELF
    cats[other] = OTHER_BALL if code == 1 else OTHER
    vec = np.zeros(OBS_DIM, dtype=np.uint8)
    vec[np.arange(N_CELLS) * N_CATEGORIES + cats] = 1
    vec.flags.writeable = False
    return vec


def soccer_encode(state: SoccerState, perspective: int) -> Observation:
    """20 cells x 6 categories, ravelled row-major, from ``perspective``'s seat."""
    key = key_from_parts(*_canonical(state, perspective))
    return Observation(vector_from_key(key), key, state, perspective)


def soccer_decode(key: int, perspective: int = 0, t: int = 0) -> SoccerState:
    """Inverse of :func:`soccer_encode` (the step counter is not observed)."""
    me, other, code = parts_from_key(key)
    mirror = perspective == 1

    def rc(cell):
        r, c = divmod(cell, COLS)
        return (r, COLS - 1 - c if mirror else c)

    if code >= 2:
        holder, ball = GROUND, rc(code - 2)
    else:
        holder, ball = (perspective if code == 0 else 1 - perspective), None
    p_me, p_other = rc(me), rc(other)
    pos0, pos1 = (p_me, p_other) if perspective == 0 else (p_other, p_me)
    return SoccerState(pos0, pos1, holder, ball, t)


def decode_vector(vector: np.ndarray) -> int:
    """Recover the discrete key from a dense observation vector."""
    cats = np.asarray(vector).reshape(N_CELLS, N_CATEGORIES).argmax(axis=1)
    me = int(np.flatnonzero((cats == SELF) | (cats == SELF_BALL))[0])
    other = int(np.flatnonzero((cats == OTHER) | (cats == OTHER_BALL))[0])
    ground = np.flatnonzero(cats == BALL)
    if ground.size:
        code = 2 + int(ground[0])
    else:
        code = 0 if cats[me] == SELF_BALL else 1
    return key_from_parts(me, other, code)


class SoccerEnv:
    """Stateless wrapper bundling the soccer functions behind the game protocol.

    Also exposes exact tabular structure (state enumeration and transition
    distributions) for model-based solvers.
    """

    name = "soccer"
    n_actions = 5
    obs_dim = OBS_DIM
    tabular = True

    def __init__(self, step_cap: int = STEP_CAP):
        self.step_cap = step_cap

    def reset(self, seed: int) -> SoccerState:
        return soccer_reset(seed)

    def step(self, state, actions, rng) -> StepOutcome:
        return soccer_step(state, actions, rng, self.step_cap)

    def encode(self, state, player: int) -> Observation:
        return soccer_encode(state, player)

    def decode(self, key: int, player: int = 0) -> SoccerState:
        return soccer_decode(key, player)

    def enumerate_states(self) -> list[SoccerState]:
        """Every non-terminal configuration (step counter ignored)."""
        cells = [(r, c) for r in range(ROWS) for c in range(COLS)]
        states = []
        for p0, p1 in product(cells, cells):
            if p0 == p1:
                continue
            states.append(SoccerState(p0, p1, 0, None))
            states.append(SoccerState(p0, p1, 1, None))
            for b in cells:
                if b != p0 and b != p1:
                    states.append(SoccerState(p0, p1, GROUND, b))
        return states

    def transitions(self, state: SoccerState, actions) -> list[tuple[float, StepOutcome]]:
        """Exact outcome distribution: both execution orders, probability 1/2 each.

        The step cap is ignored so the tabular model is time-homogeneous.
        """
        s = SoccerState(state.pos0, state.pos1, state.holder, state.ball, 0)
        return [(0.5, soccer_resolve(s, actions, order, cap=10**9)) for order in ((0, 1), (1, 0))]

"""Gathering-style commons game.

Two players harvest apples on a walled grid.  Apples regrow on their
original tiles with a probability that grows with the number of apples
nearby, so an over-harvested patch dies out.  Players can fire a short beam
that removes the other player for a fixed number of steps.

Movement is relative to the player's facing: the four move actions are
forward, backward, strafe-right and strafe-left, which coincide with
N, S, E, W in the player's egocentric view (it always faces "up").
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from qmixlab.envs.base import Observation, StepOutcome
from qmixlab.errors import EpisodeFinished, MapError

FORWARD, BACKWARD, RIGHT, LEFT, TURN_LEFT, TURN_RIGHT, TAG, NOOP = range(8)
ACTION_NAMES = ("N", "S", "E", "W", "turn-left", "turn-right", "tag", "no-op")
N_ACTIONS = 8

# facing index -> (drow, dcol)
DIRS = ((-1, 0), (0, 1), (1, 0), (0, -1))
FACING_NAMES = "NESW"

EMPTY, APPLE, WALL, SELF, OTHER = range(5)
N_CATEGORIES = 5
WINDOW_DEPTH, WINDOW_WIDTH = 20, 10
WINDOW_SELF_COL = 4  # lateral offset 0 sits at this window column

DEFAULT_MAP = """\
######################
#1.......A..........2#
#.......AAA..........#
#......AAAAA.........#
#.....AAAAAAA........#
#......AAAAA.........#
#.......AAA....A.....#
#........A....AAA....#
#..............A.....#
######################
"""


@dataclass(frozen=True)
class CommonsParams:
    beam_length: int = 10
    tag_duration: int = 25
    regrowth: float = 0.01
    episode_cap: int = 500
    regrowth_radius: int = 2


@dataclass(frozen=True)
class CommonsMap:
    walls: np.ndarray  # bool (H, W)
    apple_tiles: np.ndarray  # bool (H, W)
    spawns: tuple[tuple[int, int], tuple[int, int]]

    @property
    def shape(self) -> tuple[int, int]:
        return self.walls.shape

    def validate(self) -> None:
        if self.walls.shape != self.apple_tiles.shape:
            raise MapError("wall and apple layers differ in shape")
        if np.any(self.walls & self.apple_tiles):
            raise MapError("apple tile overlaps a wall")
        if len(self.spawns) != 2 or self.spawns[0] == self.spawns[1]:
            raise MapError("map needs two distinct spawn tiles")
        h, w = self.walls.shape
        for r, c in self.spawns:
            if not (0 <= r < h and 0 <= c < w):
                raise MapError(f"spawn {(r, c)} outside the grid")
            if self.walls[r, c] or self.apple_tiles[r, c]:
                raise MapError(f"spawn {(r, c)} overlaps a wall or apple tile")

    @property
    def spawn_facings(self) -> tuple[int, int]:
        # face toward the horizontal centre of the map
        mid = self.shape[1] / 2
        return tuple(1 if c < mid else 3 for _, c in self.spawns)


def parse_map(text: str) -> CommonsMap:
    """Parse the plain-text map format ('#', '.', 'A', '1', '2')."""
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise MapError("empty map")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise MapError("ragged rows: every map row must have the same length")
    walls = np.zeros((len(rows), width), dtype=bool)
    apples = np.zeros_like(walls)
    spawns: dict[str, tuple[int, int]] = {}
    for r, line in enumerate(rows):
        for c, ch in enumerate(line):
            if ch == "#":
                walls[r, c] = True
            elif ch == "A":
                apples[r, c] = True
            elif ch in "12":
                if ch in spawns:
                    raise MapError(f"duplicate spawn '{ch}'")
                spawns[ch] = (r, c)
            elif ch != ".":
                raise MapError(f"unknown map character {ch!r} at {(r, c)}")
    if set(spawns) != {"1", "2"}:
        raise MapError("map must contain spawn tiles '1' and '2'")
    m = CommonsMap(walls, apples, (spawns["1"], spawns["2"]))
    m.validate()
    return m


def load_map(path: str | Path) -> CommonsMap:
    return parse_map(Path(path).read_text())


def default_map() -> CommonsMap:
    return parse_map(DEFAULT_MAP)


@dataclass(frozen=True, eq=False)
class CommonsState:
    apples: np.ndarray  # bool (H, W)
    positions: tuple  # per player (row, col) or None while tagged out
    facings: tuple[int, int]
    countdowns: tuple[int, int]
    t: int = 0
    done: bool = False
    map: CommonsMap = field(default=None, repr=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CommonsState):
            return NotImplemented
        return (np.array_equal(self.apples, other.apples) and self.positions == other.positions
                and self.facings == other.facings and self.countdowns == other.countdowns
                and self.t == other.t and self.done == other.done)

    __hash__ = None


def commons_reset(seed: int, cmap: CommonsMap | None = None) -> CommonsState:
    # the initial layout is fixed by the map; seed is accepted for interface symmetry
    cmap = default_map() if cmap is None else cmap
    cmap.validate()
    return CommonsState(cmap.apple_tiles.copy(), tuple(cmap.spawns), cmap.spawn_facings, (0, 0), 0, False, cmap)


def _blocked(cmap: CommonsMap, rc) -> bool:
    r, c = rc
    h, w = cmap.shape
    return not (0 <= r < h and 0 <= c < w) or bool(cmap.walls[r, c])


def _move_target(pos, facing, action):
    rel = {FORWARD: 0, RIGHT: 1, BACKWARD: 2, LEFT: 3}[action]
    dr, dc = DIRS[(facing + rel) % 4]
    return (pos[0] + dr, pos[1] + dc)


def beam_cells(cmap: CommonsMap, pos, facing: int, length: int) -> list[tuple[int, int]]:
    """Cells hit by a tag beam: straight ahead, one wide, stopped by walls."""
    dr, dc = DIRS[facing]
    cells = []
    r, c = pos
    for _ in range(length):
        r, c = r + dr, c + dc
        if _blocked(cmap, (r, c)):
            break
        cells.append((r, c))
    return cells


def neighbour_apple_counts(apples: np.ndarray, radius: int) -> np.ndarray:
    """Number of apples within Chebyshev ``radius`` of each cell (cell itself excluded)."""
    h, w = apples.shape
    padded = np.pad(apples.astype(np.int32), radius)
    total = np.zeros((h, w), dtype=np.int32)
    for dr in range(2 * radius + 1):
        for dc in range(2 * radius + 1):
            total += padded[dr:dr + h, dc:dc + w]
    return total - apples.astype(np.int32)


def commons_step(state: CommonsState, actions, rng: np.random.Generator,
                 params: CommonsParams = CommonsParams()) -> StepOutcome:
    if state.done:
        raise EpisodeFinished()
    cmap = state.map
    positions = list(state.positions)
    facings = list(state.facings)
    countdowns = list(state.countdowns)
    active = [p is not None and countdowns[i] == 0 for i, p in enumerate(positions)]

    # tagged-out players tick down; they reappear at the end of the step their clock hits zero
    respawn = [False, False]
    for i in range(2):
        if countdowns[i] > 0:
            countdowns[i] -= 1
            respawn[i] = countdowns[i] == 0
        elif positions[i] is None:
            respawn[i] = True  # spawn was blocked last time

    targets = list(positions)
    for i in range(2):
        if not active[i]:
            continue
        a = int(actions[i])
        if a == TURN_LEFT:
            facings[i] = (facings[i] + 3) % 4
        elif a == TURN_RIGHT:
            facings[i] = (facings[i] + 1) % 4
        elif a in (FORWARD, BACKWARD, RIGHT, LEFT):
            tgt = _move_target(positions[i], facings[i], a)
            if not _blocked(cmap, tgt):
                targets[i] = tgt

    # simultaneous resolution: same target or a swap cancels both moves; moving
    # into a cell the other player ends up keeping is a bounce
    moved = [targets[i] != positions[i] for i in range(2)]
    if all(moved) and (targets[0] == targets[1] or (targets[0] == positions[1] and targets[1] == positions[0])):
        targets = list(positions)
    changed = True
    while changed:
        changed = False
        for i in range(2):
            if targets[i] != positions[i] and targets[i] == targets[1 - i]:
                targets[i] = positions[i]
                changed = True
    positions = targets

    apples = state.apples.copy()
    rewards = [0.0, 0.0]
    picked = [0, 0]
    for i in range(2):
        p = positions[i]
        if active[i] and p is not None and apples[p]:
            apples[p] = False
            rewards[i] += 1.0
            picked[i] = 1

    tagged = [False, False]
    for i in range(2):
        j = 1 - i
        if active[i] and int(actions[i]) == TAG and positions[j] is not None and countdowns[j] == 0:
            if positions[j] in beam_cells(cmap, positions[i], facings[i], params.beam_length):
                tagged[j] = True
    for j in range(2):
        if tagged[j]:
            positions[j] = None
            countdowns[j] = params.tag_duration
            respawn[j] = False

    spawn_facings = cmap.spawn_facings
    for i in range(2):
        if respawn[i] and positions[i] is None:
            spawn = cmap.spawns[i]
            if positions[1 - i] != spawn:
                positions[i] = spawn
                facings[i] = spawn_facings[i]

    # regrowth on empty, unoccupied apple tiles
    counts = neighbour_apple_counts(apples, params.regrowth_radius)
    candidates = cmap.apple_tiles & ~apples
    for p in positions:
        if p is not None:
            candidates[p] = False
    draws = rng.random(apples.shape)
    prob = np.minimum(1.0, params.regrowth * counts)
    grown = candidates & (draws < prob)
    apples |= grown

    t = state.t + 1
    done = t >= params.episode_cap
    nxt = replace(state, apples=apples, positions=tuple(positions), facings=tuple(facings),
                  countdowns=tuple(countdowns), t=t, done=done)
    info = {"picked": tuple(picked), "tagged": tuple(tagged), "regrown": int(grown.sum())}
    return StepOutcome(nxt, (rewards[0], rewards[1]), done, info)


def window_categories(state: CommonsState, perspective: int) -> np.ndarray:
    """Egocentric (20, 10) category grid; row 0 is farthest ahead, the observer sits at (19, 4)."""
    cmap = state.map
    me = state.positions[perspective]
    facing = state.facings[perspective]
    present = me is not None
    if not present:
        me, facing = cmap.spawns[perspective], cmap.spawn_facings[perspective]
    other = state.positions[1 - perspective]
    fr, fc = DIRS[facing]
    rr, rc = DIRS[(facing + 1) % 4]
    depth = np.arange(WINDOW_DEPTH - 1, -1, -1)[:, None]
    lateral = (np.arange(WINDOW_WIDTH) - WINDOW_SELF_COL)[None, :]
    rows = me[0] + depth * fr + lateral * rr
    cols = me[1] + depth * fc + lateral * rc
    h, w = cmap.shape
    inside = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
    rs, cs = np.clip(rows, 0, h - 1), np.clip(cols, 0, w - 1)
    cats = np.where(state.apples[rs, cs], APPLE, EMPTY)
    cats = np.where(cmap.walls[rs, cs] | ~inside, WALL, cats)
    if other is not None:
        cats[(rows == other[0]) & (cols == other[1])] = OTHER
    if present:
        cats[WINDOW_DEPTH - 1, WINDOW_SELF_COL] = SELF
    return cats


def commons_encode(state: CommonsState, perspective: int) -> Observation:
    cats = window_categories(state, perspective).astype(np.uint8)
    vec = np.zeros((WINDOW_DEPTH * WINDOW_WIDTH, N_CATEGORIES), dtype=np.uint8)
    vec[np.arange(cats.size), cats.ravel()] = 1
    key = int.from_bytes(cats.tobytes(), "little")
    return Observation(vec.ravel(), key, state, perspective)


def decode_window(vector: np.ndarray) -> np.ndarray:
    return np.asarray(vector).reshape(WINDOW_DEPTH, WINDOW_WIDTH, N_CATEGORIES).argmax(axis=2)


class CommonsEnv:
    name = "commons"
    n_actions = N_ACTIONS
    obs_dim = WINDOW_DEPTH * WINDOW_WIDTH * N_CATEGORIES
    tabular = False

    def __init__(self, cmap: CommonsMap | None = None, params: CommonsParams | None = None):
        self.map = default_map() if cmap is None else cmap
        self.map.validate()
        self.params = CommonsParams() if params is None else params

    def reset(self, seed: int) -> CommonsState:
        return commons_reset(seed, self.map)

    def step(self, state, actions, rng) -> StepOutcome:
        return commons_step(state, actions, rng, self.params)

    def encode(self, state, player: int) -> Observation:
        return commons_encode(state, player)

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmixlab.envs import commons as cm
from qmixlab.envs.commons import CommonsMap, CommonsParams, commons_encode, commons_reset, commons_step, parse_map
from qmixlab.errors import EpisodeFinished, MapError

SMALL = """\
#######
#1.A..#
#.AAA.#
#..A.2#
#######
"""


def state_with(cmap, positions, facings, apples=None, countdowns=(0, 0)):
    s = commons_reset(0, cmap)
    return replace(s, positions=tuple(positions), facings=tuple(facings), countdowns=tuple(countdowns),
                   apples=s.apples.copy() if apples is None else apples)


class TestMap:
    def test_default_map_parses(self):
        m = cm.default_map()
        assert m.shape == (10, 22)
        assert m.apple_tiles.sum() == 30

    @pytest.mark.parametrize("text, msg", [
        ("###\n#1\n", "ragged"),
        ("#1#\n#2X\n", "unknown map character"),
        ("#1.\n#..\n", "spawn"),
        ("#11\n#2.\n", "duplicate"),
    ])
    def test_malformed(self, text, msg):
        with pytest.raises(MapError, match=msg):
            parse_map(text)

    def test_overlap_rejected(self):
        m = parse_map(SMALL)
        bad = CommonsMap(m.walls, m.apple_tiles | m.walls, m.spawns)
        with pytest.raises(MapError):
            bad.validate()


class TestReset:
    def test_apples_match_tiles(self):
        m = cm.default_map()
        s = commons_reset(4, m)
        assert s.apples.sum() == m.apple_tiles.sum()
        assert s.countdowns == (0, 0)

    def test_deterministic(self):
        assert commons_reset(1) == commons_reset(1)


class TestStep:
    def test_eating_an_apple(self):
        m = parse_map(SMALL)
        s = state_with(m, [(1, 2), (3, 5)], [1, 3])  # player 0 faces east, apple at (1, 3)
        out = commons_step(s, (cm.FORWARD, cm.NOOP), np.random.default_rng(0))
        assert out.rewards == (1.0, 0.0)
        assert out.state.positions[0] == (1, 3)
        assert not out.state.apples[1, 3] or out.info["regrown"] > 0

    def test_moves_are_relative_to_facing(self):
        m = parse_map(SMALL)
        s = state_with(m, [(2, 1), (3, 5)], [2, 3])  # facing south
        assert commons_step(s, (cm.FORWARD, cm.NOOP), np.random.default_rng(0)).state.positions[0] == (3, 1)
        # facing south, strafe-right heads west into the wall
        assert commons_step(s, (cm.RIGHT, cm.NOOP), np.random.default_rng(0)).state.positions[0] == (2, 1)
        assert commons_step(s, (cm.LEFT, cm.NOOP), np.random.default_rng(0)).state.positions[0] == (2, 2)

    def test_walls_block(self):
        m = parse_map(SMALL)
        s = state_with(m, [(1, 1), (3, 5)], [0, 3])
        assert commons_step(s, (cm.FORWARD, cm.NOOP), np.random.default_rng(0)).state.positions[0] == (1, 1)

    def test_same_target_cancels_both(self):
        m = parse_map(SMALL)
        s = state_with(m, [(1, 4), (3, 4)], [2, 0], apples=np.zeros((5, 7), bool))
        out = commons_step(s, (cm.FORWARD, cm.FORWARD), np.random.default_rng(0))
        assert out.state.positions == ((1, 4), (3, 4))

    def test_turns(self):
        m = parse_map(SMALL)
        s = state_with(m, [(1, 1), (3, 5)], [0, 3])
        out = commons_step(s, (cm.TURN_RIGHT, cm.TURN_LEFT), np.random.default_rng(0))
        assert out.state.facings == (1, 2)

    def test_tag_removes_for_exactly_d_steps(self):
        m = parse_map(SMALL)
        params = CommonsParams(tag_duration=3, regrowth=0.0)
        s = state_with(m, [(3, 1), (3, 4)], [1, 3])
        rng = np.random.default_rng(0)
        out = commons_step(s, (cm.TAG, cm.NOOP), rng, params)
        assert out.info["tagged"] == (False, True)
        s = out.state
        absent = 0
        while s.positions[1] is None:
            absent += 1
            s = commons_step(s, (cm.NOOP, cm.NOOP), rng, params).state
        assert absent == 3
        assert s.positions[1] == m.spawns[1]

    def test_beam_stops_at_walls(self):
        m = parse_map(SMALL)
        assert cm.beam_cells(m, (1, 1), 0, 10) == []
        assert cm.beam_cells(m, (1, 1), 1, 3) == [(1, 2), (1, 3), (1, 4)]

    def test_isolated_tile_never_regrows(self):
        m = parse_map(SMALL)
        params = CommonsParams(regrowth=1.0)
        s = state_with(m, [(1, 1), (3, 5)], [0, 0], apples=np.zeros((5, 7), bool))
        out = commons_step(s, (cm.NOOP, cm.NOOP), np.random.default_rng(0), params)
        assert out.info["regrown"] == 0

    def test_regrowth_probability(self):
        counts = cm.neighbour_apple_counts(np.eye(7, dtype=bool), 2)
        assert counts[3, 3] == 4  # four other diagonal apples within radius 2
        assert counts[0, 4] == 1
        assert counts[0, 6] == 0

    def test_cap_terminates(self):
        s = replace(commons_reset(0), t=cm.CommonsParams().episode_cap - 1)
        out = commons_step(s, (cm.NOOP, cm.NOOP), np.random.default_rng(0))
        assert out.terminal
        with pytest.raises(EpisodeFinished):
            commons_step(out.state, (cm.NOOP, cm.NOOP), np.random.default_rng(0))


class TestEncoding:
    def test_vector_shape(self):
        o = commons_encode(commons_reset(0), 0)
        assert o.vector.shape == (1000,)
        assert o.vector.reshape(200, 5).sum(axis=1).tolist() == [1] * 200

    def test_wall_directly_ahead(self):
        m = parse_map(SMALL)
        s = state_with(m, [(1, 1), (3, 5)], [0, 3])
        cats = cm.window_categories(s, 0)
        assert cats[cm.WINDOW_DEPTH - 1, cm.WINDOW_SELF_COL] == cm.SELF
        assert cats[cm.WINDOW_DEPTH - 2, cm.WINDOW_SELF_COL] == cm.WALL

    def test_key_is_bijective_with_window(self):
        s = commons_reset(0)
        a, b = commons_encode(s, 0), commons_encode(s, 1)
        assert (a.key == b.key) == np.array_equal(a.vector, b.vector)
        np.testing.assert_array_equal(cm.decode_window(a.vector), cm.window_categories(s, 0))

    @given(st.integers(0, 3), st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**16))
    @settings(max_examples=60, deadline=None)
    def test_rotation_equivariance(self, facing, r, c, apple_seed):
        size = 7
        walls = np.zeros((size, size), bool)
        walls[0, :] = walls[-1, :] = walls[:, 0] = walls[:, -1] = True
        apples = np.random.default_rng(apple_seed).random((size, size)) < 0.3
        apples &= ~walls
        other = (5, 5) if (r, c) != (5, 5) else (1, 1)
        apples[r, c] = apples[other] = False
        m = CommonsMap(walls, apples.copy(), ((r, c), other))
        s = state_with(m, [(r, c), other], [facing, 0], apples=apples)

        def rot(p):  # np.rot90 moves (r, c) to (size - 1 - c, r)
            return (size - 1 - p[1], p[0])

        m2 = CommonsMap(np.rot90(walls), np.rot90(apples).copy(), (rot((r, c)), rot(other)))
        s2 = state_with(m2, [rot((r, c)), rot(other)], [(facing + 3) % 4, 3], apples=np.rot90(apples).copy())
        np.testing.assert_array_equal(commons_encode(s, 0).vector, commons_encode(s2, 0).vector)

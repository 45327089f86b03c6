import json

import numpy as np
import pytest

from qmixlab.envs.base import Observation
from qmixlab.errors import CorruptDocument, DimensionError, MissingArtifact, VersionMismatch
from qmixlab.opc import Classifier, TabularClassifier
from qmixlab.persist import load_model, load_replay, save_model, save_replay
from qmixlab.qlearn.networks import MLP, MLPQ, TabularQ
from qmixlab.qlearn.replay import ReplayBuffer


class TestModels:
    def test_mlp_bit_exact(self, tmp_path):
        net = MLPQ((120, 50, 50, 5), seed=3)
        net.params[1][:] = np.random.default_rng(0).normal(size=50) / 3
        back = load_model(save_model(net, tmp_path / "m.json", {"lr": 3e-4}), 120, 5)
        for a, b in zip(net.params, back.params):
            np.testing.assert_array_equal(a, b)

    def test_tabular_keeps_init(self, tmp_path):
        q = TabularQ(5, 120, init=0.25)
        q.row(42)[:] = np.arange(5) / 7
        back = load_model(save_model(q, tmp_path / "q.json"))
        np.testing.assert_array_equal(back.table[42], q.table[42])
        assert back.init == 0.25

    @pytest.mark.parametrize("make", [lambda: Classifier(MLP((6, 4, 3), seed=0), "abc"),
                                      lambda: TabularClassifier("ab", 6).fit([1, 1], [0, 1])])
    def test_classifiers(self, tmp_path, make):
        c = make()
        back = load_model(save_model(c, tmp_path / "c.json"))
        assert back.ids == c.ids and back.variant == c.variant

    def test_dimension_mismatch_names_both(self, tmp_path):
        save_model(MLPQ((120, 4, 5)), tmp_path / "m.json")
        with pytest.raises(DimensionError, match="120.*1000"):
            load_model(tmp_path / "m.json", expect_obs_dim=1000)

    def test_version_mismatch(self, tmp_path):
        p = save_model(TabularQ(2), tmp_path / "q.json")
        doc = json.loads(p.read_text())
        doc["format_version"] = 99
        p.write_text(json.dumps(doc))
        with pytest.raises(VersionMismatch):
            load_model(p)

    def test_truncated(self, tmp_path):
        p = save_model(MLPQ((4, 3, 2)), tmp_path / "m.json")
        p.write_text(p.read_text()[:-20])
        with pytest.raises(CorruptDocument):
            load_model(p)

    def test_missing(self, tmp_path):
        with pytest.raises(MissingArtifact):
            load_model(tmp_path / "nope.json")

    def test_no_temp_files_left(self, tmp_path):
        save_model(TabularQ(2), tmp_path / "q.json")
        assert [p.name for p in tmp_path.iterdir()] == ["q.json"]


class TestReplay:
    def test_round_trip(self, tmp_path):
        buf = ReplayBuffer(3, 4)
        for k in range(4):
            v = np.eye(4, dtype=np.uint8)[k]
            buf.add(Observation(v, k), k, 0.5 * k, Observation(v, k), k == 3, f"p{k}")
        back = load_replay(save_replay(buf, tmp_path / "b.jsonl"))
        a, b = buf.all(), back.all()
        np.testing.assert_array_equal(a.obs_vec, b.obs_vec)
        np.testing.assert_array_equal(a.reward, b.reward)
        assert list(b.label) == ["p1", "p2", "p3"]

    def test_truncated(self, tmp_path):
        buf = ReplayBuffer(3, 2)
        o = Observation(np.zeros(2, dtype=np.uint8), 0)
        buf.add(o, 0, 0.0, o, False, "a")
        buf.add(o, 0, 0.0, o, False, "a")
        p = save_replay(buf, tmp_path / "b.jsonl")
        p.write_text("\n".join(p.read_text().splitlines()[:-1]))
        with pytest.raises(CorruptDocument):
            load_replay(p)

import subprocess
import sys

import pytest

from qmixlab.cli import main

FAST = ["--set", "train.variant=tabular", "--set", "train.timesteps=600", "--set", "train.curve_every=300",
        "--set", "eval.episodes=2", "--set", "eval.seeds=0,1", "--set", "train.buffer_size=200"]


def run(tmp_path, *args):
    return main([*args, "--output-dir", str(tmp_path / "out"), *FAST])


class TestHelp:
    def test_help_lists_config_keys(self):
        out = subprocess.run([sys.executable, "-m", "qmixlab.cli", "train-br", "--help"],
                             capture_output=True, text=True, check=True).stdout
        for key in ("exploration_fraction", "occupancy_episodes", "beam_length", "[distill]"):
            assert key in out


class TestExitCodes:
    def test_missing_components(self, tmp_path):
        assert run(tmp_path, "qmix-eval", "--mixture", "uniform") == 3

    def test_bad_override(self, tmp_path):
        assert run(tmp_path, "train-br", "--opponent", "random", "--set", "train.gamma=2") == 2

    def test_unknown_opponent(self, tmp_path):
        assert run(tmp_path, "train-br", "--opponent", "goalie") == 2

    def test_invalid_mixture_literal(self, tmp_path):
        assert run(tmp_path, "train-br", "--opponent", "0.5,0.6,0") == 2

    def test_qmvi_on_commons(self, tmp_path):
        assert run(tmp_path, "qmvi", "--set", "experiment.env=commons") == 2


class TestPipeline:
    def test_train_mix_distill(self, tmp_path, capsys):
        assert run(tmp_path, "train-br", "--opponent", "all") == 0
        out = tmp_path / "out"
        assert (out / "models" / "br_chaser.json").exists()
        curve = (out / "curves" / "br_random.csv").read_text().splitlines()
        assert curve[0] == "steps,eval_return"
        assert run(tmp_path, "train-br", "--opponent", "all") == 2  # refuses to overwrite
        assert run(tmp_path, "train-br", "--opponent", "random", "--force") == 0
        assert run(tmp_path, "qmix-eval", "--mixture", "0.2,0.3,0.5") == 0
        report = (out / "reports" / "qmix_prior_0.2_0.3_0.5.csv").read_text()
        assert "ci_halfwidth" in report
        assert run(tmp_path, "opc", "--set", "opc.epochs=1") == 0
        assert run(tmp_path, "qmix-eval", "--mode", "opc", "--mixture", "uniform") == 0
        assert run(tmp_path, "distill", "--tau", "0.5", "--tau", "2", "--set", "distill.epochs=1") == 0
        assert (out / "models" / "student_tau0.5.json").exists() and (out / "models" / "student_tau2.json").exists()

    def test_reproducible(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert main(["train-br", "--opponent", "chaser", "--output-dir", str(d), *FAST]) == 0
        assert (a / "models" / "br_chaser.json").read_bytes() == (b / "models" / "br_chaser.json").read_bytes()

    def test_seed_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("QMIXLAB_SEED", "9")
        assert run(tmp_path, "train-br", "--opponent", "random") == 0
        import json
        doc = json.loads((tmp_path / "out" / "models" / "br_random.json").read_text())
        assert doc["config"]["seed"] == 9

    def test_equal_budget(self, tmp_path):
        import json
        assert run(tmp_path, "train-br", "--opponent", "camper") == 0
        assert run(tmp_path, "train-br", "--opponent", "uniform") == 0
        models = tmp_path / "out" / "models"
        assert json.loads((models / "br_camper.json").read_text())["config"]["timesteps"] == 200
        assert json.loads((models / "br_uniform.json").read_text())["config"]["timesteps"] == 600

import pytest

from qmixlab.config import KEYS, help_text, load_config
from qmixlab.errors import ConfigError, MissingArtifact


class TestConfig:
    def test_soccer_defaults(self):
        cfg = load_config()
        assert cfg.env == "soccer" and cfg.opponents == ("random", "chaser", "camper")
        assert cfg.train.timesteps == 300_000 and cfg.eval.seeds == (0, 1, 2, 3, 4)

    def test_commons_defaults(self):
        cfg = load_config(overrides={"experiment": {"env": "commons"}})
        assert cfg.train.buffer_size == 30_000 and cfg.opponents == ("random", "harvester", "tagger")

    def test_file_and_override(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text("[train]\nvariant = tabular\nhidden = 32,16\n[eval]\nseeds = 3,4\n")
        cfg = load_config(p, {"train": {"timesteps": "100"}})
        assert cfg.train.variant == "tabular" and cfg.train.hidden == (32, 16)
        assert cfg.train.timesteps == 100 and cfg.eval.seeds == (3, 4)

    @pytest.mark.parametrize("over", [{"train": {"bogus": "1"}}, {"nosuch": {"a": "1"}},
                                      {"train": {"gamma": "abc"}}, {"experiment": {"env": "chess"}},
                                      {"experiment": {"colour": "red"}}, {"distill": {"tau": "0"}}])
    def test_errors(self, over):
        with pytest.raises(ConfigError):
            load_config(overrides=over)

    def test_missing_model_file(self, tmp_path):
        with pytest.raises(MissingArtifact):
            load_config(overrides={"models": {"chaser": str(tmp_path / "x.json")}})

    def test_help_lists_every_key(self):
        text = help_text()
        for sec, key, _, _ in KEYS:
            assert key in text and f"[{sec}]" in text

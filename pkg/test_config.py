"""
Tests for the key = value config parser and pipeline configuration precedence
"""

import pytest

from config import PipelineContext, load_pipeline_config
from exceptions import ConfigError
from utils.config_parser import ConfigFileParser


def test_parse_ignores_comments_and_blank_lines():
    success, values, error = ConfigFileParser.parse("# training\nepochs = 5\n\nbatch_size=8  # small\n")
    assert success and error is None
    assert values == {"epochs": "5", "batch_size": "8"}


@pytest.mark.parametrize("text", ["epochs 5", "2bad = 1", "epochs = 1\nepochs = 2"])
def test_parse_errors(text):
    success, _, error = ConfigFileParser.parse(text)
    assert not success
    assert error.startswith("line ")


def test_parse_rejects_non_text():
    assert ConfigFileParser.parse(None)[0] is False


def test_parse_override():
    assert ConfigFileParser.parse_override("learning_rate=0.01") == ("learning_rate", "0.01")
    with pytest.raises(ValueError):
        ConfigFileParser.parse_override("learning_rate")


def test_defaults():
    cfg = load_pipeline_config()
    assert (cfg.sample_rate, cfg.n_fft, cfg.hop_length, cfg.n_mels) == (48000, 512, 512, 64)
    assert (cfg.batch_size, cfg.learning_rate, cfg.epochs) == (64, 0.001, 400)
    assert cfg.variants_per_image == 20
    assert cfg.augment_config().zoom_range == (0.9, 1.1)


def test_precedence(tmp_path):
    path = tmp_path / "fser.cfg"
    path.write_text("epochs = 5\nseed = 1\nbatch_size = 16\n")
    cfg = load_pipeline_config(str(path), overrides=["epochs=7"], seed=9)
    assert cfg.epochs == 7
    assert cfg.seed == 9
    assert cfg.batch_size == 16
    assert cfg.train_config().seed == 9
    assert cfg.augment_config().seed == 9


def test_none_value(tmp_path):
    path = tmp_path / "fser.cfg"
    path.write_text("f_max = none\n")
    assert load_pipeline_config(str(path)).f_max is None
    assert load_pipeline_config(overrides=["f_max=8000"]).f_max == 8000.0


def test_unknown_key(tmp_path):
    path = tmp_path / "fser.cfg"
    path.write_text("epochz = 5\n")
    with pytest.raises(ConfigError) as excinfo:
        load_pipeline_config(str(path))
    assert "epochz" in str(excinfo.value)


def test_invalid_values():
    with pytest.raises(ConfigError):
        load_pipeline_config(overrides=["batch_size=0"])
    with pytest.raises(ConfigError):
        load_pipeline_config(overrides=["epochs=many"])
    with pytest.raises(ConfigError):
        load_pipeline_config(overrides=["nonsense"])


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_pipeline_config(str(tmp_path / "missing.cfg"))


def test_context_paths_are_manifest_relative(tmp_path):
    pctx = PipelineContext(manifest_path=str(tmp_path / "work" / "manifest.csv"))
    assert pctx.resolve("images/a.ppm") == tmp_path.resolve() / "work" / "images" / "a.ppm"
    assert pctx.relative(tmp_path / "corpus" / "x.wav") == "../corpus/x.wav"

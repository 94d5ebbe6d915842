import pytest

from mvdcca.harness.config import ConfigError, ExperimentConfig, config_from_mapping, load_config


def test_defaults():
    cfg = ExperimentConfig()
    assert (cfg.hidden, cfg.block_size, cfg.L, cfg.dcca_lr, cfg.dcca_batch) == (32, 30, 20, 1e-3, 1024)
    assert (cfg.task_lr, cfg.task_batch, cfg.task_epochs, cfg.patience) == (1e-3, 256, 100, 10)
    assert cfg.rgcn_layers in (2, 3, 4)
    assert cfg.r_c == cfg.r_a == 1e-4 and cfg.center


def test_file_and_overrides(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("hidden = 8\njumps = false\nseeds = 0,1,2\n# comment\nviews=text\n")
    cfg = load_config(p, {"hidden": "16", "task_lr": "1e-4"})
    assert cfg.hidden == 16 and cfg.jumps is False and cfg.task_lr == 1e-4
    assert cfg.seed_list == [0, 1, 2] and cfg.view_list == ["text"]


def test_text_round_trip(tmp_path):
    cfg = ExperimentConfig(hidden=5, center=False, seeds="3,4", mlp_dropout=0.25)
    p = tmp_path / "c.cfg"
    p.write_text(cfg.to_text())
    assert load_config(p) == cfg
    assert load_config(p).hash() == cfg.hash()
    assert cfg.hash() != cfg.replace(hidden=6).hash()


@pytest.mark.parametrize("values", [
    {"hidden": "0"}, {"hidden": "x"}, {"bogus": "1"}, {"jumps": "maybe"},
    {"views": "text,image"}, {"mlp_dropout": "1.0"}, {"task_lr": "0"}, {"r_c": "-1"},
])
def test_rejects_bad_values(values):
    with pytest.raises(ConfigError):
        config_from_mapping(values)


def test_dash_keys_accepted():
    assert config_from_mapping({"task-lr": "0.01"}).task_lr == 0.01

import json
import os
from unittest import mock

import pytest

from adaptive_wave import config as config_module
from adaptive_wave.config import OUTPUT_DIR_ENV, AppConfig, ConfigManager, get_config_manager


@pytest.fixture
def config_path(tmp_path):
    return str(tmp_path / "config.json")


def test_defaults_without_file(config_path):
    manager = ConfigManager(config_path)
    assert manager.config == AppConfig()
    assert manager.get("fit_seeds") == [0, 1, 2]
    assert manager.get("missing", 42) == 42


def test_save_and_reload(config_path):
    manager = ConfigManager(config_path)
    manager.update_config(lm_max_iter=250, residual_fd_step=1e-4)
    assert manager.save_config()
    reloaded = ConfigManager(config_path)
    assert reloaded.config.lm_max_iter == 250
    assert reloaded.config.residual_fd_step == 1e-4


def test_unknown_keys_are_ignored(config_path, caplog):
    with open(config_path, "w") as f:
        json.dump({"lm_ftol": 1e-9, "theme": "dark"}, f)
    manager = ConfigManager(config_path)
    assert manager.config.lm_ftol == 1e-9
    assert "theme" in caplog.text


def test_corrupt_file_falls_back_to_defaults(config_path):
    with open(config_path, "w") as f:
        f.write("{not json")
    assert ConfigManager(config_path).config == AppConfig()


def test_update_unknown_key_leaves_config(config_path):
    manager = ConfigManager(config_path)
    manager.update_config(colour="blue")
    assert not hasattr(manager.config, "colour")
    manager.update_config(blowup_factor=10.0)
    manager.reset_to_defaults()
    assert manager.config.blowup_factor == 1e6


def test_import_and_export(tmp_path, config_path):
    manager = ConfigManager(config_path)
    manager.update_config(fit_points=51)
    exported = str(tmp_path / "exported.json")
    assert manager.export_config(exported)
    other = ConfigManager(str(tmp_path / "other.json"))
    assert other.import_config(exported)
    assert other.config.fit_points == 51
    assert not other.import_config(str(tmp_path / "absent.json"))
    assert not manager.export_config(str(tmp_path / "no_dir" / "x.json"))


def test_output_dir_environment_override(config_path):
    manager = ConfigManager(config_path)
    with mock.patch.dict(os.environ, {OUTPUT_DIR_ENV: "/tmp/runs"}):
        assert manager.output_dir() == "/tmp/runs"
    with mock.patch.dict(os.environ, {}, clear=True):
        assert manager.output_dir() == "."


def test_global_manager_reloads_on_path(config_path, monkeypatch):
    monkeypatch.setattr(config_module, "_config_manager", None)
    first = get_config_manager(config_path)
    assert get_config_manager() is first
    assert get_config_manager(config_path) is not first

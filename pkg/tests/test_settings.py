import json
import logging

import pytest

from src.config.settings import PROJECT_ROOT, Settings
from src.core.errors import ConfigurationError


def test_loads_production_defaults(settings, monkeypatch):
    monkeypatch.delenv("PRIVACYADVISOR_ENV", raising=False)
    settings.reload()
    assert settings.get("reference_year") == 2013
    assert settings.section("recommender")["k"] == 3
    assert settings.path("dictionary_file") == PROJECT_ROOT / "config" / "normalization.json"


def test_is_a_singleton():
    assert Settings() is Settings()


def test_environment_selects_config_file(settings, monkeypatch):
    monkeypatch.setenv("PRIVACYADVISOR_ENV", "development")
    settings.reload()
    assert settings.section("evaluation")["workers"] == 2


def test_environment_overrides_are_json_decoded(settings, monkeypatch):
    monkeypatch.setenv("PRIVACYADVISOR_REFERENCE_YEAR", "2014")
    monkeypatch.setenv("PRIVACYADVISOR_DICTIONARY_FILE", "other/dict.json")
    settings.reload()
    assert settings.get("reference_year") == 2014
    assert settings.get("dictionary_file") == "other/dict.json"


def test_invalid_reference_year(settings, monkeypatch):
    monkeypatch.setenv("PRIVACYADVISOR_REFERENCE_YEAR", '"soon"')
    with pytest.raises(ConfigurationError):
        settings.reload()


def test_section_must_be_an_object(settings, tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"reference_year": 2013, "tree": [1, 2]}), encoding="utf-8")
    with pytest.raises(ConfigurationError):
        settings.load_settings(str(path))


def test_missing_config_file(settings, tmp_path):
    with pytest.raises(ConfigurationError):
        settings.load_settings(str(tmp_path / "absent.json"))


def test_update_is_visible(settings):
    settings.update("reference_year", 2020)
    assert settings.get("reference_year") == 2020


def test_loaded_settings_are_logged_at_debug(settings, caplog):
    caplog.set_level(logging.DEBUG, logger="src.config.settings")
    settings.reload()
    assert "'reference_year': 2013" in caplog.text

import pytest
from pydantic import ValidationError

from backend.solver.branch import default_solver_grid
from backend.utils.config import LabSettings, load_settings


def test_defaults():
    settings = load_settings()
    assert settings == LabSettings()
    assert settings.grid_size == 2000
    assert settings.cert_grid_size == 20000
    assert settings.cert_r_min == 1e-8


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("MEMSLAB_GRID_SIZE", "400")
    monkeypatch.setenv("MEMSLAB_LOG_LEVEL", "debug")
    load_settings.cache_clear()
    settings = load_settings()
    assert settings.grid_size == 400
    assert settings.log_level == "DEBUG"
    assert default_solver_grid().size == 400


def test_settings_are_read_once(monkeypatch):
    first = load_settings()
    monkeypatch.setenv("MEMSLAB_GRID_SIZE", "400")
    assert load_settings() is first


def test_invalid_override(monkeypatch):
    monkeypatch.setenv("MEMSLAB_R_MIN", "2.0")
    load_settings.cache_clear()
    with pytest.raises(ValidationError):
        load_settings()

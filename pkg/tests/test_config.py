import pytest
from pydantic import ValidationError

from src.core.config import Settings


def test_environment_overrides_defaults(monkeypatch):
	monkeypatch.setenv("CIAOSR_THREADS", "3")
	monkeypatch.setenv("CIAOSR_NONLOCAL_TILE", "48")
	monkeypatch.setenv("CIAOSR_DEBUG", "true")
	cfg = Settings(_env_file=None)
	assert (cfg.threads, cfg.nonlocal_tile, cfg.DEBUG_FINITE_CHECKS) == (3, 48, True)
	assert cfg.query_chunk == 30000


def test_lowercase_names_are_not_read(monkeypatch):
	monkeypatch.delenv("CIAOSR_THREADS", raising=False)
	monkeypatch.setenv("ciaosr_threads", "5")
	assert Settings(_env_file=None).THREADS == 1


def test_invalid_values_are_rejected(monkeypatch):
	monkeypatch.setenv("CIAOSR_THREADS", "0")
	with pytest.raises(ValidationError):
		Settings(_env_file=None)


def test_options_live_in_model_config():
	assert "Config" not in vars(Settings)
	assert Settings.model_config["case_sensitive"] is True
	assert Settings.model_config["extra"] == "ignore"

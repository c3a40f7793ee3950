from __future__ import annotations

from pathlib import Path

import pytest

from gerrygrid.config import Config


def test_defaults(tmp_path: Path) -> None:
    config = Config.load()
    assert config.threads >= 1
    assert config.output_dir == tmp_path / "output"
    assert config.seed == 0
    assert config.log_level == "INFO"
    assert config.batch_size == 2048
    assert config.debug_chain is False


def test_environment_overrides(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("GERRYGRID_THREADS", "3")
    monkeypatch.setenv("GERRYGRID_SEED", "42")
    monkeypatch.setenv("GERRYGRID_LOG_LEVEL", "debug")
    monkeypatch.setenv("GERRYGRID_DEBUG_CHAIN", "yes")
    config = Config.load()
    assert (config.threads, config.seed, config.log_level, config.debug_chain) == (3, 42, "DEBUG", True)


@pytest.mark.parametrize(
    ("name", "value"),
    [
        ("GERRYGRID_THREADS", "0"),
        ("GERRYGRID_THREADS", "many"),
        ("GERRYGRID_BATCH_SIZE", str(1 << 21)),
        ("GERRYGRID_LOG_LEVEL", "LOUD"),
        ("GERRYGRID_DEBUG_CHAIN", "maybe"),
    ],
)
def test_invalid_values(name: str, value: str, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv(name, value)
    with pytest.raises(ValueError, match=name):
        Config.load()

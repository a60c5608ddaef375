"""Test cases for the config module."""
from pathlib import Path
from typing import Any
from typing import Dict

import pytest

from cpol.config import DEFAULT_SEED
from cpol.config import BinningConfig
from cpol.config import CpolSettings
from cpol.config import RunConfig
from cpol.config import parse_run_config
from cpol.enums import FitMethod
from cpol.enums import GeometryMode
from cpol.enums import OutputFormat
from cpol.errors import ConfigError


def test_defaults() -> None:
    """It fills every section from an empty document."""
    cfg = parse_run_config({})
    assert cfg.source.energy_kev == pytest.approx(511.0)
    assert cfg.source.seed == DEFAULT_SEED
    assert cfg.geometry.mode is GeometryMode.IDEAL
    assert cfg.geometry.counter_count == 16
    assert cfg.analysis.method is FitMethod.CHSH
    assert cfg.output.format is OutputFormat.JSONL
    assert cfg.binning.backscatter_window_deg == (160.0, 180.0)


def test_nested_values() -> None:
    """It parses enum values and nested sections."""
    cfg = parse_run_config({"geometry": {"mode": "realistic"}, "analysis": {"method": "direct"}})
    assert cfg.geometry.mode is GeometryMode.REALISTIC
    assert cfg.analysis.method is FitMethod.DIRECT


@pytest.mark.parametrize(
    "payload, field_path",
    [
        ({"source": {"bogus": 1}}, "source.bogus"),
        ({"geometry": {"counter_count": 12}}, "geometry"),
        ({"geometry": {"mode": "perfect"}}, "geometry.mode"),
        ({"source": {"pairs": -1}}, "source.pairs"),
        ({"binning": {"forward_edges_deg": [20.0, 10.0]}}, "binning.forward_edges_deg"),
        ({"extra": {}}, "extra"),
    ],
)
def test_invalid_config(payload: Dict[str, Any], field_path: str) -> None:
    """It names the offending field."""
    with pytest.raises(ConfigError) as info:
        parse_run_config(payload)
    assert info.value.field_path == field_path


def test_overlapping_counters() -> None:
    """It refuses counters wider than their spacing."""
    with pytest.raises(ConfigError):
        parse_run_config({"geometry": {"counter_half_width_deg": 12.0}})


def test_config_file(tmp_path: Path) -> None:
    """It reads a JSON file and reports invalid JSON at the root."""
    good = tmp_path / "run.json"
    good.write_text('{"source": {"pairs": 10}}')
    assert parse_run_config(good).source.pairs == 10
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError) as info:
        parse_run_config(bad)
    assert info.value.field_path == "<root>"


def test_provenance_omits_output_path() -> None:
    """It keeps the format but drops the path."""
    cfg = RunConfig()
    assert cfg.effective()["output"]["path"] == "events.jsonl"
    assert cfg.provenance()["output"] == {"format": "jsonl"}
    assert parse_run_config(cfg.provenance()) == cfg


def test_binning_window_none() -> None:
    """It allows the backscatter class to be switched off."""
    assert BinningConfig(backscatter_window_deg=None).backscatter_window_deg is None


def test_settings_from_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """It reads CPOL_ variables."""
    monkeypatch.setenv("CPOL_WORKERS", "3")
    monkeypatch.setenv("CPOL_LOGGING_ON", "true")
    settings = CpolSettings()
    assert settings.workers == 3
    assert settings.logging_on
    assert settings.output_dir == "output"

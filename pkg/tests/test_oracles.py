"""Test cases for the oracles module."""
from typing import Any

import pytest

from cpol import oracles
from cpol import physics
from cpol.errors import QuadratureError


@pytest.mark.parametrize("oracle", oracles.ORACLES, ids=lambda o: o.name)
def test_oracle_passes(oracle: oracles.Oracle) -> None:
    """It passes on the unmodified physics."""
    outcome = oracle.run(seed=13)
    assert outcome.passed, outcome.detail


def test_run_oracles_reports_every_check() -> None:
    """It returns one outcome per registered check."""
    outcomes = oracles.run_oracles(13)
    assert [o.name for o in outcomes] == [o.name for o in oracles.ORACLES]


def test_quadrature_failure_is_a_failed_check() -> None:
    """It turns a quadrature error into a failed outcome."""

    def failing(seed: int) -> Any:
        raise QuadratureError("no convergence", 1e-3)

    outcome = oracles.Oracle("failing", failing).run(0)
    assert not outcome.passed
    assert "no convergence" in outcome.detail


def test_analyzing_power_check_detects_sign_error(monkeypatch: pytest.MonkeyPatch) -> None:
    """It fails when the analyzing power is computed with the wrong sign."""
    original = physics.analyzing_power
    monkeypatch.setattr(physics, "analyzing_power", lambda e, theta: -original(e, theta))
    passed, _ = oracles.analyzing_power_ratio(13)
    assert not passed

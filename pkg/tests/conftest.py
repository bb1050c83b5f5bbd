"""Pytest configuration and fixtures for the link simulator.

This module pins the test environment before the application is imported and provides
the channel ensembles shared across the suites.
"""

import os
import tempfile

os.environ.setdefault("APP_ENV", "test")
os.environ.setdefault("LOG_DIR", os.path.join(tempfile.gettempdir(), "oam-linksim-test-logs"))

import pytest
from hypothesis import settings as hypothesis_settings

from app.core.link.chanmodel import normalize_channel, synth_channel
from app.schemas.channel import ChannelSet, FrequencyGrid, PowerDelayProfile, StirringPlan

hypothesis_settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis_settings.register_profile("dev", max_examples=10, deadline=None)
hypothesis_settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture(scope="session")
def default_ensemble() -> ChannelSet:
    """The 400-sample, 201-point, 2x2 ensemble of the measured setup, normalized."""
    base = synth_channel(FrequencyGrid(), StirringPlan(), PowerDelayProfile(), 2, 2, seed=2024)
    return normalize_channel(base, base)


@pytest.fixture(scope="session")
def small_grid() -> FrequencyGrid:
    """64 points at 1 MHz; the default profile still fits its delay range."""
    return FrequencyGrid(count=64)


@pytest.fixture(scope="session")
def small_ensemble(small_grid) -> ChannelSet:
    """20-sample 2x2 ensemble on the small grid."""
    return synth_channel(small_grid, StirringPlan(platform_states=4, stirrer_states=5), PowerDelayProfile(), 2, 2, 11)

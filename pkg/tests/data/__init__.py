"""Fixture files for the tests."""

from pathlib import Path

_current = Path(__file__).parent.absolute()

CHANNEL_FIXTURE: Path = _current / "channel_fixture.csv"
CONFIGS_DIR: Path = _current.parent.parent / "configs"


def fixture_text() -> str:
    """Content of the hand-written channel file."""
    return CHANNEL_FIXTURE.read_text(encoding="utf-8")

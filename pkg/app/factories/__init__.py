"""Factories package."""

from app.factories.equalizer_factory import EqualizerFactory

__all__ = ["EqualizerFactory"]

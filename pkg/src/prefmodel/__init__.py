"""Preference modeling for turn-based strategy telemetry."""

from .telemetry import PREFERENCES, MatchLog, PreferenceVector

__version__ = "0.1.0"

__all__ = ["PREFERENCES", "MatchLog", "PreferenceVector", "__version__"]

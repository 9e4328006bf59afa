"""Curiosity-driven goal-directed exploration with episodic-memory replay."""

__version__ = "0.1.0"

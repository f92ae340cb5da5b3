"""Appearance-only multi-object tracking with an online, per-sequence
Fisher-discriminant projection of re-identification embeddings."""

__version__ = "0.1.0"

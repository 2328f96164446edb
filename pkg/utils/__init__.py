"""Utility modules."""

__all__ = ['text_utils', 'io', 'rng']

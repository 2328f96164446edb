# commands/__init__.py
"""Subcommand modules for the command-line front end."""

__all__ = ['solve', 'oracle', 'diagnose', 'baselines', 'fit', 'bench', 'generate']

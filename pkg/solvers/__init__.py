"""Optimizers: the tempering sampler and the comparison baselines."""

__all__ = ['tempering', 'relaxation', 'genetic']

"""Independent oracles used by several test modules."""

import itertools

import numpy as np


def explicit_cost(model, u):
    """Multiply the full matrices, then apply c and psi1."""
    P = np.eye(model.n_psi)
    for a in u:
        P = np.asarray(model.A[a]) @ P
    return float(model.c @ P @ model.psi1)


def all_sequences(model):
    return list(itertools.product(*[model.allowed(t) for t in range(model.horizon)]))

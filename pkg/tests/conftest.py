"""Shared fixtures: small seeded models and hand-checkable scalar models."""

import numpy as np
import pytest

from model import KoopmanModel, identity_model
from synthetic import random_model


@pytest.fixture
def scalar_model():
    """T=1, A(0)=2, A(1)=3, c=[1], psi1=[1]: costs 2 and 3."""
    return KoopmanModel(A=[[[2.0]], [[3.0]]], c=[1.0], psi1=[1.0], horizon=1)


@pytest.fixture
def constant_model():
    """Every A(u) is the identity, c=[1,0], psi1=[2,3]: every sequence costs 2."""
    return identity_model(2, 4, 3, c=[1.0, 0.0], psi1=[2.0, 3.0])


@pytest.fixture
def small_model():
    """n_psi=3, T=4, |U|=2: 16 sequences."""
    return random_model(3, 4, 2, seed=11)


@pytest.fixture
def tiny_model():
    """n_psi=3, T=3, |U|=2: 8 sequences, for explicit kernels."""
    return random_model(3, 3, 2, seed=5)


@pytest.fixture
def separated_model():
    """Scalar dynamics with a well separated unique minimizer (all zeros, cost 1.25)."""
    A = np.array([[[0.5]], [[1.0]], [[2.0]]])
    return KoopmanModel(A=A, c=[10.0], psi1=[1.0], horizon=3)


@pytest.fixture
def overflowing_model():
    """Entries near 1e120 over T=4 steps: every lifted state past the second step overflows."""
    A = [np.diag([1e120, 1e120]), np.diag([2e120, 1e120])]
    return KoopmanModel(A=A, c=[1.0, 1.0], psi1=[1.0, 1.0], horizon=4)

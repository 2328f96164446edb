# synthetic.py
"""Synthetic problems: random stable switched models and toy trajectory data."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from edmd import Trajectory, TrajectoryDataset
from model import KoopmanModel


def random_matrices(n_psi: int, n_actions: int, rng: np.random.Generator,
                    spectral_radius: float = 0.95) -> np.ndarray:
    """Gaussian matrices rescaled to the given spectral radius."""
    mats = []
    for _ in range(n_actions):
        G = rng.standard_normal((n_psi, n_psi)) / np.sqrt(n_psi)
        rho = float(np.max(np.abs(np.linalg.eigvals(G))))
        mats.append(G * (spectral_radius / rho) if rho > 0 else G)
    return np.stack(mats)


def random_model(n_psi: int, horizon: int, n_actions: int, seed: int = 0,
                 spectral_radius: float = 0.95, action_mask=None) -> KoopmanModel:
    """Random stable model; ties between sequence costs have probability zero."""
    rng = np.random.default_rng(seed)
    A = random_matrices(n_psi, n_actions, rng, spectral_radius)
    c = rng.standard_normal(n_psi)
    psi1 = rng.standard_normal(n_psi)
    return KoopmanModel(A=A, c=c, psi1=psi1, horizon=horizon, action_mask=action_mask)


def affine_model(n_psi: int, horizon: int, n_actions: int, seed: int = 0,
                 spectral_radius: float = 0.95) -> KoopmanModel:
    """Random model whose last lifted coordinate is a constant 1 kept by every A(u).

    Adding k to the last entry of c then adds k to every sequence cost.
    """
    rng = np.random.default_rng(seed)
    A = np.zeros((n_actions, n_psi, n_psi))
    A[:, :-1, :] = random_matrices(n_psi, n_actions, rng, spectral_radius)[:, :-1, :]
    A[:, -1, -1] = 1.0
    c = rng.standard_normal(n_psi)
    psi1 = np.append(rng.standard_normal(n_psi - 1), 1.0)
    return KoopmanModel(A=A, c=c, psi1=psi1, horizon=horizon)


def switched_linear_dataset(A: np.ndarray, trajectories: int, length: int, seed: int = 0,
                            actions: Optional[Sequence[str]] = None) -> TrajectoryDataset:
    """Pre-lifted trajectories generated exactly by psi_{t+1} = A(u_t) psi_t under random inputs."""
    rng = np.random.default_rng(seed)
    n_actions, n, _ = A.shape
    out = []
    for _ in range(trajectories):
        psi = rng.standard_normal(n)
        states, acts = [psi], []
        for _ in range(length):
            a = int(rng.integers(n_actions))
            psi = A[a] @ psi
            states.append(psi)
            acts.append(a)
        out.append(Trajectory(states=states, actions=acts))
    return TrajectoryDataset(out, actions=tuple(actions) if actions else ())


# Toy nonlinear system: a cloud of points on the unit square. The four
# actions push the cloud left, right, up, or leave it; points saturate at the
# borders and drift toward a swirl around the centre. The cost is the mean
# squared distance of the cloud to a target point.
TOY_ACTIONS = ("left", "right", "up", "noop")
TOY_TARGET = np.array([0.7, 0.3])
_PUSHES = np.array([[-0.08, 0.0], [0.08, 0.0], [0.0, 0.08], [0.0, 0.0]])


def toy_step(points: np.ndarray, action: int) -> np.ndarray:
    centred = points - 0.5
    swirl = 0.05 * np.column_stack([-centred[:, 1], centred[:, 0]])
    moved = points + _PUSHES[action] + swirl - 0.1 * centred ** 3
    # tanh keeps every point strictly inside the square
    return 0.5 + 0.5 * np.tanh(2.0 * (moved - 0.5))


def toy_cost(points: np.ndarray) -> float:
    return float(np.mean(np.sum((points - TOY_TARGET) ** 2, axis=1)))


def toy_particle_dataset(traces: int, length: int, n_points: int = 5, seed: int = 0) -> TrajectoryDataset:
    """Raw point-set trajectories of the toy system under uniformly random actions."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(traces):
        points = rng.uniform(0.1, 0.9, size=(n_points, 2))
        states, acts, costs = [points], [], [toy_cost(points)]
        for _ in range(length):
            a = int(rng.integers(len(TOY_ACTIONS)))
            points = toy_step(points, a)
            states.append(points)
            acts.append(a)
            costs.append(toy_cost(points))
        out.append(Trajectory(states=states, actions=acts, costs=costs))
    return TrajectoryDataset(out, actions=TOY_ACTIONS)


def grid_centers(per_side: int) -> np.ndarray:
    """Evenly spaced RBF centers on the unit square."""
    g = (np.arange(per_side) + 0.5) / per_side
    return np.array([[x, y] for x in g for y in g])

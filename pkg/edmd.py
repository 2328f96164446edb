# edmd.py
"""Koopman models from trajectory data.

Raw states are finite point sets (for example the pixels of one category on
a screen). They are lifted with smooth density observables

    phi_j(x) = sum_i exp(-lam * ||p_i - c_j||^2)

and one matrix A(u) per action is fitted by least squares on the lifted
pairs (psi_t, psi_{t+1}) observed with that action.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg

from errors import BasisError, DatasetError, RankDeficientFit, UnderdeterminedFit
from model import KoopmanModel

logger = logging.getLogger(__name__)

RANK_RCOND = 1e-10


@dataclass(frozen=True, eq=False)
class ObservableBasis:
    """RBF centers in raw state space, width `lam`, optional constant coordinate."""

    centers: np.ndarray
    lam: float
    extra_affine: bool = False

    def __post_init__(self):
        centers = np.array(self.centers, dtype=float, copy=True)
        if centers.ndim == 1:
            centers = centers[:, np.newaxis]
        if centers.ndim != 2 or centers.shape[0] == 0:
            raise BasisError(f"centers must be a non-empty (k, d) array, got shape {centers.shape}")
        if not np.all(np.isfinite(centers)):
            raise BasisError("centers contain non-finite entries")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise BasisError(f"lambda must be positive, got {self.lam}")
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def size(self) -> int:
        return self.centers.shape[0] + (1 if self.extra_affine else 0)


def lift(basis: ObservableBasis, raw_points) -> np.ndarray:
    """Density observables of a point set; the result does not depend on point order."""
    pts = np.asarray(raw_points, dtype=float)
    if pts.size == 0:
        pts = np.empty((0, basis.dim))
    elif pts.ndim == 1:
        pts = pts.reshape(-1, basis.dim) if basis.dim > 1 else pts[:, np.newaxis]
    if pts.ndim != 2 or pts.shape[1] != basis.dim:
        raise BasisError(f"points have dimension {pts.shape[-1]}, centers have {basis.dim}")

    # fixed summation order: lexicographic in the coordinates
    pts = pts[np.lexsort(pts.T[::-1])] if len(pts) else pts
    d2 = ((pts[:, np.newaxis, :] - basis.centers[np.newaxis, :, :]) ** 2).sum(axis=-1)
    psi = np.exp(-basis.lam * d2).sum(axis=0)
    if basis.extra_affine:
        psi = np.append(psi, 1.0)
    return psi


def lift_categories(bases: Sequence[ObservableBasis], points_by_category: Sequence, cost_value: float = None) -> np.ndarray:
    """Concatenated densities of several point categories, plus the cost observable when given."""
    if len(bases) != len(points_by_category):
        raise BasisError(f"{len(bases)} bases for {len(points_by_category)} point categories")
    parts = [lift(b, p) for b, p in zip(bases, points_by_category)]
    if cost_value is not None:
        parts.append(np.array([float(cost_value)]))
    return np.concatenate(parts)


def lift_state(basis: Optional[ObservableBasis], state, cost_value: float = None) -> np.ndarray:
    """Lift one raw state; with no basis the state is already lifted."""
    if basis is None:
        psi = np.asarray(state, dtype=float).reshape(-1)
    else:
        psi = lift(basis, state)
    if cost_value is not None:
        psi = np.append(psi, float(cost_value))
    return psi


@dataclass
class Trajectory:
    """States s_0 .. s_L, actions a_0 .. a_{L-1}; optional cost observable per state."""

    states: List
    actions: List[int]
    costs: Optional[List[float]] = None

    def __post_init__(self):
        if len(self.states) < 2:
            raise DatasetError("a trajectory needs at least 2 states")
        if len(self.actions) != len(self.states) - 1:
            raise DatasetError(f"{len(self.states)} states need {len(self.states) - 1} actions, got {len(self.actions)}")
        if self.costs is not None and len(self.costs) != len(self.states):
            raise DatasetError(f"{len(self.costs)} cost values for {len(self.states)} states")


@dataclass
class TrajectoryDataset:
    trajectories: List[Trajectory]
    actions: tuple = ()
    n_actions: int = field(init=False)

    def __post_init__(self):
        if not self.trajectories:
            raise DatasetError("dataset has no trajectories")
        if self.actions:
            self.actions = tuple(str(a) for a in self.actions)
        else:
            top = max(max(tr.actions) for tr in self.trajectories)
            self.actions = tuple(str(k) for k in range(top + 1))
        self.n_actions = len(self.actions)
        has_costs = {tr.costs is not None for tr in self.trajectories}
        if len(has_costs) > 1:
            raise DatasetError("either every trajectory carries cost values or none does")
        for k, tr in enumerate(self.trajectories):
            for a in tr.actions:
                if not 0 <= int(a) < self.n_actions:
                    raise DatasetError(f"trajectory {k} uses unknown action index {a}")

    def transitions(self) -> int:
        return sum(len(tr.actions) for tr in self.trajectories)


def _lifted_pairs(dataset: TrajectoryDataset, basis: Optional[ObservableBasis]) -> Dict[int, tuple]:
    X: Dict[int, list] = {k: [] for k in range(dataset.n_actions)}
    Y: Dict[int, list] = {k: [] for k in range(dataset.n_actions)}
    for tr in dataset.trajectories:
        costs = tr.costs if tr.costs is not None else [None] * len(tr.states)
        lifted = [lift_state(basis, s, c) for s, c in zip(tr.states, costs)]
        for t, a in enumerate(tr.actions):
            X[int(a)].append(lifted[t])
            Y[int(a)].append(lifted[t + 1])
    dims = {len(v) for rows in X.values() for v in rows}
    if len(dims) > 1:
        raise DatasetError(f"lifted states have inconsistent dimensions {sorted(dims)}")
    return {k: (np.array(X[k]), np.array(Y[k])) for k in X}


def _cost_row(c_spec, n: int) -> np.ndarray:
    if isinstance(c_spec, str):
        if c_spec != "last":
            raise DatasetError(f"unknown cost observable {c_spec!r}")
        c_spec = n - 1
    if isinstance(c_spec, (int, np.integer)):
        if not -n <= c_spec < n:
            raise DatasetError(f"cost coordinate {c_spec} outside the lifted dimension {n}")
        row = np.zeros(n)
        row[c_spec] = 1.0
        return row
    row = np.asarray(c_spec, dtype=float).reshape(-1)
    if row.shape[0] != n:
        raise DatasetError(f"cost row has length {row.shape[0]}, lifted dimension is {n}")
    return row


def fit_koopman(dataset: TrajectoryDataset, basis: Optional[ObservableBasis], c_spec="last",
                horizon: int = 1, initial_state=None, initial_cost: float = None,
                rcond: float = RANK_RCOND) -> KoopmanModel:
    """Least-squares A(u) for every action, min_A sum ||psi_{t+1} - A psi_t||^2.

    Solved with a pivoted QR factorization of the stacked regressors (never
    the normal equations). `c_spec` is a cost row, a coordinate index, or
    "last" for the appended cost observable. psi1 is lifted from
    `initial_state`, defaulting to the first state of the first trajectory.
    """
    pairs = _lifted_pairs(dataset, basis)
    n = next(len(X[0]) for X, _ in pairs.values() if len(X))

    matrices = []
    for k in range(dataset.n_actions):
        X, Y = pairs[k]
        if len(X) < n:
            raise UnderdeterminedFit(dataset.actions[k], len(X), n)
        sol, _, rank, _ = scipy.linalg.lstsq(X, Y, cond=rcond, lapack_driver="gelsy")
        if rank < n:
            warnings.warn(f"action {dataset.actions[k]!r}: regressor rank {rank} < {n}", RankDeficientFit)
            logger.warning("action %r fitted with rank %d of %d", dataset.actions[k], rank, n)
        matrices.append(sol.T)

    if initial_state is None:
        first = dataset.trajectories[0]
        initial_state = first.states[0]
        if initial_cost is None and first.costs is not None:
            initial_cost = first.costs[0]
    psi1 = lift_state(basis, initial_state, initial_cost)

    logger.info("fitted %d actions, n_psi=%d, from %d transitions", dataset.n_actions, n, dataset.transitions())
    return KoopmanModel(A=np.stack(matrices), c=_cost_row(c_spec, n), psi1=psi1,
                        horizon=horizon, actions=dataset.actions)


def fit_residuals(dataset: TrajectoryDataset, basis: Optional[ObservableBasis], A: np.ndarray) -> np.ndarray:
    """Training residual sum ||psi_{t+1} - A(u) psi_t||^2 for every action."""
    pairs = _lifted_pairs(dataset, basis)
    out = np.zeros(dataset.n_actions)
    for k, (X, Y) in pairs.items():
        if len(X):
            out[k] = float(((Y - X @ np.asarray(A[k]).T) ** 2).sum())
    return out

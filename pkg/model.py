# model.py
"""Switched linear (Koopman-lifted) control problems and their exact cost.

A model advances a lifted state psi by one matrix per step,
psi[t+1] = A(u[t]) psi[t], starting from psi1, and scores a control sequence
by the row vector c applied to the final lifted state.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from errors import ModelInvalidError, SequenceInvalidError


def positive_int(name: str, value) -> int:
    """`value` as an int >= 1; booleans and non-integral numbers are rejected."""
    if isinstance(value, (bool, np.bool_)):
        raise ModelInvalidError(f"{name} must be a positive integer, got {value!r}")
    if isinstance(value, numbers.Integral):
        n = int(value)
    elif isinstance(value, numbers.Real) and math.isfinite(value) and float(value).is_integer():
        n = int(value)
    else:
        raise ModelInvalidError(f"{name} must be a positive integer, got {value!r}")
    if n < 1:
        raise ModelInvalidError(f"{name} must be a positive integer, got {n}")
    return n


@dataclass(frozen=True)
class ControlSequence:
    """A length-T tuple of action indices."""

    u: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(int(a) for a in self.u))

    def __len__(self) -> int:
        return len(self.u)

    def __iter__(self):
        return iter(self.u)

    def __getitem__(self, t):
        return self.u[t]

    def labels(self, model: "KoopmanModel") -> list:
        return [model.actions[a] for a in self.u]


def as_sequence(u) -> ControlSequence:
    if isinstance(u, ControlSequence):
        return u
    return ControlSequence(tuple(u))


@dataclass(frozen=True, eq=False)
class KoopmanModel:
    """Lifted dynamics A(u) per action, cost row c, initial lifted state psi1, horizon T.

    `A` is stored stacked as an array of shape (|U|, n_psi, n_psi); `A[k]` is
    the matrix of action index k. `action_mask`, when given, lists the allowed
    action indices for every time step.
    """

    A: np.ndarray
    c: np.ndarray
    psi1: np.ndarray
    horizon: int
    actions: Tuple[str, ...] = ()
    action_mask: Optional[Tuple[Tuple[int, ...], ...]] = None
    _allowed: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float, copy=True)
        c = np.array(self.c, dtype=float, copy=True).reshape(-1)
        psi1 = np.array(self.psi1, dtype=float, copy=True).reshape(-1)

        if A.ndim == 2:
            A = A[np.newaxis]
        if A.ndim != 3 or A.shape[0] == 0:
            raise ModelInvalidError(f"A must stack at least one square matrix, got shape {A.shape}")
        n_actions, rows, cols = A.shape
        if rows != cols:
            raise ModelInvalidError(f"A(u) must be square, got {rows}x{cols}")
        if c.shape[0] != rows:
            raise ModelInvalidError(f"c has length {c.shape[0]}, expected n_psi={rows}")
        if psi1.shape[0] != rows:
            raise ModelInvalidError(f"psi1 has length {psi1.shape[0]}, expected n_psi={rows}")
        for name, arr in (("A", A), ("c", c), ("psi1", psi1)):
            if not np.all(np.isfinite(arr)):
                raise ModelInvalidError(f"{name} contains non-finite entries")

        horizon = positive_int("horizon", self.horizon)

        actions = tuple(str(a) for a in self.actions) if self.actions else tuple(str(k) for k in range(n_actions))
        if len(actions) != n_actions:
            raise ModelInvalidError(f"{len(actions)} action labels for {n_actions} matrices")
        if len(set(actions)) != len(actions):
            raise ModelInvalidError("action labels must be unique")

        mask = None
        if self.action_mask is not None:
            mask = tuple(tuple(int(a) for a in step) for step in self.action_mask)
            if len(mask) != horizon:
                raise ModelInvalidError(f"action_mask has {len(mask)} steps, expected horizon={horizon}")
            for t, step in enumerate(mask):
                if not step:
                    raise ModelInvalidError(f"action_mask step {t} is empty")
                if len(set(step)) != len(step):
                    raise ModelInvalidError(f"action_mask step {t} repeats an action")
                for a in step:
                    if not 0 <= a < n_actions:
                        raise ModelInvalidError(f"action_mask step {t} references unknown action {a}")
            mask = tuple(tuple(sorted(step)) for step in mask)

        for arr in (A, c, psi1):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "psi1", psi1)
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "action_mask", mask)
        full = tuple(range(n_actions))
        object.__setattr__(self, "_allowed", mask if mask is not None else (full,) * horizon)

    @property
    def n_psi(self) -> int:
        return self.A.shape[1]

    @property
    def n_actions(self) -> int:
        return self.A.shape[0]

    def allowed(self, t: int) -> Tuple[int, ...]:
        """Allowed action indices at step t (0-based)."""
        return self._allowed[t]

    def with_horizon(self, horizon: int) -> "KoopmanModel":
        """Same dynamics with another horizon; a mask is dropped since its length no longer fits."""
        return KoopmanModel(A=self.A, c=self.c, psi1=self.psi1, horizon=horizon, actions=self.actions)

    def with_mask(self, action_mask) -> "KoopmanModel":
        return KoopmanModel(
            A=self.A, c=self.c, psi1=self.psi1, horizon=self.horizon,
            actions=self.actions, action_mask=action_mask,
        )

    def with_cost(self, c) -> "KoopmanModel":
        return KoopmanModel(
            A=self.A, c=c, psi1=self.psi1, horizon=self.horizon,
            actions=self.actions, action_mask=self.action_mask,
        )


def validate_sequence(model: KoopmanModel, u) -> ControlSequence:
    seq = as_sequence(u)
    if len(seq) != model.horizon:
        raise SequenceInvalidError(f"sequence has length {len(seq)}, horizon is {model.horizon}")
    for t, a in enumerate(seq):
        if a not in model.allowed(t):
            raise SequenceInvalidError(f"action {a} is not allowed at step {t}")
    return seq


def final_state(model: KoopmanModel, u) -> np.ndarray:
    """psi after T forward matrix-vector products."""
    seq = validate_sequence(model, u)
    x = model.psi1
    for a in seq:
        x = model.A[a] @ x
    return x


def cost(model: KoopmanModel, u) -> float:
    """J(u) = c A(u_T) ... A(u_1) psi1, without forming any matrix-matrix product."""
    return float(model.c @ final_state(model, u))


def sequence_count(model: KoopmanModel) -> int:
    """Number of feasible sequences, as an exact integer."""
    return math.prod(len(model.allowed(t)) for t in range(model.horizon))


def random_sequence(model: KoopmanModel, rng: np.random.Generator) -> ControlSequence:
    """Uniform draw from the feasible set, one step at a time."""
    return ControlSequence(
        tuple(model.allowed(t)[int(rng.integers(len(model.allowed(t))))] for t in range(model.horizon))
    )


def identity_model(n_psi: int, horizon: int, n_actions: int, c: Sequence[float], psi1: Sequence[float]) -> KoopmanModel:
    """Every action is the identity; handy when the cost must not depend on u."""
    A = np.broadcast_to(np.eye(n_psi), (n_actions, n_psi, n_psi))
    return KoopmanModel(A=A, c=c, psi1=psi1, horizon=horizon)


# diagnostics.py
"""Desk-scale verification on enumerable instances.

Exact enumeration of all feasible sequences (the optimality oracle), the
Boltzmann distribution they induce, explicit Gibbs and tempering transition
matrices for balance and convergence checks, the Hoffman mixing bound and the
sample-complexity calculator for independent Boltzmann samples.

States are always ordered lexicographically in their action indices, first
time step most significant.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

import config
from errors import ConfigError, EnumerationRefused, NoUniqueStationary
from model import ControlSequence, KoopmanModel, cost, sequence_count, validate_sequence
from solvers.tempering import boltzmann_weights, draw_index, flip_probability

logger = logging.getLogger(__name__)

# 𝒰* membership: costs within this absolute distance of the minimum
MINIMIZER_ATOL = 1e-12
# prefix-tree expansion works on blocks of at most this many sequences
_BLOCK = 1 << 16


class StateSpace:
    """Lexicographic enumeration of the feasible sequences of a model."""

    def __init__(self, model: KoopmanModel):
        self.allowed = [model.allowed(t) for t in range(model.horizon)]
        self.radices = [len(a) for a in self.allowed]
        self.size = math.prod(self.radices)
        strides = [1] * len(self.radices)
        for t in range(len(self.radices) - 2, -1, -1):
            strides[t] = strides[t + 1] * self.radices[t + 1]
        self.strides = strides

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, i: int) -> ControlSequence:
        if not 0 <= i < self.size:
            raise IndexError(i)
        return ControlSequence(tuple(
            self.allowed[t][(i // s) % r] for t, (s, r) in enumerate(zip(self.strides, self.radices))
        ))

    def __iter__(self):
        for u in itertools.product(*self.allowed):
            yield ControlSequence(u)

    def index(self, u) -> int:
        return sum(self.allowed[t].index(a) * s for t, (a, s) in enumerate(zip(u, self.strides)))

    def digits(self, t: int) -> np.ndarray:
        """Position of each state's action at step t within allowed(t)."""
        return (np.arange(self.size) // self.strides[t]) % self.radices[t]


@dataclass
class TransitionMatrix:
    states: StateSpace
    P: np.ndarray

    def __post_init__(self):
        if self.P.shape != (len(self.states), len(self.states)):
            raise ValueError(f"P has shape {self.P.shape} for {len(self.states)} states")
        if np.any(self.P < 0) or not np.allclose(self.P.sum(axis=1), 1.0, rtol=0.0, atol=1e-12):
            raise ValueError("P is not row-stochastic")


@dataclass
class BoltzmannDistribution:
    states: StateSpace
    probs: np.ndarray
    beta: float
    partition: float
    log_partition: float


def _check_cap(model: KoopmanModel, cap: Optional[int]) -> int:
    cap = config.ENUMERATION_CAP if cap is None else cap
    count = sequence_count(model)
    if count > cap:
        logger.warning("enumeration refused: %d sequences, cap %d", count, cap)
        raise EnumerationRefused(count, cap)
    return count


def _check_dense(count: int, dense_cap: Optional[int], what: str = "states") -> None:
    dense_cap = config.DENSE_STATE_CAP if dense_cap is None else dense_cap
    if count > dense_cap:
        raise EnumerationRefused(count, dense_cap, what=f"{what} in a dense transition matrix")


def enumerate_sequences(model: KoopmanModel, cap: Optional[int] = None) -> List[ControlSequence]:
    _check_cap(model, cap)
    return list(StateSpace(model))


def enumerate_costs(model: KoopmanModel, cap: Optional[int] = None) -> np.ndarray:
    """J(u) for every feasible sequence, in lexicographic order.

    Expands the tree of prefixes one step at a time in blocks, so each
    sequence costs O(n_psi^2) amortized instead of T products.
    """
    _check_cap(model, cap)
    space = StateSpace(model)
    T = model.horizon

    # the last `tail` steps are expanded vectorized, the leading ones looped
    split, tail_size = T, 1
    while split > 0 and tail_size * space.radices[split - 1] <= _BLOCK:
        split -= 1
        tail_size *= space.radices[split]

    costs = np.empty(space.size)
    tail_mats = [model.A[list(space.allowed[t])] for t in range(split, T)]
    for k, prefix in enumerate(itertools.product(*space.allowed[:split])):
        x = model.psi1
        for a in prefix:
            x = model.A[a] @ x
        X = x[np.newaxis]
        for mats in tail_mats:
            X = np.einsum("aij,mj->mai", mats, X).reshape(-1, model.n_psi)
        costs[k * tail_size:(k + 1) * tail_size] = X @ model.c
    return costs


def brute_force_min(model: KoopmanModel, cap: Optional[int] = None) -> Tuple[float, List[ControlSequence]]:
    """Exact minimum cost and every sequence within MINIMIZER_ATOL of it."""
    costs = enumerate_costs(model, cap)
    J_star = float(costs.min())
    space = StateSpace(model)
    minimizers = [space[int(i)] for i in np.flatnonzero(costs <= J_star + MINIMIZER_ATOL)]
    return J_star, minimizers


def boltzmann(model: KoopmanModel, beta: float, cap: Optional[int] = None) -> BoltzmannDistribution:
    """p(u; beta) = exp(-beta J(u)) / Q(beta) over all feasible sequences."""
    if not beta >= 0:
        raise ConfigError(f"beta must be >= 0, got {beta}")
    costs = enumerate_costs(model, cap)
    probs = boltzmann_weights(costs, beta)
    if beta == 0:
        log_q = math.log(len(costs))
    else:
        shifted = -beta * costs
        top = float(shifted.max())
        log_q = top + math.log(float(np.exp(shifted - top).sum()))
    partition = math.exp(log_q) if log_q < 709 else math.inf
    return BoltzmannDistribution(StateSpace(model), probs, float(beta), partition, log_q)


def _conditional_rows(space: StateSpace, costs: np.ndarray, beta: float, t: int):
    """For every state: the column indices reachable by changing step t, and their probabilities."""
    stride = space.strides[t]
    base = np.arange(space.size) - space.digits(t) * stride
    cols = base[:, np.newaxis] + stride * np.arange(space.radices[t])[np.newaxis, :]
    energies = costs[cols]
    if beta == 0:
        probs = np.full(energies.shape, 1.0 / energies.shape[1])
    else:
        z = -beta * energies
        z -= z.max(axis=1, keepdims=True)
        w = np.exp(z)
        probs = w / w.sum(axis=1, keepdims=True)
    return cols, probs


def gibbs_kernel(model: KoopmanModel, beta: float, t: int, cap: Optional[int] = None,
                 dense_cap: Optional[int] = None) -> TransitionMatrix:
    """Exact single-variable update kernel P_t (t is 0-based)."""
    if not 0 <= t < model.horizon:
        raise ConfigError(f"time index {t} outside 0..{model.horizon - 1}")
    costs = enumerate_costs(model, cap)
    _check_dense(len(costs), dense_cap)
    space = StateSpace(model)
    cols, probs = _conditional_rows(space, costs, beta, t)
    P = np.zeros((space.size, space.size))
    P[np.arange(space.size)[:, np.newaxis], cols] = probs
    return TransitionMatrix(space, P)


def sweep_kernel(model: KoopmanModel, beta: float, cap: Optional[int] = None,
                 dense_cap: Optional[int] = None) -> TransitionMatrix:
    """P_sweep = P_1 P_2 ... P_T, steps applied in sweep order."""
    costs = enumerate_costs(model, cap)
    _check_dense(len(costs), dense_cap)
    space = StateSpace(model)
    rows = np.arange(space.size)[:, np.newaxis]
    P = np.eye(space.size)
    for t in range(model.horizon):
        cols, probs = _conditional_rows(space, costs, beta, t)
        P_t = np.zeros_like(P)
        P_t[rows, cols] = probs
        P = P @ P_t
    return TransitionMatrix(space, P)


def _as_array(P) -> np.ndarray:
    return P.P if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=float)


def is_regular(P) -> bool:
    """True when some power of P up to |states| (rounded up to a power of two) is strictly positive."""
    B = _as_array(P) > 0
    n, k = B.shape[0], 1
    while True:
        if B.all():
            return True
        if k >= n:
            return False
        Bf = B.astype(float)
        B = (Bf @ Bf) > 0
        k *= 2


def stationary_distribution(P, tol: float = 1e-12, max_iterations: int = 1_000_000) -> np.ndarray:
    """The unique pi with pi P = pi, sum(pi) = 1 for a regular chain."""
    M = _as_array(P)
    if not is_regular(M):
        raise NoUniqueStationary("transition matrix is not regular, no unique stationary distribution")
    n = M.shape[0]
    if n <= config.DENSE_STATE_CAP:
        w, vl = scipy.linalg.eig(M, left=True, right=False)
        k = int(np.argmin(np.abs(w - 1.0)))
        pi = np.real(vl[:, k])
        pi = pi / pi.sum()
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum()

    pi = np.full(n, 1.0 / n)
    for _ in range(max_iterations):
        nxt = pi @ M
        if np.abs(nxt - pi).sum() <= tol:
            return nxt / nxt.sum()
        pi = nxt
    raise NoUniqueStationary(f"power iteration did not reach L1 residual {tol} in {max_iterations} steps")


def detailed_balance_residual(P, pi: np.ndarray) -> float:
    """max over (u, u') of |pi(u) P(u, u') - pi(u') P(u', u)|."""
    flow = np.asarray(pi)[:, np.newaxis] * _as_array(P)
    return float(np.abs(flow - flow.T).max())


def global_balance_residual(P, pi: np.ndarray) -> float:
    """L1 norm of pi P - pi."""
    pi = np.asarray(pi)
    return float(np.abs(pi @ _as_array(P) - pi).sum())


def convergence_profile(P, pi: np.ndarray, p0: np.ndarray, K: int) -> np.ndarray:
    """||p0 P^k - pi||_1 for k = 0 .. K."""
    M = _as_array(P)
    p = np.asarray(p0, dtype=float)
    residuals = [np.abs(p - pi).sum()]
    for _ in range(K):
        p = p @ M
        residuals.append(np.abs(p - pi).sum())
    return np.array(residuals)


def hoffman_bound(P) -> Tuple[float, float]:
    """(lambda bound, mixing-time bound) from the column extrema of P.

    p_max = sum_j max_i P[i, j], p_min = sum_j min_i P[i, j];
    lambda <= (p_max - p_min) / (p_max + p_min) and
    1 / log(1 / lambda) <= (p_max + p_min) / (2 p_min).
    """
    M = _as_array(P)
    p_max = float(M.max(axis=0).sum())
    p_min = float(M.min(axis=0).sum())
    lam = (p_max - p_min) / (p_max + p_min)
    mixing = math.inf if p_min == 0 else (p_max + p_min) / (2.0 * p_min)
    return lam, mixing


def mixing_time_bound(lam: float) -> float:
    """1 / (1 - lambda), an upper bound on 1 / log(1 / lambda)."""
    return math.inf if lam >= 1 else 1.0 / (1.0 - lam)


@dataclass
class SampleComplexity:
    beta_required: float
    samples_required: Optional[int]

    @property
    def feasible(self) -> bool:
        return self.samples_required is not None


def sample_complexity(U_size: int, Ustar_size: int, epsilon: float, delta: float, beta: float) -> SampleComplexity:
    """How many independent Boltzmann samples at `beta` find a cost within epsilon of J* w.p. 1 - delta.

    beta_required = ln(|U| / |U*|) / epsilon; at beta above it,
    N = ceil(ln(1/delta) / (beta epsilon - ln(|U| / |U*|))). Below it no N works.
    """
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be > 0, got {epsilon}")
    if not 0 < delta < 1:
        raise ConfigError(f"delta must be in (0, 1), got {delta}")
    if not 1 <= Ustar_size <= U_size:
        raise ConfigError(f"need 1 <= |U*| <= |U|, got |U*|={Ustar_size}, |U|={U_size}")
    log_ratio = math.log(U_size) - math.log(Ustar_size) if Ustar_size != U_size else 0.0
    beta_required = log_ratio / epsilon
    denominator = beta * epsilon - log_ratio
    if denominator <= 0:
        return SampleComplexity(beta_required, None)
    ratio = math.log(1.0 / delta) / denominator
    # keep 2.0000000000000004 from rounding up to 3
    return SampleComplexity(beta_required, max(1, math.ceil(ratio - 1e-9)))


def naive_conditional_pmf(model: KoopmanModel, u, t: int, beta: float) -> np.ndarray:
    """Conditional of step t from one full cost evaluation per candidate action."""
    seq = list(validate_sequence(model, u))
    energies = []
    for a in model.allowed(t):
        seq[t] = a
        energies.append(cost(model, seq))
    return boltzmann_weights(np.array(energies), beta, model.allowed(t))


def naive_gibbs_sweep(model: KoopmanModel, u, beta: float, rng: np.random.Generator) -> ControlSequence:
    """One variable sweep using full cost evaluations: O(T^2 |U| n_psi^2) work."""
    seq = list(validate_sequence(model, u))
    for t in range(model.horizon):
        p = naive_conditional_pmf(model, seq, t, beta)
        seq[t] = model.allowed(t)[draw_index(p, rng)]
    return ControlSequence(tuple(seq))


def joint_boltzmann(model: KoopmanModel, betas: Sequence[float], cap: Optional[int] = None) -> np.ndarray:
    """Product of the per-temperature Boltzmann distributions, replica 0 most significant."""
    joint = np.ones(1)
    for beta in betas:
        joint = np.kron(joint, boltzmann(model, beta, cap).probs)
    return joint


def tempering_kernel(model: KoopmanModel, betas: Sequence[float], cap: Optional[int] = None,
                     dense_cap: Optional[int] = None) -> np.ndarray:
    """Joint kernel of one full iteration: every replica sweeps, then the sequential flip pass."""
    costs = enumerate_costs(model, cap)
    S, M = len(costs), len(betas)
    _check_dense(S ** M, dense_cap, what="joint states")

    K = np.ones((1, 1))
    for beta in betas:
        K = np.kron(K, sweep_kernel(model, beta, cap, dense_cap).P)

    size = S ** M
    digits = np.array(list(itertools.product(range(S), repeat=M)), dtype=np.int64).reshape(size, M)
    place = S ** np.arange(M - 1, -1, -1)
    for j in range(M - 1):
        F = np.zeros((size, size))
        for s in range(size):
            d = digits[s]
            p = flip_probability(betas[j], betas[j + 1], costs[d[j]], costs[d[j + 1]])
            swapped = d.copy()
            swapped[j], swapped[j + 1] = d[j + 1], d[j]
            F[s, int(swapped @ place)] += p
            F[s, s] += 1.0 - p
        K = K @ F
    return K

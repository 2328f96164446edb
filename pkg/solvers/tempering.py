"""Gibbs sampling with parallel tempering for switched linear cost models.

Every replica holds one control sequence at a fixed inverse temperature
beta. A replica sweep resamples u[0], ..., u[T-1] from their exact
conditionals using two caches:

    x_cache[t]   = A(u[t-1]) ... A(u[0]) psi1          (forward states)
    c_cache[t+1] = c A(u[T-1]) ... A(u[t+1])            (backward cost rows)

so the energy of action a at step t is c_cache[t+1] @ A(a) @ x_cache[t] and a
whole sweep costs T*(|U|+2) matrix-vector products instead of T*|U| full cost
evaluations. After the replica sweeps, adjacent temperatures exchange their
sequences with the Metropolis flip rule.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from errors import ConfigError, NumericError, SolveAborted
from model import ControlSequence, KoopmanModel, cost, random_sequence
from utils.rng import make_stream

logger = logging.getLogger(__name__)

# exp() of anything below this is zero in double precision anyway
EXPONENT_FLOOR = -700.0


@dataclass(frozen=True)
class TemperatureLadder:
    """Inverse temperatures, strictly increasing (hot to cold)."""

    betas: Tuple[float, ...]

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        if not betas:
            raise ConfigError("temperature ladder is empty")
        if not all(math.isfinite(b) for b in betas):
            raise ConfigError(f"temperature ladder has non-finite entries: {betas}")
        if len(betas) == 1:
            if betas[0] < 0:
                raise ConfigError(f"beta must be >= 0, got {betas[0]}")
        else:
            if betas[0] <= 0:
                raise ConfigError("beta = 0 is only allowed in a single-temperature ladder")
            if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
                raise ConfigError(f"temperature ladder must be strictly increasing: {betas}")
        object.__setattr__(self, "betas", betas)

    def __len__(self) -> int:
        return len(self.betas)

    @property
    def beta_min(self) -> float:
        return self.betas[0]

    @property
    def beta_max(self) -> float:
        return self.betas[-1]


def make_log_ladder(beta_min: float, beta_max: float, M: int) -> TemperatureLadder:
    """M geometrically spaced inverse temperatures from beta_min to beta_max."""
    if M < 2:
        raise ConfigError(f"a log ladder needs at least 2 temperatures, got {M}")
    if not (math.isfinite(beta_min) and math.isfinite(beta_max)):
        raise ConfigError("ladder bounds must be finite")
    if beta_min <= 0 or beta_max <= 0:
        raise ConfigError(f"ladder bounds must be positive, got ({beta_min}, {beta_max})")
    if beta_min >= beta_max:
        raise ConfigError(f"beta_min must be < beta_max, got ({beta_min}, {beta_max})")
    betas = np.geomspace(beta_min, beta_max, M)
    betas[0], betas[-1] = beta_min, beta_max
    return TemperatureLadder(tuple(betas.tolist()))


@dataclass(frozen=True)
class SamplerConfig:
    ladder: TemperatureLadder
    sweeps: int = 1000
    seed: int = 0
    threads: int = 1
    trace_every: int = 1
    progress: bool = False

    def __post_init__(self):
        if not isinstance(self.ladder, TemperatureLadder):
            raise ConfigError("ladder must be a TemperatureLadder")
        if self.sweeps < 1:
            raise ConfigError(f"sweeps must be >= 1, got {self.sweeps}")
        if self.trace_every < 1:
            raise ConfigError(f"trace_every must be >= 1, got {self.trace_every}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass
class Replica:
    """One temperature's chain.

    `beta`, `index`, `rng` and `matvecs` belong to the temperature slot; the
    payload (`u`, both caches, `current_cost`) moves when replicas flip.
    """

    beta: float
    u: np.ndarray
    x_cache: np.ndarray
    c_cache: np.ndarray
    current_cost: float
    rng: np.random.Generator = field(repr=False)
    index: int = 0
    matvecs: int = 0

    @classmethod
    def start(cls, model: KoopmanModel, beta: float, rng: np.random.Generator, index: int = 0,
              u: Optional[Sequence[int]] = None) -> "Replica":
        """Replica with a uniform random feasible sequence (or `u`) and fresh caches."""
        if u is None:
            u = random_sequence(model, rng)
        T, n = model.horizon, model.n_psi
        replica = cls(
            beta=float(beta),
            u=np.array(tuple(u), dtype=np.int64),
            x_cache=np.empty((T + 1, n)),
            c_cache=np.empty((T + 1, n)),
            current_cost=math.nan,
            rng=rng,
            index=index,
        )
        replica.rebuild(model)
        return replica

    @property
    def sequence(self) -> ControlSequence:
        return ControlSequence(tuple(self.u.tolist()))

    def rebuild(self, model: KoopmanModel) -> None:
        """Recompute x_cache from psi1 and the current cost."""
        A, x = model.A, self.x_cache
        x[0] = model.psi1
        for t in range(model.horizon):
            x[t + 1] = A[self.u[t]] @ x[t]
        self.matvecs += model.horizon
        self.current_cost = float(model.c @ x[model.horizon])

    def rebuild_backward(self, model: KoopmanModel) -> None:
        """c_cache[T] = c, c_cache[t] = c_cache[t+1] A(u[t]) for the current sequence."""
        A, cc = model.A, self.c_cache
        cc[model.horizon] = model.c
        for t in range(model.horizon - 1, -1, -1):
            cc[t] = cc[t + 1] @ A[self.u[t]]
        self.matvecs += model.horizon

    def swap_payload(self, other: "Replica") -> None:
        self.u, other.u = other.u, self.u
        self.x_cache, other.x_cache = other.x_cache, self.x_cache
        self.c_cache, other.c_cache = other.c_cache, self.c_cache
        self.current_cost, other.current_cost = other.current_cost, self.current_cost


def conditional_pmf(c_t: np.ndarray, x_t: np.ndarray, beta: float, allowed: Sequence[int],
                    model: KoopmanModel) -> np.ndarray:
    """p(a) proportional to exp(-beta * c_t A(a) x_t) over the allowed actions.

    The largest exponent is subtracted before exp, so every exponent is <= 0.
    """
    energies = _energies(c_t, x_t, allowed, model)
    return boltzmann_weights(energies, beta, allowed)


def _energies(c_t: np.ndarray, x_t: np.ndarray, allowed: Sequence[int], model: KoopmanModel) -> np.ndarray:
    if len(allowed) == model.n_actions:
        # one stacked product over every action, no copy of A
        return np.matmul(model.A, x_t) @ c_t
    return np.array([c_t @ (model.A[a] @ x_t) for a in allowed])


def boltzmann_weights(energies: np.ndarray, beta: float, labels: Sequence[int] = None) -> np.ndarray:
    """Normalized exp(-beta * energies) with max-subtraction."""
    energies = np.asarray(energies, dtype=float)
    labels = range(len(energies)) if labels is None else labels
    bad = np.flatnonzero(~np.isfinite(energies))
    if bad.size:
        raise NumericError("non-finite energy", action=int(labels[bad[0]]))
    if beta == 0:
        return np.full(len(energies), 1.0 / len(energies))
    z = -beta * energies
    bad = np.flatnonzero(~np.isfinite(z))
    if bad.size:
        raise NumericError("energy overflows at this beta", action=int(labels[bad[0]]))
    z -= z.max()
    np.maximum(z, EXPONENT_FLOOR, out=z)
    w = np.exp(z)
    return w / w.sum()


def draw_index(p: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw; always consumes exactly one uniform."""
    cdf = np.cumsum(p)
    k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(k, len(p) - 1)


def gibbs_sweep(model: KoopmanModel, replica: Replica, rng: Optional[np.random.Generator] = None) -> Replica:
    """One variable sweep t = 0 .. T-1 at the replica's beta.

    The backward rows are rebuilt from the pre-sweep sequence and the forward
    states are re-anchored at psi1, so no rounding error carries over from
    earlier sweeps.
    """
    rng = replica.rng if rng is None else rng
    A, T = model.A, model.horizon
    u, x, cc = replica.u, replica.x_cache, replica.c_cache

    replica.rebuild_backward(model)
    x[0] = model.psi1
    energy_products = 0
    for t in range(T):
        allowed = model.allowed(t)
        p = conditional_pmf(cc[t + 1], x[t], replica.beta, allowed, model)
        energy_products += len(allowed)
        u[t] = allowed[draw_index(p, rng)]
        x[t + 1] = A[u[t]] @ x[t]
    replica.matvecs += energy_products + T
    replica.current_cost = float(model.c @ x[T])
    return replica


def cache_residual(model: KoopmanModel, replica: Replica) -> float:
    """max_t |c_cache[t+1] A(u[t]) x_cache[t] - J(u)| / (1 + |J(u)|) on a refreshed backward cache.

    The check works on a copy, so the replica and its product counter are untouched.
    """
    fresh = Replica(beta=replica.beta, u=replica.u.copy(), x_cache=replica.x_cache,
                    c_cache=np.empty_like(replica.c_cache), current_cost=replica.current_cost,
                    rng=replica.rng)
    fresh.rebuild_backward(model)
    J = cost(model, fresh.sequence)
    worst = abs(replica.current_cost - J)
    for t in range(model.horizon):
        value = fresh.c_cache[t + 1] @ (model.A[fresh.u[t]] @ replica.x_cache[t])
        worst = max(worst, abs(value - J))
    return worst / (1.0 + abs(J))


def flip_probability(beta_lo: float, beta_hi: float, J_lo: float, J_hi: float) -> float:
    """Probability of exchanging the sequences at beta_lo (hotter) and beta_hi (colder).

    min{exp((beta_hi - beta_lo) (J_hi - J_lo)), 1}; exactly 1 when the hotter
    replica holds the lower cost.
    """
    for v in (beta_lo, beta_hi, J_lo, J_hi):
        if not math.isfinite(v):
            raise NumericError(f"flip probability needs finite inputs, got {v}")
    exponent = (beta_hi - beta_lo) * (J_hi - J_lo)
    if exponent >= 0:
        return 1.0
    return math.exp(max(exponent, EXPONENT_FLOOR))


def tempering_sweep(replicas: List[Replica], rng: np.random.Generator) -> Tuple[List[Replica], List[bool]]:
    """Sequential exchange pass over adjacent pairs (0,1), (1,2), ... in ascending beta.

    Pair (j, j+1) sees the state left by pair (j-1, j). One uniform is drawn
    per pair whether or not the flip is certain.
    """
    flips = []
    for j in range(len(replicas) - 1):
        lo, hi = replicas[j], replicas[j + 1]
        p = flip_probability(lo.beta, hi.beta, lo.current_cost, hi.current_cost)
        flipped = bool(rng.random() < p)
        if flipped:
            lo.swap_payload(hi)
        flips.append(flipped)
    return replicas, flips


@dataclass
class TraceRecord:
    sweep_index: int
    per_replica_cost: List[float]
    per_replica_best: List[float]
    flips_this_sweep: List[bool]


@dataclass
class SolveResult:
    best_cost: float
    best_sequence: Optional[ControlSequence]
    trace: List[TraceRecord]
    flip_counts: List[int]
    sweep_count: int
    wall_time: float
    betas: Tuple[float, ...] = ()
    best_found_at: Tuple[int, int] = (0, 0)
    matvecs: int = 0


def flip_rates(result: SolveResult) -> List[float]:
    """Fraction of tempering sweeps in which each adjacent pair flipped."""
    if result.sweep_count == 0:
        return [0.0] * len(result.flip_counts)
    return [count / result.sweep_count for count in result.flip_counts]


def solve(model: KoopmanModel, config: SamplerConfig) -> SolveResult:
    """Alternate replica sweeps and a tempering sweep for config.sweeps iterations.

    Replica j draws from stream (seed, j+1) and the exchange pass from
    (seed, M+1), so the result does not depend on config.threads.
    """
    betas = config.ladder.betas
    M = len(betas)
    started = time.perf_counter()

    replicas = [
        Replica.start(model, beta, make_stream(config.seed, j + 1), index=j)
        for j, beta in enumerate(betas)
    ]
    exchange_rng = make_stream(config.seed, M + 1)

    best_cost = math.inf
    best_sequence = None
    best_at = (0, 0)
    position_best = [r.current_cost for r in replicas]
    flip_counts = [0] * (M - 1)
    trace: List[TraceRecord] = []
    sweep_count = 0

    def consider(sweep: int) -> None:
        nonlocal best_cost, best_sequence, best_at
        for r in replicas:
            if r.current_cost < best_cost:
                best_cost = r.current_cost
                best_sequence = r.sequence
                best_at = (sweep, r.index)

    def partial() -> SolveResult:
        return SolveResult(
            best_cost=best_cost, best_sequence=best_sequence, trace=trace, flip_counts=flip_counts,
            sweep_count=sweep_count, wall_time=time.perf_counter() - started, betas=betas,
            best_found_at=best_at, matvecs=sum(r.matvecs for r in replicas),
        )

    consider(0)
    logger.info("solving: M=%d T=%d |U|=%d n_psi=%d sweeps=%d threads=%d",
                M, model.horizon, model.n_actions, model.n_psi, config.sweeps, config.threads)

    pool = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 and M > 1 else None
    try:
        for sweep in tqdm(range(1, config.sweeps + 1), disable=not config.progress, desc="sweeps"):
            try:
                if pool is None:
                    for r in replicas:
                        gibbs_sweep(model, r)
                else:
                    list(pool.map(lambda r: gibbs_sweep(model, r), replicas))
                consider(sweep)
                _, flips = tempering_sweep(replicas, exchange_rng)
            except NumericError as e:
                logger.warning("numeric abort at sweep %d: %s", sweep, e)
                raise SolveAborted(f"sweep {sweep}: {e.reason}", partial=partial(), action=e.action) from e

            sweep_count = sweep
            for j, flipped in enumerate(flips):
                flip_counts[j] += flipped
            costs = [r.current_cost for r in replicas]
            position_best = [min(b, c) for b, c in zip(position_best, costs)]
            if sweep % config.trace_every == 0 or sweep == config.sweeps:
                trace.append(TraceRecord(sweep, costs, list(position_best), flips))
    finally:
        if pool is not None:
            pool.shutdown()

    result = partial()
    logger.info("best cost %.17g after %d sweeps (found at sweep %d, replica %d) in %.3fs",
                result.best_cost, sweep_count, best_at[0], best_at[1], result.wall_time)
    return result

"""Continuous relaxation baseline.

Each step's action choice is replaced by simplex weights mu[t, a] that mix
the matrices, psi_{t+1} = sum_a mu[t, a] A(a) psi_t. The relaxed cost is
minimized by a Nesterov-accelerated adaptive-moment method, projecting every
row back onto the simplex after each update, and the result is rounded to a
discrete sequence by per-row argmax.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from errors import ConfigError, RelaxationDiverged
from model import ControlSequence, KoopmanModel, cost, validate_sequence

logger = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-9


@dataclass
class RelaxedControls:
    """T x |U| weights, every row on the probability simplex, masked entries zero."""

    mu: np.ndarray

    @classmethod
    def uniform(cls, model: KoopmanModel) -> "RelaxedControls":
        mu = np.zeros((model.horizon, model.n_actions))
        for t in range(model.horizon):
            allowed = list(model.allowed(t))
            mu[t, allowed] = 1.0 / len(allowed)
        return cls(mu)

    @classmethod
    def one_hot(cls, model: KoopmanModel, u) -> "RelaxedControls":
        seq = validate_sequence(model, u)
        mu = np.zeros((model.horizon, model.n_actions))
        mu[np.arange(model.horizon), list(seq)] = 1.0
        return cls(mu)

    def round(self) -> ControlSequence:
        """Per-row argmax; ties go to the lowest action index."""
        return ControlSequence(tuple(int(a) for a in np.argmax(self.mu, axis=1)))


def _mask(model: KoopmanModel) -> np.ndarray:
    mask = np.zeros((model.horizon, model.n_actions), dtype=bool)
    for t in range(model.horizon):
        mask[t, list(model.allowed(t))] = True
    return mask


def check_controls(model: KoopmanModel, mu) -> np.ndarray:
    mu = np.asarray(mu.mu if isinstance(mu, RelaxedControls) else mu, dtype=float)
    if mu.shape != (model.horizon, model.n_actions):
        raise ConfigError(f"mu has shape {mu.shape}, expected {(model.horizon, model.n_actions)}")
    if not np.all(np.isfinite(mu)):
        raise ConfigError("mu has non-finite entries")
    if mu.min() < -SIMPLEX_TOL or mu.max() > 1 + SIMPLEX_TOL:
        raise ConfigError("mu entries must lie in [0, 1]")
    if np.abs(mu.sum(axis=1) - 1.0).max() > SIMPLEX_TOL:
        raise ConfigError("every row of mu must sum to 1")
    if np.abs(mu[~_mask(model)]).max(initial=0.0) > SIMPLEX_TOL:
        raise ConfigError("mu puts weight on a masked action")
    return mu


def _forward(model: KoopmanModel, mu: np.ndarray):
    """psi_t under the mixed dynamics and the per-action products A(a) psi_t."""
    T, n = model.horizon, model.n_psi
    psi = np.empty((T + 1, n))
    products = np.empty((T, model.n_actions, n))
    psi[0] = model.psi1
    for t in range(T):
        products[t] = np.matmul(model.A, psi[t])
        psi[t + 1] = mu[t] @ products[t]
    return psi, products


def relaxed_cost(model: KoopmanModel, mu) -> float:
    """c psi_{T+1} with psi_{t+1} = sum_a mu[t, a] (A(a) psi_t)."""
    mu = check_controls(model, mu)
    psi, _ = _forward(model, mu)
    return float(model.c @ psi[model.horizon])


def relaxed_gradient(model: KoopmanModel, mu) -> np.ndarray:
    """dJ/dmu[t, a] = cbar_{t+1} A(a) psi_t.

    cbar runs backward from c through the mixed matrices,
    cbar_t = cbar_{t+1} sum_a mu[t, a] A(a).
    """
    mu = check_controls(model, mu)
    psi, products = _forward(model, mu)
    T = model.horizon
    grad = np.empty((T, model.n_actions))
    cbar = model.c.copy()
    for t in range(T - 1, -1, -1):
        grad[t] = products[t] @ cbar
        rows = np.matmul(cbar, model.A)  # cbar A(a) for every a
        cbar = mu[t] @ rows
    return grad


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1} by sort and threshold."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project a vector with non-finite entries")
    s = np.sort(v)[::-1]
    css = np.cumsum(s) - 1.0
    k = np.arange(1, len(v) + 1)
    rho = np.flatnonzero(s - css / k > 0)[-1]
    theta = css[rho] / (rho + 1)
    w = np.maximum(v - theta, 0.0)
    total = w.sum()
    if abs(total - 1.0) > 1e-15:
        w /= total
    return w


def project_rows(model: KoopmanModel, mu: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Project each row onto the simplex over its allowed actions."""
    mask = _mask(model) if mask is None else mask
    out = np.zeros_like(mu)
    for t in range(mu.shape[0]):
        allowed = mask[t]
        out[t, allowed] = project_simplex(mu[t, allowed])
    return out


@dataclass(frozen=True)
class RelaxConfig:
    eta: float = 0.5
    iterations: int = 200
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    init: str = "uniform"
    progress: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigError(f"eta must be > 0, got {self.eta}")
        if self.iterations < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("moment decay rates must lie in [0, 1)")
        if self.init not in ("uniform", "random"):
            raise ConfigError(f"init must be 'uniform' or 'random', got {self.init!r}")


@dataclass
class RelaxResult:
    mu: RelaxedControls
    J_relax: float
    rounded: ControlSequence
    J_rounded: float
    history: List[Tuple[int, float, float, float]] = field(default_factory=list)
    wall_time: float = 0.0


def _initial_controls(model: KoopmanModel, config: RelaxConfig) -> np.ndarray:
    if config.init == "uniform":
        return RelaxedControls.uniform(model).mu
    rng = np.random.default_rng(config.seed)
    mu = np.zeros((model.horizon, model.n_actions))
    for t in range(model.horizon):
        allowed = list(model.allowed(t))
        mu[t, allowed] = rng.dirichlet(np.ones(len(allowed)))
    return mu


def gradient_solve(model: KoopmanModel, step_eta: float = 0.5, iterations: int = 200, seed: int = 0,
                   config: Optional[RelaxConfig] = None) -> RelaxResult:
    """Projected NAdam on the relaxed cost, then argmax rounding.

    `history` holds (iteration, elapsed seconds, relaxed cost, best relaxed
    cost so far), starting with the initial point at iteration 0.
    """
    if config is None:
        config = RelaxConfig(eta=step_eta, iterations=iterations, seed=seed)
    started = time.perf_counter()
    mask = _mask(model)
    mu = _initial_controls(model, config)
    m = np.zeros_like(mu)
    v = np.zeros_like(mu)

    J = relaxed_cost(model, mu)
    if not math.isfinite(J):
        logger.warning("relaxation diverged at the initial point")
        raise RelaxationDiverged(f"relaxed cost is {J} at the initial point", history=[])
    best = J
    history = [(0, 0.0, J, best)]
    b1, b2 = config.beta1, config.beta2
    for k in tqdm(range(1, config.iterations + 1), disable=not config.progress, desc="relax"):
        g = relaxed_gradient(model, mu)
        g[~mask] = 0.0
        if not np.all(np.isfinite(g)):
            logger.warning("relaxation diverged at iteration %d", k)
            raise RelaxationDiverged(f"gradient is not finite at iteration {k}", history=history)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** k)
        v_hat = v / (1 - b2 ** k)
        # look-ahead momentum
        m_bar = b1 * m_hat + (1 - b1) * g / (1 - b1 ** k)
        step = mu - config.eta * m_bar / (np.sqrt(v_hat) + config.eps)
        if not np.all(np.isfinite(step)):
            logger.warning("relaxation diverged at iteration %d", k)
            raise RelaxationDiverged(f"update is not finite at iteration {k}", history=history)
        mu = project_rows(model, step, mask)

        J = relaxed_cost(model, mu)
        if not math.isfinite(J):
            logger.warning("relaxation diverged at iteration %d", k)
            raise RelaxationDiverged(f"relaxed cost is {J} at iteration {k}", history=history)
        best = min(best, J)
        history.append((k, time.perf_counter() - started, J, best))

    controls = RelaxedControls(mu)
    rounded = controls.round()
    J_rounded = cost(model, rounded)
    logger.info("relaxed cost %.17g, rounded cost %.17g after %d iterations", J, J_rounded, config.iterations)
    return RelaxResult(controls, J, rounded, J_rounded, history, time.perf_counter() - started)

"""Genetic-algorithm baseline over discrete control sequences."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from tqdm import tqdm

import config as settings
from errors import ConfigError
from model import ControlSequence, KoopmanModel, cost, random_sequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GAConfig:
    population: int = settings.POPULATION
    selection_mu: int = settings.SELECTION_MU
    crossover: str = "single-point"
    mutation_rate: float = settings.MUTATION_RATE
    gene_mutation_prob: float = settings.GENE_MUTATION_PROB
    generations: int = settings.GENERATIONS
    seed: int = 0
    threads: int = 1
    progress: bool = False

    def __post_init__(self):
        if self.population < 2:
            raise ConfigError(f"population must be >= 2, got {self.population}")
        if not 1 <= self.selection_mu <= self.population:
            raise ConfigError(f"selection_mu must lie in [1, {self.population}], got {self.selection_mu}")
        if self.crossover != "single-point":
            raise ConfigError(f"unsupported crossover {self.crossover!r}")
        for name in ("mutation_rate", "gene_mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        if self.generations < 0:
            raise ConfigError(f"generations must be >= 0, got {self.generations}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")


@dataclass
class GAResult:
    best: ControlSequence
    best_cost: float
    # (generation, elapsed seconds, best cost in the population, best cost so far)
    history: List[Tuple[int, float, float, float]] = field(default_factory=list)
    wall_time: float = 0.0


def _crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Swap tails after one cut point; both parents share the same step masks."""
    if len(a) < 2:
        return a.copy(), b.copy()
    cut = int(rng.integers(1, len(a)))
    return np.concatenate([a[:cut], b[cut:]]), np.concatenate([b[:cut], a[cut:]])


def _mutate(child: np.ndarray, model: KoopmanModel, config: GAConfig, rng: np.random.Generator) -> np.ndarray:
    if rng.random() >= config.mutation_rate:
        return child
    child = child.copy()
    for t in np.flatnonzero(rng.random(len(child)) < config.gene_mutation_prob):
        allowed = model.allowed(int(t))
        child[t] = allowed[int(rng.integers(len(allowed)))]
    return child


def genetic_solve(model: KoopmanModel, config: Optional[GAConfig] = None) -> GAResult:
    """Full generational replacement with uniform-ranking parents and elitism of one.

    Each generation keeps the best individual, then fills the rest of the
    population with mutated single-point crossovers of parent pairs drawn
    uniformly from the `selection_mu` best. Generation 0 is the random
    initial population.
    """
    config = config or GAConfig()
    started = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    pool = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None

    def evaluate(population: List[np.ndarray]) -> np.ndarray:
        if pool is None:
            return np.array([cost(model, ind) for ind in population])
        return np.array(list(pool.map(lambda ind: cost(model, ind), population)))

    population = [np.array(random_sequence(model, rng).u, dtype=np.int64) for _ in range(config.population)]
    try:
        fitness = evaluate(population)
        # stable sort: ties keep population order
        order = np.argsort(fitness, kind="stable")
        best = population[order[0]].copy()
        best_cost = float(fitness[order[0]])
        history = [(0, time.perf_counter() - started, best_cost, best_cost)]

        for generation in tqdm(range(1, config.generations + 1), disable=not config.progress, desc="generations"):
            parents = [population[k] for k in order[: config.selection_mu]]
            offspring = [population[order[0]].copy()]
            while len(offspring) < config.population:
                i, j = rng.integers(config.selection_mu, size=2)
                c1, c2 = _crossover(parents[i], parents[j], rng)
                offspring.append(_mutate(c1, model, config, rng))
                if len(offspring) < config.population:
                    offspring.append(_mutate(c2, model, config, rng))

            population = offspring
            fitness = evaluate(population)
            order = np.argsort(fitness, kind="stable")
            generation_best = float(fitness[order[0]])
            if generation_best < best_cost:
                best_cost = generation_best
                best = population[order[0]].copy()
            history.append((generation, time.perf_counter() - started, generation_best, best_cost))
    finally:
        if pool is not None:
            pool.shutdown()

    result = GAResult(ControlSequence(tuple(int(a) for a in best)), best_cost, history,
                      time.perf_counter() - started)
    logger.info("ga best cost %.17g after %d generations", best_cost, config.generations)
    return result

"""Generational genetic algorithm over binary chromosomes."""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import ConfigError
from ..knowledge import ChromosomeLayout
from .distributor import Distributor
from .encoding import Chromosome

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GAConfig:
    population: int = 30
    generations: int = 10
    crossover_rate: float = 0.9
    # per-bit; None means 1 / total_bits
    mutation_rate: float | None = None
    elite_count: int = 2
    tournament_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ConfigError("population must be at least 2")
        if self.generations < 1:
            raise ConfigError("generations must be at least 1")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ConfigError("crossover_rate must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError("mutation_rate must lie in [0, 1]")
        if not 1 <= self.elite_count < self.population:
            raise ConfigError("elite_count must satisfy 1 <= elite_count < population")
        if self.tournament_size < 2:
            raise ConfigError("tournament_size must be at least 2")


@dataclass(frozen=True)
class Evaluation:
    fitness: float
    metrics: dict = field(default_factory=dict)
    per_case: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FitnessReport:
    chromosome: str
    fitness: float
    generation: int
    metrics: dict = field(default_factory=dict)
    per_case: dict = field(default_factory=dict)
    error: str | None = None


def _as_evaluation(value) -> Evaluation:
    if isinstance(value, Evaluation):
        ev = value
    else:
        ev = Evaluation(float(value))
    if not math.isfinite(ev.fitness):
        raise ValueError(f"non-finite fitness {ev.fitness}")
    return ev


def _call(evaluate, bits: str):
    return evaluate(Chromosome(bits))


def _tournament(rng: np.random.Generator, fitness: np.ndarray, size: int) -> int:
    picks = rng.integers(0, fitness.size, size=size)
    # best fitness wins; lower index breaks ties
    return int(min(picks, key=lambda i: (-fitness[i], i)))


def breed(pop: np.ndarray, fitness: np.ndarray, cfg: GAConfig, rng: np.random.Generator) -> np.ndarray:
    """Next generation: elites unchanged, then tournament offspring."""
    n, length = pop.shape
    rate = cfg.mutation_rate if cfg.mutation_rate is not None else 1.0 / length
    order = sorted(range(n), key=lambda i: (-fitness[i], i))
    out = [pop[i].copy() for i in order[:cfg.elite_count]]
    while len(out) < n:
        a = pop[_tournament(rng, fitness, cfg.tournament_size)].copy()
        b = pop[_tournament(rng, fitness, cfg.tournament_size)].copy()
        if length > 1 and rng.random() < cfg.crossover_rate:
            cut = int(rng.integers(1, length))
            a[cut:], b[cut:] = b[cut:].copy(), a[cut:].copy()
        for child in (a, b):
            flips = rng.random(length) < rate
            child[flips] ^= 1
            if len(out) < n:
                out.append(child)
    return np.stack(out)


def ga_run(layout: ChromosomeLayout | int, cfg: GAConfig, evaluate: Callable,
           distributor: Distributor | None = None,
           on_generation: Callable[[int, list[FitnessReport]], None] | None = None):
    """Optimise ``evaluate(Chromosome) -> float | Evaluation``.

    Returns ``(best_report, history)`` where ``history[g]`` lists the
    reports of generation ``g`` in population order. Evaluations are
    cached per bit string, and a failing evaluation scores 0.
    """
    length = layout if isinstance(layout, int) else layout.total_bits
    if length < 1:
        raise ConfigError("nothing to optimise: the chromosome layout is empty")
    distributor = distributor or Distributor(1)
    rng = np.random.default_rng(cfg.seed)
    pop = rng.integers(0, 2, size=(cfg.population, length), dtype=np.uint8)
    cache: dict[str, tuple[Evaluation, str | None]] = {}
    history: list[list[FitnessReport]] = []
    for gen in range(cfg.generations):
        if gen:
            fit = np.array([r.fitness for r in history[-1]])
            pop = breed(pop, fit, cfg, rng)
        keys = [Chromosome.from_array(row).bits for row in pop]
        todo = list(dict.fromkeys(k for k in keys if k not in cache))
        results = distributor.map([functools.partial(_call, evaluate, k) for k in todo])
        for k, res in zip(todo, results):
            if res.ok:
                try:
                    cache[k] = (_as_evaluation(res.value), None)
                    continue
                except (TypeError, ValueError) as e:
                    res_error = f"{type(e).__name__}: {e}"
            else:
                res_error = res.error
            log.warning("chromosome %s failed: %s", k, res_error)
            cache[k] = (Evaluation(0.0), res_error)
        reports = [FitnessReport(k, cache[k][0].fitness, gen, cache[k][0].metrics,
                                 cache[k][0].per_case, cache[k][1]) for k in keys]
        history.append(reports)
        if on_generation is not None:
            on_generation(gen, reports)
    best = best_report(history)
    return best, history


def best_report(history: list[list[FitnessReport]]) -> FitnessReport:
    """Highest fitness; the earliest occurrence wins ties."""
    best = None
    for gen in history:
        for r in gen:
            if best is None or r.fitness > best.fitness:
                best = r
    return best

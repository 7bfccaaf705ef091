"""mu+lambda evolutionary strategy with generation-indexed development.

Each generation the population is evaluated on the morphology the
developmental schedule prescribes, the top mu members survive as parents,
and each parent contributes children round-robin in fitness order until
lambda children exist.  Children are always evaluated; surviving parents
are re-evaluated only when the morphology coefficients changed since the
evaluation that produced their recorded fitness (during development that
is every generation, afterwards never).

Every member entry in a generation records the evaluation that produced
its fitness (the "eval key"), so any recorded fitness can be replayed
exactly: the morphology comes from the eval generation's coefficients and
the motor-noise stream from ``mix(run_seed, eval_gen, eval_index)``.

Determinism: genotype initialization and mutation consume a single
sequential PCG64 stream seeded by the run seed; evaluation noise seeds are
derived per (generation, member index), so neither worker count nor
evaluation order can change any result.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import control, evaluation, morphology, seeding

logger = logging.getLogger(__name__)

INIT_MODES = ("random_population", "single_root_best_of_15")

#: Population presets: total size -> (parents, children).
POPULATION_PRESETS = {
    2: (1, 1),
    3: (1, 2),
    5: (2, 3),
    7: (2, 5),
    13: (3, 10),
    20: (5, 15),
    40: (10, 30),
    60: (15, 45),
    120: (30, 90),
}

#: Number of random candidates scored for the single-root initialization.
SINGLE_ROOT_CANDIDATES = 15


@dataclass(frozen=True)
class SearchConfig:
    mu: int = 5
    lam: int = 15
    generations: int = 4000
    schedule: morphology.DevelopmentSchedule = morphology.DevelopmentSchedule(
        mode="adult", total_generations=4000
    )
    init_mode: str = "random_population"
    evaluation: evaluation.EvaluationConfig = evaluation.EvaluationConfig()

    def __post_init__(self):
        if self.mu < 1 or self.lam < 1:
            raise ValueError("mu and lambda must be at least 1")
        if self.generations < 1:
            raise ValueError("generations must be at least 1")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.init_mode!r}")
        if self.schedule.total_generations != self.generations:
            raise ValueError("schedule span must equal the generation count")

    @property
    def population_size(self) -> int:
        return self.mu + self.lam


@dataclass
class Member:
    """One population slot within a generation."""

    id: tuple[int, int]
    parent_id: Optional[tuple[int, int]]
    genotype: np.ndarray
    fitness: Optional[float] = None
    rotation: float = 0.0
    diverged: bool = False
    eval_key: Optional[tuple[int, int]] = None
    eval_coeffs: Optional[morphology.MorphologyCoefficients] = None

    @property
    def sort_fitness(self) -> float:
        return float("-inf") if self.fitness is None else self.fitness


@dataclass
class GenerationEntry:
    g: int
    coeffs: morphology.MorphologyCoefficients
    champion: int
    members: list[Member]


@dataclass
class RunResult:
    """In-memory run record; the JSONL form is produced by growbots.records."""

    config: SearchConfig
    run_seed: int
    generations: list[GenerationEntry] = field(default_factory=list)

    @property
    def final_champion(self) -> Member:
        last = self.generations[-1]
        return last.members[last.champion]


def _evaluate_members(members, body, config, run_seed, g, jobs, impl=None):
    """Evaluate the members lacking a current fitness, in index order."""
    todo = [
        (idx, m)
        for idx, m in enumerate(members)
        if m.eval_coeffs is None or m.eval_coeffs != body.coefficients_key
    ]

    def run_one(item):
        idx, m = item
        seed = seeding.noise_seed(run_seed, g, idx)
        return evaluation.evaluate(body.body, m.genotype, config.evaluation, seed, impl=impl)

    if jobs > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, todo))
    else:
        results = [run_one(item) for item in todo]

    for (idx, m), res in zip(todo, results):
        m.fitness = res.fitness
        m.rotation = res.cumulative_rotation
        m.diverged = res.diverged
        m.eval_key = (g, idx)
        m.eval_coeffs = body.coefficients_key


@dataclass
class _GenerationBody:
    """Body shared by all evaluations of one generation."""

    body: morphology.RobotBody
    coefficients_key: morphology.MorphologyCoefficients


def _body_for_generation(coeffs, eval_config, cache):
    if cache is not None and cache.coefficients_key == coeffs:
        return cache
    return _GenerationBody(
        body=evaluation.body_for_config(coeffs, eval_config), coefficients_key=coeffs
    )


def _selection_order(members) -> list[int]:
    return sorted(range(len(members)), key=lambda i: (-members[i].sort_fitness, i))


def init_population(config: SearchConfig, run_seed: int, rng, jobs: int = 1, impl=None):
    """Members of generation 1 (fitness not yet assigned).

    ``random_population`` draws mu+lambda random genotypes.  The
    single-root mode draws 15 candidates, scores them on the adult
    morphology, and keeps only the best as the sole founding member.
    """
    if config.init_mode == "random_population":
        return [
            Member(id=(1, i), parent_id=None, genotype=control.random_genotype(rng))
            for i in range(config.population_size)
        ]

    candidates = [control.random_genotype(rng) for _ in range(SINGLE_ROOT_CANDIDATES)]
    adult = morphology.build_starfish(morphology.ADULT)
    best_idx, best_fitness = 0, float("-inf")
    for i, genotype in enumerate(candidates):
        seed = seeding.noise_seed(run_seed, 0, i)
        res = evaluation.evaluate(adult, genotype, config.evaluation, seed, impl=impl)
        if res.fitness > best_fitness:
            best_idx, best_fitness = i, res.fitness
    return [Member(id=(1, 0), parent_id=None, genotype=candidates[best_idx])]


def generation_step(members, g, config, rng) -> list[Member]:
    """Selection and reproduction: the population of generation ``g+1``.

    The best mu members survive (ties broken by lower index); if fewer
    members exist than parent slots, the top members fill the slots
    cyclically.  Children are assigned round-robin across parents in
    fitness order, each created by a two-gene mutation.
    """
    order = _selection_order(members)
    slots = [members[order[i % len(members)]] for i in range(config.mu)]

    next_members = []
    for i, parent in enumerate(slots):
        next_members.append(
            Member(
                id=(g + 1, i),
                parent_id=parent.id,
                genotype=parent.genotype.copy(),
                fitness=parent.fitness,
                rotation=parent.rotation,
                diverged=parent.diverged,
                eval_key=parent.eval_key,
                eval_coeffs=parent.eval_coeffs,
            )
        )
    for j in range(config.lam):
        parent = slots[j % config.mu]
        child = control.mutate(parent.genotype, rng)
        next_members.append(
            Member(id=(g + 1, config.mu + j), parent_id=parent.id, genotype=child)
        )
    return next_members


def run_search(
    config: SearchConfig,
    run_seed: int,
    on_generation: Optional[Callable[[GenerationEntry], None]] = None,
    jobs: int = 1,
    impl=None,
) -> RunResult:
    """Execute the full search; deterministic in (config, run_seed).

    ``on_generation`` receives each generation entry as soon as it is
    complete, enabling streaming record writers.
    """
    rng = seeding.rng_from(run_seed)
    result = RunResult(config=config, run_seed=run_seed)

    members = init_population(config, run_seed, rng, jobs=jobs, impl=impl)
    body = None
    for g in range(1, config.generations + 1):
        coeffs = morphology.schedule_value(config.schedule, g)
        body = _body_for_generation(coeffs, config.evaluation, body)
        _evaluate_members(members, body, config, run_seed, g, jobs, impl=impl)

        if all(m.diverged for m in members):
            logger.warning("generation %d: every member diverged", g)

        champion = _selection_order(members)[0]
        entry = GenerationEntry(g=g, coeffs=coeffs, champion=champion, members=members)
        result.generations.append(entry)
        if on_generation is not None:
            on_generation(entry)

        if g < config.generations:
            members = generation_step(members, g, config, rng)

    return result

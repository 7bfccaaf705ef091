"""Post-hoc metrics over run records.

All operations are pure functions of loaded records: final fitness
(mean of the ten best member fitnesses pooled over the last 50
generations), genealogy distances along parent chains, per-generation
mutation-distance series with a 101-generation rolling average, PCA of
genotype sets, Pearson correlation, and per-experiment summary tables.

Lineage conventions: a surviving parent re-appears each generation as a
member whose parent link points to its previous entry; such re-evaluation
links join identical genotypes and contribute zero mutation distance, so
genealogy distance is a pure genotype-space quantity and is additive along
lineages.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import control
from .evaluation import classify_rolling
from .records import RecordMember, RunRecord

FINAL_FITNESS_GENERATIONS = 50
FINAL_FITNESS_TOP = 10
ROLLING_WINDOW = 101


def final_fitness(
    record: RunRecord,
    last_generations: int = FINAL_FITNESS_GENERATIONS,
    top: int = FINAL_FITNESS_TOP,
) -> float:
    """Mean of the ``top`` best fitnesses pooled over the last generations."""
    if len(record.generations) < last_generations:
        raise ValueError(
            f"record has {len(record.generations)} generations, "
            f"need at least {last_generations}"
        )
    pool = [
        m.fitness
        for gen in record.generations[-last_generations:]
        for m in gen.members
    ]
    pool.sort(reverse=True)
    best = pool[:top]
    return float(np.mean(best))


def lineage(record: RunRecord, member_id: tuple[int, int]) -> list[RecordMember]:
    """Ancestor chain from generation 1 to the member, inclusive."""
    chain = [record.member(member_id)]
    while chain[-1].parent_id is not None:
        chain.append(record.member(chain[-1].parent_id))
    return list(reversed(chain))


def genealogy_distance(
    record: RunRecord,
    member_id: tuple[int, int],
    ancestor_id: tuple[int, int],
) -> float:
    """Sum of mutation distances along the lineage from ancestor to member."""
    total = 0.0
    current = record.member(member_id)
    while current.id != tuple(ancestor_id):
        if current.parent_id is None:
            raise ValueError(f"{tuple(ancestor_id)} is not on the lineage of {tuple(member_id)}")
        parent = record.member(current.parent_id)
        total += control.genotype_distance(parent.genotype, current.genotype)
        current = parent
    return total


def rolling_average(series: Sequence[float], window: int = ROLLING_WINDOW) -> np.ndarray:
    """Centered rolling mean with windows truncated at the boundaries."""
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    series = np.asarray(series, dtype=float)
    half = window // 2
    out = np.empty_like(series)
    for i in range(len(series)):
        lo = max(0, i - half)
        hi = min(len(series), i + half + 1)
        out[i] = series[lo:hi].mean()
    return out


def mutation_distance_series(
    record: RunRecord,
    champion_id: Optional[tuple[int, int]] = None,
    window: int = ROLLING_WINDOW,
):
    """Per-generation mutation distance along the champion's lineage.

    Returns ``(generations, distances, rolling)`` where entry ``k`` is the
    distance between the lineage's genotypes at generations ``k+1`` and
    ``k+2`` (re-evaluation links contribute zero).
    """
    if champion_id is None:
        champion_id = record.final_champion.id
    chain = lineage(record, champion_id)
    if chain[0].id[0] != 1:
        raise ValueError("champion lineage does not reach generation 1")
    gens = np.arange(2, len(chain) + 1)
    distances = np.array(
        [
            control.genotype_distance(chain[k].genotype, chain[k + 1].genotype)
            for k in range(len(chain) - 1)
        ]
    )
    return gens, distances, rolling_average(distances, window) if len(distances) else distances


@dataclass
class PCAResult:
    projections: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray


def pca(genotypes: np.ndarray, n_components: int = 2) -> PCAResult:
    """Principal components of a genotype set (mean-centered, unscaled).

    Components are the leading eigenvectors of the sample covariance,
    ordered by decreasing variance; each axis is oriented so its
    largest-magnitude loading is positive, making projections reproducible
    across platforms.
    """
    x = np.asarray(genotypes, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("pca needs at least two genotypes")
    if np.unique(x, axis=0).shape[0] < 2:
        raise ValueError("pca input is degenerate: fewer than two distinct genotypes")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1][:n_components]
    components = eigenvectors[:, order].T.copy()
    for row in components:
        peak = np.argmax(np.abs(row))
        if row[peak] < 0:
            row *= -1.0
    variance = eigenvalues[order]
    total = eigenvalues.sum()
    if total <= 0:
        raise ValueError("pca input is degenerate: zero total variance")
    return PCAResult(
        projections=centered @ components.T,
        components=components,
        explained_variance=variance,
        explained_variance_ratio=variance / total,
    )


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 3:
        raise ValueError("pearson needs two equal-length series of at least 3 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt(np.sum(dx * dx))
    sy = np.sqrt(np.sum(dy * dy))
    if sx == 0 or sy == 0:
        raise ValueError("pearson undefined: a series has zero variance")
    return float(np.sum(dx * dy) / (sx * sy))


SUMMARY_COLUMNS = (
    ["seed", "final_fitness", "rolling", "genealogy_distance", "champion_gen", "champion_index"]
    + [f"genotype_{i}" for i in range(control.N_GENES)]
)


@dataclass
class SummaryRow:
    seed: int
    final_fitness: float
    rolling: bool
    genealogy_distance: float
    champion_id: tuple[int, int]
    champion_genotype: np.ndarray

    def as_list(self) -> list:
        return (
            [
                self.seed,
                self.final_fitness,
                self.rolling,
                self.genealogy_distance,
                self.champion_id[0],
                self.champion_id[1],
            ]
            + [float(g) for g in self.champion_genotype]
        )


def summarize_record(record: RunRecord) -> SummaryRow:
    champion = record.final_champion
    chain = lineage(record, champion.id)
    # short records (fewer than 50 generations) pool whatever exists
    window = min(FINAL_FITNESS_GENERATIONS, len(record.generations))
    return SummaryRow(
        seed=record.run_seed,
        final_fitness=final_fitness(record, last_generations=window),
        rolling=classify_rolling(champion.rotation),
        genealogy_distance=genealogy_distance(record, champion.id, chain[0].id),
        champion_id=champion.id,
        champion_genotype=champion.genotype,
    )


def summarize_experiment(records: Sequence[RunRecord]) -> list[SummaryRow]:
    """One row per run; records must share a format version."""
    versions = {r.format_version for r in records}
    if len(versions) > 1:
        raise ValueError(f"mixed record format versions: {sorted(versions)}")
    return [summarize_record(r) for r in records]


def write_summary_csv(rows: Sequence[SummaryRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow(row.as_list())
    return path


def write_summary_json(rows: Sequence[SummaryRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    docs = [dict(zip(SUMMARY_COLUMNS, row.as_list())) for row in rows]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(docs, fh, indent=1)
        fh.write("\n")
    return path

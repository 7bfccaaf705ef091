"""Gait genotype: encoding, sinusoidal signal generation, and mutation.

A genotype is a flat vector of 24 floats, two per motor group, laid out as
``[phase_0, amplitude_0, phase_1, amplitude_1, ...]`` for the 12 motor
groups of the starfish.  Phases live in [-pi, pi], amplitudes in [0, 0.2].
The actuation period is fixed at 2*pi seconds for every group.

Mutation and distances operate in normalized gene space, where every gene
is mapped affinely onto [0, 1] so phase and amplitude contribute comparably.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

N_GROUPS = 12
N_GENES = 2 * N_GROUPS

PHASE_MIN, PHASE_MAX = -math.pi, math.pi
AMP_MIN, AMP_MAX = 0.0, 0.2

#: Variance of the normal perturbation applied to a normalized gene.
MUTATION_VARIANCE = 0.05
#: Number of genes changed per reproduction event.
MUTATION_GENE_COUNT = 2

#: Muscle commands are clamped to this magnitude before application so that
#: commanded rest lengths stay positive even with motor noise added.
COMMAND_CLAMP = 0.25

_GENE_LO = np.array([PHASE_MIN, AMP_MIN] * N_GROUPS)
_GENE_SPAN = np.array([PHASE_MAX - PHASE_MIN, AMP_MAX - AMP_MIN] * N_GROUPS)


class GaitParameters(NamedTuple):
    """Decoded per-group gait: phase (rad) and amplitude (actuation fraction)."""

    phases: np.ndarray
    amplitudes: np.ndarray


def validate_genotype(genotype: np.ndarray) -> np.ndarray:
    genotype = np.asarray(genotype, dtype=float)
    if genotype.shape != (N_GENES,):
        raise ValueError(f"genotype must have exactly {N_GENES} genes, got shape {genotype.shape}")
    if not np.all(np.isfinite(genotype)):
        raise ValueError("genotype contains non-finite genes")
    lo_ok = np.all(genotype >= _GENE_LO)
    hi_ok = np.all(genotype <= _GENE_LO + _GENE_SPAN)
    if not (lo_ok and hi_ok):
        raise ValueError("genotype gene out of range")
    return genotype


def decode_gait(genotype: np.ndarray) -> GaitParameters:
    """Split a genotype into per-group phases and amplitudes."""
    genotype = validate_genotype(genotype)
    return GaitParameters(phases=genotype[0::2].copy(), amplitudes=genotype[1::2].copy())


def encode_gait(gait: GaitParameters) -> np.ndarray:
    """Inverse of :func:`decode_gait`."""
    genotype = np.empty(N_GENES)
    genotype[0::2] = gait.phases
    genotype[1::2] = gait.amplitudes
    return genotype


def gait_signal(gait: GaitParameters, group: int, t_act: float) -> float:
    """Actuation scalar of one motor group, ``A * sin(t_act + phase)``.

    ``t_act`` is the time in seconds since actuation onset (end of the
    settle phase).  The sinusoid period is 2*pi, shared by all groups.
    """
    if not 0 <= group < N_GROUPS:
        raise ValueError(f"motor group index {group} out of range [0, {N_GROUPS})")
    return gait.amplitudes[group] * math.sin(t_act + gait.phases[group])


def apply_command(section_height: float, alpha: float) -> tuple[float, float]:
    """Rest lengths (left, right) of a section's antagonistic muscle pair.

    The left muscle is commanded to ``(1 + alpha) * h`` and the right one to
    ``(1 - alpha) * h``, where ``h`` is the section's current neutral height.
    """
    if section_height <= 0:
        raise ValueError("section height must be positive")
    if alpha > COMMAND_CLAMP:
        alpha = COMMAND_CLAMP
    elif alpha < -COMMAND_CLAMP:
        alpha = -COMMAND_CLAMP
    return (1.0 + alpha) * section_height, (1.0 - alpha) * section_height


def random_genotype(rng: np.random.Generator) -> np.ndarray:
    """Genotype with phases uniform in [-pi, pi] and amplitudes in [0, 0.2]."""
    unit = rng.uniform(0.0, 1.0, size=N_GENES)
    return _GENE_LO + unit * _GENE_SPAN


def to_unit(genotype: np.ndarray) -> np.ndarray:
    """Map genes affinely onto [0, 1] (phase and amplitude alike)."""
    return (np.asarray(genotype, dtype=float) - _GENE_LO) / _GENE_SPAN


def from_unit(unit: np.ndarray) -> np.ndarray:
    return _GENE_LO + np.asarray(unit, dtype=float) * _GENE_SPAN


def reflect_unit(x: float) -> float:
    """Mirror a perturbed normalized gene back into [0, 1], repeatedly."""
    while x < 0.0 or x > 1.0:
        if x < 0.0:
            x = -x
        if x > 1.0:
            x = 2.0 - x
    return x


def mutate(parent: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Child genotype: exactly two distinct genes perturbed, others bit-equal.

    Each chosen gene is perturbed in normalized coordinates by a normal
    sample with variance :data:`MUTATION_VARIANCE`; excursions beyond the
    [0, 1] bounds are mirrored back inside.
    """
    parent = validate_genotype(parent)
    child = parent.copy()
    sigma = math.sqrt(MUTATION_VARIANCE)
    indices = rng.choice(N_GENES, size=MUTATION_GENE_COUNT, replace=False)
    for idx in indices:
        x = (child[idx] - _GENE_LO[idx]) / _GENE_SPAN[idx]
        x = reflect_unit(x + rng.normal(0.0, sigma))
        child[idx] = _GENE_LO[idx] + x * _GENE_SPAN[idx]
    return child


def genotype_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between genotypes in normalized [0, 1]^24 space."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (N_GENES,) or b.shape != (N_GENES,):
        raise ValueError("genotype_distance requires two full genotypes")
    return float(np.sqrt(np.sum((to_unit(a) - to_unit(b)) ** 2)))

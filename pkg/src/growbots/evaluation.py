"""Locomotion task: drop, settle, actuate for 60 s, measure displacement.

One evaluation simulates a robot+genotype from its drop position: zero
actuation during the settle phase (3*pi seconds, stored as 9.42 so it is a
whole number of timesteps), then the sinusoidal gait until the 60 s mark,
which fits eight full actuation periods.  Fitness is the signed
x-displacement of the hexagon-node centroid between t=0 and the end; body
rotation is tracked as the unwrapped angle of the centroid-to-vertex-0
vector, and a member counts as *rolling* when it accumulates at least two
full revolutions.

Motor noise, when enabled, perturbs the commanded actuation of every
muscle independently at every timestep (settle phase included) with a
normal deviate of variance 1e-4; the stream is drawn from the evaluation's
noise seed, so a result is a pure function of (body, genotype, config,
noise_seed) regardless of scheduling or worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import control, engine, morphology
from .physics2d import (
    BAUMGARTE,
    BOUNCE_SPEED_THRESHOLD,
    DT_DEFAULT,
    DYNAMIC_FRICTION_FACTOR,
    FLOOR_RESTITUTION,
    FRICTION_SPEED_THRESHOLD,
    GRAVITY_Y,
    PENETRATION_SLOP,
    SOLVER_ITERATIONS,
)

SETTLE_DURATION = 9.42
TOTAL_DURATION = 60.0
MOTOR_NOISE_VARIANCE = 1e-4

#: A body "rolls" when |cumulative rotation| reaches two full revolutions.
ROLLING_MIN_ROTATION = 4.0 * math.pi


@dataclass(frozen=True)
class EvoDevoConfig:
    """In-evaluation growth: size ramps linearly to 1.0 within the run."""

    start_size: float
    growth_start: float = 10.0
    growth_end: float = 40.0

    def __post_init__(self):
        if self.start_size <= 0:
            raise ValueError("start_size must be positive")
        if not 0 <= self.growth_start < self.growth_end:
            raise ValueError("growth window must satisfy 0 <= start < end")


@dataclass(frozen=True)
class EvaluationConfig:
    settle_duration: float = SETTLE_DURATION
    total_duration: float = TOTAL_DURATION
    dt: float = DT_DEFAULT
    motor_noise_variance: float = MOTOR_NOISE_VARIANCE
    noise_enabled: bool = True
    evo_devo: Optional[EvoDevoConfig] = None

    def __post_init__(self):
        if not 0 <= self.settle_duration < self.total_duration:
            raise ValueError("settle phase must fit within the evaluation")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.motor_noise_variance < 0:
            raise ValueError("noise variance must be non-negative")

    @property
    def n_steps(self) -> int:
        return round(self.total_duration / self.dt)


@dataclass
class EvaluationResult:
    fitness: float
    cumulative_rotation: float
    rolling: bool
    diverged: bool
    diverged_step: int = -1
    trajectory: Optional[np.ndarray] = None


def classify_rolling(cumulative_rotation: float) -> bool:
    """True iff the body turned two or more full revolutions (either way)."""
    return abs(cumulative_rotation) >= ROLLING_MIN_ROTATION


def evo_devo_size(t: float, variant: EvoDevoConfig) -> float:
    """Size coefficient at evaluation time ``t`` under in-evaluation growth.

    Constant at ``start_size`` before the growth window, linear to exactly
    1.0 at ``growth_end``, then clamped at the adult value.
    """
    if t < variant.growth_start:
        return variant.start_size
    if t >= variant.growth_end:
        return 1.0
    return variant.start_size + (1.0 - variant.start_size) * (t - variant.growth_start) / (
        variant.growth_end - variant.growth_start
    )


def body_for_config(
    coeffs: morphology.MorphologyCoefficients, config: EvaluationConfig
) -> morphology.RobotBody:
    """Build the body a generation evaluates: evo-devo starts at child size."""
    if config.evo_devo is not None:
        coeffs = morphology.MorphologyCoefficients(
            size=config.evo_devo.start_size,
            stiffness=coeffs.stiffness,
            mass=coeffs.mass,
            gravity=coeffs.gravity,
        )
    return morphology.build_starfish(coeffs)


def noise_array(config: EvaluationConfig, noise_seed: int, n_muscles: int) -> Optional[np.ndarray]:
    """Per-step, per-muscle actuation noise (None when disabled)."""
    if not config.noise_enabled or config.motor_noise_variance == 0.0:
        return None
    rng = np.random.Generator(np.random.PCG64(noise_seed))
    noise = rng.standard_normal((config.n_steps, n_muscles))
    noise *= math.sqrt(config.motor_noise_variance)
    return noise


def evaluate(
    body: morphology.RobotBody,
    genotype: np.ndarray,
    config: EvaluationConfig = EvaluationConfig(),
    noise_seed: int = 0,
    sample_interval: Optional[float] = None,
    impl=None,
) -> EvaluationResult:
    """Run one locomotion evaluation; deterministic in all arguments.

    ``sample_interval`` (seconds) requests a trajectory: rows of
    ``[t, x0, y0, x1, y1, ...]`` over the real nodes, including t=0.
    A diverged simulation yields ``fitness=-inf`` and keeps the search
    going; the step index is reported on the result.
    """
    gait = control.decode_gait(genotype)
    if len(body.muscles) % control.N_GROUPS != 0:
        raise ValueError("body motor wiring inconsistent with gait groups")

    system = engine.pack_system(
        positions=body.positions,
        velocities=np.zeros_like(body.positions),
        masses=body.masses,
        friction=body.friction,
        spring_a=body.spring_a,
        spring_b=body.spring_b,
        rest_length=body.rest_length,
        stiffness=body.stiffness,
        damping_ratio=body.damping_ratio,
        dt=config.dt,
        gravity=GRAVITY_Y * body.coefficients.gravity,
        restitution=FLOOR_RESTITUTION,
        floor_enabled=True,
        slop=PENETRATION_SLOP,
        bounce_speed=BOUNCE_SPEED_THRESHOLD,
        fric_speed=FRICTION_SPEED_THRESHOLD,
        dyn_fric_factor=DYNAMIC_FRICTION_FACTOR,
        baumgarte=BAUMGARTE,
        iterations=SOLVER_ITERATIONS,
        slabs=morphology.node_slabs(),
    )

    n_steps = config.n_steps
    noise = noise_array(config, noise_seed, len(body.muscles))

    sample_every = 0
    samples = None
    if sample_interval is not None:
        sample_every = round(sample_interval / config.dt)
        if sample_every <= 0:
            raise ValueError("sample interval must be at least one timestep")
        samples = np.zeros((n_steps // sample_every + 1, 1 + 2 * len(system.px)))

    ed = config.evo_devo
    job = engine.LocomotionJob(
        system=system,
        muscle_idx=system.real_springs[body.muscles],
        muscle_sign=body.muscle_signs,
        muscle_group=body.muscle_groups,
        n_groups=control.N_GROUPS,
        phase=gait.phases,
        amp=gait.amplitudes,
        settle_time=config.settle_duration,
        cmd_clamp=control.COMMAND_CLAMP,
        noise=noise,
        diag_idx=system.real_springs[body.diagonals],
        tip_idx=system.real_springs[body.tip_springs],
        width=morphology.SECTION_WIDTH,
        height_adult=morphology.SECTION_HEIGHT_ADULT,
        evo_devo=ed is not None,
        size_fixed=body.coefficients.size,
        ed_start=ed.start_size if ed else 1.0,
        ed_t0=ed.growth_start if ed else 0.0,
        ed_t1=ed.growth_end if ed else 1.0,
        hex_first=0,
        hex_count=len(morphology.HEXAGON_NODES),
        vertex_node=morphology.VERTEX0,
        sample_every=sample_every,
        samples=samples,
    )

    diverged_step, x_start, x_end, rotation = engine.run_locomotion(job, n_steps, impl=impl)
    diverged = diverged_step >= 0

    trajectory = None
    if samples is not None:
        cols = np.empty(1 + 2 * len(body.positions), dtype=np.int64)
        cols[0] = 0
        cols[1::2] = 1 + 2 * system.real_nodes.astype(np.int64)
        cols[2::2] = 2 + 2 * system.real_nodes.astype(np.int64)
        rows = (diverged_step // sample_every + 1) if diverged else samples.shape[0]
        trajectory = samples[:rows, cols]

    return EvaluationResult(
        fitness=(x_end - x_start) if not diverged else float("-inf"),
        cumulative_rotation=rotation,
        rolling=classify_rolling(rotation),
        diverged=diverged,
        diverged_step=diverged_step,
        trajectory=trajectory,
    )


def mirror_genotype(genotype: np.ndarray) -> np.ndarray:
    """Genotype whose gait is the left-right mirror image of the input.

    Reflecting the robot about the vertical axis permutes its tentacles and
    swaps each section's left and right muscles, so the mirrored gait uses
    the reflected tentacle's parameters with the actuation sign flipped
    (phase shifted by pi, wrapped back into [-pi, pi]).
    """
    gait = control.decode_gait(genotype)
    perm = morphology.mirror_tentacle_permutation()
    phases = np.empty_like(gait.phases)
    amps = np.empty_like(gait.amplitudes)
    for t in range(morphology.N_TENTACLES):
        for half in range(2):
            g_dst = 2 * t + half
            g_src = 2 * perm[t] + half
            p = gait.phases[g_src] + math.pi
            if p > math.pi:
                p -= 2.0 * math.pi
            phases[g_dst] = p
            amps[g_dst] = gait.amplitudes[g_src]
    return control.encode_gait(control.GaitParameters(phases=phases, amplitudes=amps))


def default_config(**overrides) -> EvaluationConfig:
    return replace(EvaluationConfig(), **overrides)

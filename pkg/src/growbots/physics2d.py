"""Deterministic fixed-timestep 2D point-mass/spring dynamics.

Springs follow ``m_r * x'' = -k (x - x_r) - c x'`` with reduced mass
``m_r = 1 / (1/m_A + 1/m_B)`` and critical-style damping ``c = 2 zeta
sqrt(m_r k)``.  They are integrated first-order implicitly by expressing
each spring as a velocity-level soft constraint: per step the solver runs a
fixed number of sequential-impulse sweeps (springs in construction order,
then ground contacts in node order), then integrates positions.

Ground contact, against the flat floor ``y = 0``, resolves non-penetration
with restitution 0.2 and Coulomb friction whose tangential impulse is
clamped by ``mu`` times the accumulated normal impulse.  A node moving
tangentially faster than 1 mm/s gets the dynamic coefficient (half of
static).  Contact state (approach speed, penetration, friction regime) is
captured from the state at the top of the step, before gravity is applied,
so a node at rest feels no restitution kick from its own weight.

Implementation details the contact model pins down (chosen once,
documented here, identical in every engine):

* penetration slop 1 mm: a Baumgarte bias pushes out penetration beyond
  the slop, and after integration positions are projected to ``y >= -slop``
  so no step ever ends deeper than the slop;
* restitution applies only above an approach speed of 0.01 m/s, otherwise
  the contact is inelastic (prevents jitter at rest);
* the friction regime switch at 1 mm/s is a strict threshold with no
  hysteresis;
* fixed 10 solver iterations per step, impulse accumulators cold-started
  each step;
* all arithmetic in 64-bit floats with a fixed accumulation order, so two
  identical worlds step bitwise identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine

DT_DEFAULT = 0.005
GRAVITY_Y = -100.0
FLOOR_RESTITUTION = 0.2
PENETRATION_SLOP = 1e-3
BOUNCE_SPEED_THRESHOLD = 0.01
FRICTION_SPEED_THRESHOLD = 1e-3
DYNAMIC_FRICTION_FACTOR = 0.5
BAUMGARTE = 0.2
SOLVER_ITERATIONS = 10


class SimulationDiverged(RuntimeError):
    """Raised when a NaN/Inf is detected in the state after a step."""

    def __init__(self, step_index: int):
        super().__init__(f"simulation diverged at step {step_index}")
        self.step_index = step_index


def spring_constraint_coefficients(k: float, c: float, dt: float) -> tuple[float, float]:
    """Soft-constraint mixing terms of a spring: ``(bias_factor, softness)``.

    ``softness = 1 / (dt*k + c)`` (m/(N s)) and ``bias_factor =
    (dt*k / (dt*k + c)) / dt`` (1/s).  Substituted into the velocity-level
    constraint solve these reproduce first-order implicit integration of
    the spring force; ``k -> inf`` recovers a rigid constraint
    (softness 0, bias_factor 1/dt).
    """
    if k <= 0:
        raise ValueError("stiffness must be positive")
    if c < 0:
        raise ValueError("damping must be non-negative")
    if dt <= 0:
        raise ValueError("timestep must be positive")
    hk = dt * k
    softness = 1.0 / (hk + c)
    bias_factor = hk * softness / dt
    return bias_factor, softness


def spring_damping(k: float, zeta: float, m_a: float, m_b: float) -> float:
    """Damping ``c = 2 zeta sqrt(m_r k)`` for endpoint masses ``m_a, m_b``."""
    m_r = 1.0 / (1.0 / m_a + 1.0 / m_b)
    return 2.0 * zeta * math.sqrt(m_r * k)


@dataclass
class PointMass:
    position: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    mass: float = 1.0
    friction_static: float = 0.5

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.friction_static < 0:
            raise ValueError("friction must be non-negative")


@dataclass
class Spring:
    a: int
    b: int
    rest_length: float
    stiffness: float
    damping_ratio: float = 1.0

    def __post_init__(self):
        if self.stiffness <= 0:
            raise ValueError("stiffness must be positive")
        if self.rest_length <= 0:
            raise ValueError("rest length must be positive")


@dataclass
class World:
    """A closed spring-mass system over a flat floor.

    Owned exclusively by one simulation; never shared between workers.
    ``step`` advances the fixed timestep, raising :class:`SimulationDiverged`
    if the state stops being finite.
    """

    point_masses: list[PointMass] = field(default_factory=list)
    springs: list[Spring] = field(default_factory=list)
    gravity: float = GRAVITY_Y
    dt: float = DT_DEFAULT
    restitution: float = FLOOR_RESTITUTION
    floor_enabled: bool = True
    steps_taken: int = field(default=0, init=False)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError("restitution must be in [0, 1]")
        n = len(self.point_masses)
        for s in self.springs:
            if not (0 <= s.a < n and 0 <= s.b < n and s.a != s.b):
                raise ValueError(f"spring endpoints ({s.a}, {s.b}) invalid for {n} nodes")
        self._sys = engine.pack_system(
            positions=np.array([p.position for p in self.point_masses], dtype=float).reshape(n, 2),
            velocities=np.array([p.velocity for p in self.point_masses], dtype=float).reshape(n, 2),
            masses=np.array([p.mass for p in self.point_masses], dtype=float),
            friction=np.array([p.friction_static for p in self.point_masses], dtype=float),
            spring_a=np.array([s.a for s in self.springs], dtype=np.int32),
            spring_b=np.array([s.b for s in self.springs], dtype=np.int32),
            rest_length=np.array([s.rest_length for s in self.springs], dtype=float),
            stiffness=np.array([s.stiffness for s in self.springs], dtype=float),
            damping_ratio=np.array([s.damping_ratio for s in self.springs], dtype=float),
            dt=self.dt,
            gravity=self.gravity,
            restitution=self.restitution,
            floor_enabled=self.floor_enabled,
        )

    @property
    def simulated_time(self) -> float:
        return self.steps_taken * self.dt

    @property
    def positions(self) -> np.ndarray:
        return np.stack([self._sys.px, self._sys.py], axis=1)

    @property
    def velocities(self) -> np.ndarray:
        return np.stack([self._sys.vx, self._sys.vy], axis=1)

    def total_momentum(self) -> np.ndarray:
        m = self._sys.mass
        return np.array([np.sum(m * self._sys.vx), np.sum(m * self._sys.vy)])

    def step(self, n_steps: int = 1) -> None:
        """Advance the world by ``n_steps`` fixed timesteps."""
        if n_steps < 0:
            raise ValueError("n_steps must be non-negative")
        diverged = engine.step_n(self._sys, n_steps)
        if diverged >= 0:
            raise SimulationDiverged(self.steps_taken + diverged)
        self.steps_taken += n_steps

    def run(self, n_steps: int, tap=None, tap_every: int = 20) -> None:
        """Step, invoking ``tap(time, positions)`` every ``tap_every`` steps.

        The tap also fires on the initial state.  ``positions`` is a fresh
        (n, 2) array the callback may keep.
        """
        if tap is None:
            self.step(n_steps)
            return
        if tap_every <= 0:
            raise ValueError("tap_every must be positive")
        tap(self.simulated_time, self.positions)
        done = 0
        while done < n_steps:
            chunk = min(tap_every, n_steps - done)
            self.step(chunk)
            done += chunk
            if chunk == tap_every:
                tap(self.simulated_time, self.positions)


def resolve_ground_contact(
    node: PointMass,
    dt: float = DT_DEFAULT,
    gravity: float = GRAVITY_Y,
    restitution: float = FLOOR_RESTITUTION,
) -> tuple[float, float]:
    """Contact impulse (tangential, normal) on a single node for one step.

    Replicates the per-node contact resolution of :meth:`World.step` for a
    node with no springs attached: capture approach speed and friction
    regime from the incoming state, apply gravity, then solve the contact
    to convergence.  A node above the floor yields a zero impulse.
    """
    px, py = node.position
    vx, vy = node.velocity
    if py > 0.0:
        return (0.0, 0.0)
    appr = vy
    pen = -py - PENETRATION_SLOP
    baum = (BAUMGARTE / dt) * pen if pen > 0 else 0.0
    bounce = -restitution * appr if appr < -BOUNCE_SPEED_THRESHOLD else 0.0
    target_v = bounce if bounce > baum else baum
    mu = node.friction_static
    if vx > FRICTION_SPEED_THRESHOLD or vx < -FRICTION_SPEED_THRESHOLD:
        mu *= DYNAMIC_FRICTION_FACTOR
    m = node.mass
    vy += gravity * dt
    lam_n = m * (target_v - vy) if target_v > vy else 0.0
    lam_t = -m * vx
    cap = mu * lam_n
    if lam_t > cap:
        lam_t = cap
    elif lam_t < -cap:
        lam_t = -cap
    return (lam_t, lam_n)

"""Starfish robot construction and developmental schedules.

The robot is a regular hexagon (rigid perimeter plus center-node spokes)
with one tentacle per edge.  A tentacle is a ladder of 8 rectangular
sections closed by a triangular tip: each section has two rigid diagonal
springs, two actuated side muscles, and a flexible outer rung (the inner
rung is shared with the previous section; the first section sits on the
rigid hexagon edge itself).

Node indexing groups matching nodes of all six tentacles contiguously
("lanes"), blocked by section parity: all odd-section left-rail nodes,
then odd right rails, then the even-section blocks.  Springs are emitted
accordingly in an odd/even section interleave (red-black order), so
consecutive runs in the solver's sequential sweep touch disjoint groups of
nodes.  The compiled engine turns those runs into wide elementwise array
operations that are exactly equivalent to the sequential sweep.

Developmental schedules map a generation index to morphology coefficients
(size, muscle stiffness, node mass, gravity).  The coupled muscle model
scales stiffness with the square and mass with the cube of the size
coefficient; single-characteristic schedules develop the same underlying
coefficient but apply only one of the powers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

N_TENTACLES = 6
N_SECTIONS = 8
N_NODES = 7 + N_TENTACLES * (2 * N_SECTIONS + 1)  # 109
N_SPRINGS = 12 + N_SECTIONS * 5 * N_TENTACLES + 2 * N_TENTACLES  # 264
N_MOTOR_GROUPS = 2 * N_TENTACLES
SECTIONS_PER_GROUP = 4

HEX_SIDE = 3.0
SECTION_WIDTH = 3.0
SECTION_HEIGHT_ADULT = 4.0

STIFF_RIGID = 500_000.0
STIFF_FLEX = 65_000.0
STIFF_MUSCLE_ADULT = 20_000.0
NODE_MASS_ADULT = 1.0
DAMPING_RATIO = 1.0

FRICTION_BODY = 0.5
FRICTION_TIP = 1.0

#: "Dropped just above the ground": lowest node starts this high (m).
DROP_CLEARANCE = 0.1

KIND_RIGID = 0
KIND_FLEX = 1
KIND_MUSCLE = 2

SCHEDULE_MODES = (
    "adult",
    "muscle_model",
    "size_only",
    "stiffness_only",
    "mass_only",
    "gravity_only",
)


class MorphologyCoefficients(NamedTuple):
    """Scaling factors relative to the adult morphology (adult is all ones)."""

    size: float
    stiffness: float
    mass: float
    gravity: float


ADULT = MorphologyCoefficients(1.0, 1.0, 1.0, 1.0)


def muscle_model(u: float) -> MorphologyCoefficients:
    """Coupled development: size ``u`` implies stiffness ``u^2``, mass ``u^3``.

    Doubling the size quadruples muscle strength (cross-sectional area) and
    multiplies mass by eight (volume).  Gravity is unaffected.
    """
    if u <= 0:
        raise ValueError("size coefficient must be positive")
    return MorphologyCoefficients(size=u, stiffness=u * u, mass=u * u * u, gravity=1.0)


@dataclass(frozen=True)
class DevelopmentSchedule:
    """Generation-indexed morphology program.

    The underlying coefficient grows linearly from ``u0`` at generation 1 to
    exactly 1.0 at generation ``length``, then stays there.  ``mode`` selects
    which characteristics the coefficient drives.  ``length == 1`` means the
    morphology is adult from the first generation.
    """

    mode: str
    u0: float = 1.0
    length: int = 1
    total_generations: int = 1

    def __post_init__(self):
        if self.mode not in SCHEDULE_MODES:
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if self.u0 <= 0:
            raise ValueError("u0 must be positive")
        if not 1 <= self.length <= self.total_generations:
            raise ValueError("development length must satisfy 1 <= length <= total_generations")


def schedule_from_start_value(
    mode: str, start_value: float, length: int, total_generations: int
) -> DevelopmentSchedule:
    """Build a schedule from the starting *characteristic* value.

    For ``stiffness_only`` the starting stiffness v gives ``u0 = sqrt(v)``;
    for ``mass_only`` and ``gravity_only`` the cube root is used, so the
    schedule endpoints hit v and 1 exactly.  Size-driven modes take the
    value as ``u0`` directly.
    """
    if start_value <= 0:
        raise ValueError("start value must be positive")
    if mode == "stiffness_only":
        u0 = math.sqrt(start_value)
    elif mode in ("mass_only", "gravity_only"):
        u0 = float(np.cbrt(start_value))
    elif mode in ("size_only", "muscle_model"):
        u0 = start_value
    elif mode == "adult":
        u0 = 1.0
    else:
        raise ValueError(f"unknown schedule mode {mode!r}")
    return DevelopmentSchedule(mode=mode, u0=u0, length=length, total_generations=total_generations)


def schedule_value(schedule: DevelopmentSchedule, g: int) -> MorphologyCoefficients:
    """Morphology coefficients at generation ``g`` (1-based)."""
    if not 1 <= g <= schedule.total_generations:
        raise ValueError(
            f"generation {g} outside schedule range [1, {schedule.total_generations}]"
        )
    if schedule.mode == "adult":
        return ADULT
    if g >= schedule.length:
        u = 1.0
    else:
        u = schedule.u0 + (1.0 - schedule.u0) * (g - 1) / (schedule.length - 1)
    if schedule.mode == "muscle_model":
        return muscle_model(u)
    if schedule.mode == "size_only":
        return MorphologyCoefficients(u, 1.0, 1.0, 1.0)
    if schedule.mode == "stiffness_only":
        return MorphologyCoefficients(1.0, u * u, 1.0, 1.0)
    if schedule.mode == "mass_only":
        return MorphologyCoefficients(1.0, 1.0, u * u * u, 1.0)
    if schedule.mode == "gravity_only":
        return MorphologyCoefficients(1.0, 1.0, 1.0, u * u * u)
    raise AssertionError(schedule.mode)


# ---------------------------------------------------------------------------
# Node index layout


def node_center() -> int:
    return 0


def node_vertex(t: int) -> int:
    return 1 + t


def node_rail(j: int, t: int, side: int) -> int:
    """Rail node of section ``j`` (1-based), tentacle ``t``, side 0=A/left, 1=B/right.

    Section 0 rails are the hexagon vertices: A(0,t) is vertex t and B(0,t)
    is vertex t+1 (counter-clockwise edge order).  Rail nodes are laid out
    in four parity blocks (A-odd, B-odd, A-even, B-even), six tentacle
    lanes per section.
    """
    if j == 0:
        return node_vertex(t) if side == 0 else node_vertex((t + 1) % N_TENTACLES)
    half = N_SECTIONS // 2
    if j % 2 == 1:
        block = side * half + (j - 1) // 2
    else:
        block = 2 * half + side * half + (j // 2 - 1)
    return 7 + block * N_TENTACLES + t


def node_apex(t: int) -> int:
    return 7 + N_SECTIONS * 2 * N_TENTACLES + t


HEXAGON_NODES = tuple(range(7))
VERTEX0 = node_vertex(0)


def node_slabs() -> list[tuple[int, int]]:
    """Lane slabs of the node layout: hexagon, 16 rail slabs, apexes.

    Consumed by the engine packer to build its aligned lane layout.
    """
    slabs = [(0, 7)]
    for i in range(2 * N_SECTIONS):
        slabs.append((7 + N_TENTACLES * i, N_TENTACLES))
    slabs.append((node_apex(0), N_TENTACLES))
    return slabs


@dataclass
class RobotBody:
    """Packed starfish instance: nodes, springs, and motor wiring.

    Spring arrays are in construction order, which is also the solver's
    processing order.  ``muscles`` lists the actuated spring indices in
    ascending order; ``muscle_signs`` is +1 for left muscles (commanded to
    ``(1+alpha)*h``) and -1 for right muscles (``(1-alpha)*h``).
    """

    coefficients: MorphologyCoefficients
    positions: np.ndarray        # (N_NODES, 2)
    masses: np.ndarray           # (N_NODES,)
    friction: np.ndarray         # (N_NODES,)
    spring_a: np.ndarray         # (N_SPRINGS,) int32
    spring_b: np.ndarray         # (N_SPRINGS,) int32
    rest_length: np.ndarray      # (N_SPRINGS,)
    stiffness: np.ndarray        # (N_SPRINGS,)
    damping_ratio: np.ndarray    # (N_SPRINGS,)
    kind: np.ndarray             # (N_SPRINGS,) int8
    muscles: np.ndarray          # (96,) int32 spring indices
    muscle_signs: np.ndarray     # (96,) float64
    muscle_groups: np.ndarray    # (96,) int32 motor-group id
    diagonals: np.ndarray        # (96,) int32 spring indices
    tip_springs: np.ndarray      # (12,) int32 spring indices
    section_height: float = field(default=SECTION_HEIGHT_ADULT)

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def n_springs(self) -> int:
        return self.spring_a.shape[0]

    def motor_group_members(self, group: int) -> np.ndarray:
        """Spring indices of the muscles driven by one motor group."""
        return self.muscles[self.muscle_groups == group]

    def copy(self) -> "RobotBody":
        return RobotBody(
            coefficients=self.coefficients,
            positions=self.positions.copy(),
            masses=self.masses.copy(),
            friction=self.friction.copy(),
            spring_a=self.spring_a.copy(),
            spring_b=self.spring_b.copy(),
            rest_length=self.rest_length.copy(),
            stiffness=self.stiffness.copy(),
            damping_ratio=self.damping_ratio.copy(),
            kind=self.kind.copy(),
            muscles=self.muscles.copy(),
            muscle_signs=self.muscle_signs.copy(),
            muscle_groups=self.muscle_groups.copy(),
            diagonals=self.diagonals.copy(),
            tip_springs=self.tip_springs.copy(),
            section_height=self.section_height,
        )


def diagonal_rest_length(section_height: float, width: float = SECTION_WIDTH) -> float:
    return math.sqrt(width * width + section_height * section_height)


def tip_rest_length(section_height: float, width: float = SECTION_WIDTH) -> float:
    half = 0.5 * width
    return math.sqrt(half * half + section_height * section_height)


def build_starfish(coeffs: MorphologyCoefficients = ADULT) -> RobotBody:
    """Construct the starfish at the given morphology coefficients.

    Geometry: hexagon of side 3 m; sections 3 m wide and ``4 * size`` m high
    (only heights scale with size); the tip triangle is as high as a section.
    Rigid springs (hexagon, diagonals, tips) have stiffness 500 kN/m, the
    flexible outer rungs 65 kN/m, and muscles ``20 kN/m * stiffness``.  All
    nodes weigh ``1 kg * mass``; tip-triangle nodes get friction 1.0, all
    others 0.5.  The whole robot is translated so its lowest node sits
    :data:`DROP_CLEARANCE` above the floor.

    Construction is fully deterministic, and the hexagon vertex table is
    written with exact +/- constant pairs so the built body is bitwise
    mirror-symmetric about the vertical axis.
    """
    size, stiff_c, mass_c, _gravity_c = coeffs
    if min(coeffs) <= 0:
        raise ValueError("morphology coefficients must be positive")

    h = SECTION_HEIGHT_ADULT * size
    # Vertices counter-clockwise starting at 30 degrees, so the tentacles sit
    # at multiples of 60 degrees: the dropped robot lands on the tips of its
    # two diagonally-down tentacles, a stable stance.  The table is written
    # with exact +/- constant pairs to keep the body bitwise mirror-symmetric
    # about the vertical axis.
    half_span = 1.5 * math.sqrt(3.0)
    vertices = np.array(
        [
            (half_span, 1.5),
            (0.0, 3.0),
            (-half_span, 1.5),
            (-half_span, -1.5),
            (0.0, -3.0),
            (half_span, -1.5),
        ]
    )

    positions = np.zeros((N_NODES, 2))
    positions[0] = (0.0, 0.0)
    positions[1:7] = vertices

    for t in range(N_TENTACLES):
        va = vertices[t]
        vb = vertices[(t + 1) % N_TENTACLES]
        mid = 0.5 * (va + vb)
        norm = math.sqrt(mid[0] * mid[0] + mid[1] * mid[1])
        n_hat = mid / norm
        for j in range(1, N_SECTIONS + 1):
            positions[node_rail(j, t, 0)] = va + (j * h) * n_hat
            positions[node_rail(j, t, 1)] = vb + (j * h) * n_hat
        positions[node_apex(t)] = mid + ((N_SECTIONS + 1) * h) * n_hat

    masses = np.full(N_NODES, NODE_MASS_ADULT * mass_c)
    friction = np.full(N_NODES, FRICTION_BODY)
    for t in range(N_TENTACLES):
        friction[node_rail(N_SECTIONS, t, 0)] = FRICTION_TIP
        friction[node_rail(N_SECTIONS, t, 1)] = FRICTION_TIP
        friction[node_apex(t)] = FRICTION_TIP

    spring_a = np.zeros(N_SPRINGS, dtype=np.int32)
    spring_b = np.zeros(N_SPRINGS, dtype=np.int32)
    rest = np.zeros(N_SPRINGS)
    stiffness = np.zeros(N_SPRINGS)
    kind = np.zeros(N_SPRINGS, dtype=np.int8)

    muscles, muscle_signs, muscle_groups = [], [], []
    diagonals, tip_springs = [], []

    idx = 0

    def add(a, b, rest_len, k, spring_kind):
        nonlocal idx
        spring_a[idx] = a
        spring_b[idx] = b
        rest[idx] = rest_len
        stiffness[idx] = k
        kind[idx] = spring_kind
        idx += 1
        return idx - 1

    # Hexagon: the two interleaved perimeter waves are mutually independent
    # triples, which keeps the solver's scalar chain short.
    for t in (0, 2, 4, 1, 3, 5):
        add(node_vertex(t), node_vertex((t + 1) % N_TENTACLES), HEX_SIDE, STIFF_RIGID, KIND_RIGID)
    for t in range(N_TENTACLES):
        add(node_center(), node_vertex(t), HEX_SIDE, STIFF_RIGID, KIND_RIGID)

    diag_rest = diagonal_rest_length(h)
    k_muscle = STIFF_MUSCLE_ADULT * stiff_c

    def add_diag_a(j):
        for t in range(N_TENTACLES):
            diagonals.append(add(node_rail(j - 1, t, 0), node_rail(j, t, 1), diag_rest, STIFF_RIGID, KIND_RIGID))

    def add_diag_b(j):
        for t in range(N_TENTACLES):
            diagonals.append(add(node_rail(j - 1, t, 1), node_rail(j, t, 0), diag_rest, STIFF_RIGID, KIND_RIGID))

    def add_muscle(j, side):
        group_half = 0 if j <= SECTIONS_PER_GROUP else 1
        for t in range(N_TENTACLES):
            s = add(node_rail(j - 1, t, side), node_rail(j, t, side), h, k_muscle, KIND_MUSCLE)
            muscles.append(s)
            muscle_signs.append(1.0 if side == 0 else -1.0)
            muscle_groups.append(2 * t + group_half)

    def add_rung(j):
        for t in range(N_TENTACLES):
            add(node_rail(j, t, 0), node_rail(j, t, 1), SECTION_WIDTH, STIFF_FLEX, KIND_FLEX)

    # Sections are emitted odd-first then even (red-black order), each spring
    # type over all tentacles at once, so the solver's sequential sweep runs
    # over long spans of springs with pairwise disjoint endpoints; within a
    # pass, types are sequenced so consecutive spans rarely share nodes.
    for j in (3, 5, 7):
        add_diag_a(j)
    for j in (3, 5, 7):
        add_diag_b(j)
    add_diag_a(1)
    add_diag_b(1)
    for j in (3, 5, 7):
        add_muscle(j, 0)
    for j in (3, 5, 7):
        add_muscle(j, 1)
    add_muscle(1, 0)
    add_muscle(1, 1)
    for j in (1, 3, 5, 7):
        add_rung(j)
    for j in (2, 4, 6, 8):
        add_diag_a(j)
    for j in (2, 4, 6, 8):
        add_diag_b(j)
    for j in (2, 4, 6, 8):
        add_muscle(j, 0)
    for j in (2, 4, 6, 8):
        add_muscle(j, 1)
    for j in (2, 4, 6, 8):
        add_rung(j)

    tip_rest = tip_rest_length(h)
    for t in range(N_TENTACLES):
        tip_springs.append(add(node_rail(N_SECTIONS, t, 0), node_apex(t), tip_rest, STIFF_RIGID, KIND_RIGID))
    for t in range(N_TENTACLES):
        tip_springs.append(add(node_rail(N_SECTIONS, t, 1), node_apex(t), tip_rest, STIFF_RIGID, KIND_RIGID))

    assert idx == N_SPRINGS

    positions[:, 1] += DROP_CLEARANCE - positions[:, 1].min()

    return RobotBody(
        coefficients=coeffs,
        positions=positions,
        masses=masses,
        friction=friction,
        spring_a=spring_a,
        spring_b=spring_b,
        rest_length=rest,
        stiffness=stiffness,
        damping_ratio=np.full(N_SPRINGS, DAMPING_RATIO),
        kind=kind,
        muscles=np.array(muscles, dtype=np.int32),
        muscle_signs=np.array(muscle_signs),
        muscle_groups=np.array(muscle_groups, dtype=np.int32),
        diagonals=np.array(diagonals, dtype=np.int32),
        tip_springs=np.array(tip_springs, dtype=np.int32),
        section_height=h,
    )


def apply_coefficients(body: RobotBody, coeffs: MorphologyCoefficients) -> RobotBody:
    """Body regenerated at new coefficients (between-generation development).

    Positions, rest lengths, stiffnesses and masses are re-derived from the
    canonical construction; with unchanged coefficients the result is
    identical to the input.
    """
    if body.n_nodes != N_NODES or body.n_springs != N_SPRINGS:
        raise ValueError("apply_coefficients expects a starfish body")
    return build_starfish(coeffs)


def body_to_json(body: RobotBody) -> str:
    """Canonical JSON description (nodes, springs, motor groups) for debugging."""
    groups = []
    for g in range(N_MOTOR_GROUPS):
        sel = body.muscle_groups == g
        groups.append(
            {
                "id": g,
                "muscles": [int(i) for i in body.muscles[sel]],
                "signs": [float(s) for s in body.muscle_signs[sel]],
            }
        )
    doc = {
        "coefficients": dict(body.coefficients._asdict()),
        "section_height": body.section_height,
        "nodes": [
            {
                "x": float(x),
                "y": float(y),
                "mass": float(m),
                "friction": float(f),
            }
            for (x, y), m, f in zip(body.positions, body.masses, body.friction)
        ],
        "springs": [
            {
                "a": int(a),
                "b": int(b),
                "rest_length": float(r),
                "stiffness": float(k),
                "damping_ratio": float(z),
                "kind": ("rigid", "flexible", "muscle")[int(kd)],
            }
            for a, b, r, k, z, kd in zip(
                body.spring_a, body.spring_b, body.rest_length,
                body.stiffness, body.damping_ratio, body.kind,
            )
        ],
        "motor_groups": groups,
    }
    return json.dumps(doc, indent=2)


def mirror_tentacle_permutation() -> list[int]:
    """Tentacle relabeling induced by reflecting about the vertical axis.

    Useful with mirrored gaits: reflection maps tentacle t to the returned
    index and swaps each section's left and right muscles.
    """
    # Edges at 60/120/180/240/300/0 degrees map to 120/60/0/300/240/180.
    return [1, 0, 5, 4, 3, 2]

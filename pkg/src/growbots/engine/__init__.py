"""Engine selection: compiled kernel when available, pure Python otherwise.

Both engines execute the same operations in the same order and produce
bitwise identical trajectories; the compiled one is simply fast enough for
full evolutionary runs.  Set ``GROWBOTS_ENGINE=python`` or ``=compiled`` to
force a choice (forcing ``compiled`` raises if the extension is missing).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _py

try:
    from . import _core
except ImportError:
    _core = None

_choice = os.environ.get("GROWBOTS_ENGINE", "").strip().lower()
if _choice == "python":
    _impl = _py
elif _choice == "compiled":
    if _core is None:
        raise ImportError("GROWBOTS_ENGINE=compiled but growbots.engine._core is not built")
    _impl = _core
elif _choice == "":
    _impl = _core if _core is not None else _py
else:
    raise ValueError(f"GROWBOTS_ENGINE must be 'compiled' or 'python', got {_choice!r}")


def active_engine() -> str:
    """Name of the engine in use: 'compiled' or 'python'."""
    return "compiled" if _impl is _core else "python"


def compiled_available() -> bool:
    return _core is not None


def get_impl(name: str | None = None):
    if name is None:
        return _impl
    if name == "python":
        return _py
    if name == "compiled":
        if _core is None:
            raise ValueError("compiled engine not available")
        return _core
    raise ValueError(f"unknown engine {name!r}")


#: Lane width the padded layout aligns slabs to (one AVX-512 vector of doubles).
LANE_PAD = 8

#: Vertical position of ghost lane nodes; far above any physics, never lands
#: within any simulated horizon.
_GHOST_Y = 1e6


@dataclass
class PackedSystem:
    """Flat-array form of a spring-mass world, as the kernels consume it.

    Scratch arrays (``nx``/``ny``/``r_acc`` per spring, contact arrays per
    node) are owned here so repeated stepping allocates nothing.  When the
    system was packed with slab padding, ``real_nodes``/``real_springs``
    map original indices to padded ones (identity otherwise).
    """

    px: np.ndarray
    py: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    inv_m: np.ndarray
    mass: np.ndarray
    fric: np.ndarray
    ia: np.ndarray
    ib: np.ndarray
    rest: np.ndarray
    bias_factor: np.ndarray
    g_imt: np.ndarray
    c_a: np.ndarray
    c_b: np.ndarray
    nx: np.ndarray
    ny: np.ndarray
    r_acc: np.ndarray
    plan_start: np.ndarray
    plan_count: np.ndarray
    plan_lane: np.ndarray
    tv: np.ndarray
    m_eff: np.ndarray
    mu_eff: np.ndarray
    lam_n: np.ndarray
    lam_t: np.ndarray
    real_nodes: np.ndarray
    real_springs: np.ndarray
    dt: float
    gravity: float
    restitution: float
    floor_enabled: bool
    slop: float
    bounce_speed: float
    fric_speed: float
    dyn_fric_factor: float
    baumgarte: float
    iterations: int

    def node_positions(self) -> np.ndarray:
        """(n, 2) positions of the real nodes, in original order."""
        return np.stack([self.px[self.real_nodes], self.py[self.real_nodes]], axis=1)

    def node_velocities(self) -> np.ndarray:
        return np.stack([self.vx[self.real_nodes], self.vy[self.real_nodes]], axis=1)


def _aligned_zeros(n: int, align: int = 64) -> np.ndarray:
    """Zeroed float64 array whose data pointer is ``align``-byte aligned."""
    raw = np.zeros(n + align // 8, dtype=np.float64)
    offset = (-raw.ctypes.data) % align // 8
    return raw[offset : offset + n]


def build_plan(ia: np.ndarray, ib: np.ndarray):
    """Split the spring order into scalar and lane segments.

    A lane segment is a run where both endpoint index sequences are
    consecutive (``ia[s+u] == ia[s]+u``) and the two index ranges do not
    overlap, so all springs in the run touch pairwise distinct nodes and an
    elementwise sweep equals the sequential one.  Lane segments are kept to
    multiples of :data:`LANE_PAD` (the kernel sweeps them in fixed 8-wide
    chunks); remainders and short runs stay scalar.
    """
    m = len(ia)
    starts, counts, lanes = [], [], []
    scalar_begin = None

    def flush_scalar(end):
        nonlocal scalar_begin
        if scalar_begin is not None:
            starts.append(scalar_begin)
            counts.append(end - scalar_begin)
            lanes.append(0)
            scalar_begin = None

    s = 0
    while s < m:
        run = 1
        while (
            s + run < m
            and ia[s + run] == ia[s] + run
            and ib[s + run] == ib[s] + run
        ):
            run += 1
        lane_run = run - run % LANE_PAD
        if lane_run >= LANE_PAD and abs(int(ia[s]) - int(ib[s])) >= run:
            flush_scalar(s)
            starts.append(s)
            counts.append(lane_run)
            lanes.append(1)
            if lane_run < run:
                scalar_begin = s + lane_run
        else:
            if scalar_begin is None:
                scalar_begin = s
        s += run
    flush_scalar(m)
    return (
        np.array(starts, dtype=np.int32),
        np.array(counts, dtype=np.int32),
        np.array(lanes, dtype=np.int32),
    )


def _pad_layout(slabs, n: int):
    """Aligned padded layout for the given node slabs.

    Returns (node_map, ghost_first, slab_of, n_padded): each slab of real
    nodes is placed at a LANE_PAD-aligned base with at least two trailing
    ghost lanes, so six-lane spring blocks extend to full vector width.
    """
    starts = [s for s, _ in slabs]
    counts = [c for _, c in slabs]
    if starts[0] != 0 or any(
        starts[i + 1] != starts[i] + counts[i] for i in range(len(slabs) - 1)
    ) or starts[-1] + counts[-1] != n:
        raise ValueError("slabs must partition the node range in order")
    node_map = np.empty(n, dtype=np.int32)
    slab_of = np.empty(n, dtype=np.int32)
    ghost_first = []
    cursor = 0
    for si, (start, count) in enumerate(slabs):
        node_map[start : start + count] = cursor + np.arange(count, dtype=np.int32)
        slab_of[start : start + count] = si
        ghost_first.append(cursor + count)
        cursor += -((count + 2) // -LANE_PAD) * LANE_PAD
    return node_map, ghost_first, slab_of, cursor


def _pad_springs(spring_a, spring_b, node_map, ghost_first, slab_of):
    """Remap spring endpoints into the padded layout, inserting ghost lanes.

    Six-spring blocks with slab-affine endpoints get two trailing ghost
    springs (between ghost lanes, geometrically degenerate, exact no-ops)
    so the solver sweeps full 8-wide lanes; filler ghosts keep each lane
    run LANE_PAD-aligned in the spring arrays.  Real springs keep their
    relative order, so the sequential solve is unchanged.
    """
    m = len(spring_a)
    pa, pb, real_idx = [], [], []

    def ghost_pair(slab, k):
        return int(ghost_first[slab] + k)

    def emit_filler(block_ia_slab):
        while len(pa) % LANE_PAD != 0:
            pa.append(ghost_pair(block_ia_slab, 0))
            pb.append(ghost_pair(block_ia_slab, 1))

    s = 0
    while s < m:
        is_block = s + 6 <= m
        if is_block:
            for u in range(1, 6):
                if spring_a[s + u] != spring_a[s] + u or spring_b[s + u] != spring_b[s] + u:
                    is_block = False
                    break
        if is_block:
            sa, sb = int(slab_of[spring_a[s]]), int(slab_of[spring_b[s]])
            if sa == sb or slab_of[spring_a[s] + 5] != sa or slab_of[spring_b[s] + 5] != sb:
                is_block = False
            else:
                # ghost lanes must continue the padded affine run
                ga = int(node_map[spring_a[s]]) + 6
                gb = int(node_map[spring_b[s]]) + 6
                if ga != ghost_pair(sa, 0) or gb != ghost_pair(sb, 0):
                    is_block = False
        if is_block:
            emit_filler(int(slab_of[spring_a[s]]))
            for u in range(6):
                real_idx.append(len(pa))
                pa.append(int(node_map[spring_a[s + u]]))
                pb.append(int(node_map[spring_b[s + u]]))
            for k in range(2):
                pa.append(ghost_pair(int(slab_of[spring_a[s]]), k))
                pb.append(ghost_pair(int(slab_of[spring_b[s]]), k))
            s += 6
        else:
            real_idx.append(len(pa))
            pa.append(int(node_map[spring_a[s]]))
            pb.append(int(node_map[spring_b[s]]))
            s += 1
    return (
        np.array(pa, dtype=np.int32),
        np.array(pb, dtype=np.int32),
        np.array(real_idx, dtype=np.int32),
    )


def pack_system(
    positions: np.ndarray,
    velocities: np.ndarray,
    masses: np.ndarray,
    friction: np.ndarray,
    spring_a: np.ndarray,
    spring_b: np.ndarray,
    rest_length: np.ndarray,
    stiffness: np.ndarray,
    damping_ratio: np.ndarray,
    dt: float,
    gravity: float,
    restitution: float,
    floor_enabled: bool = True,
    slop: float = 1e-3,
    bounce_speed: float = 0.01,
    fric_speed: float = 1e-3,
    dyn_fric_factor: float = 0.5,
    baumgarte: float = 0.2,
    iterations: int = 10,
    slabs=None,
) -> PackedSystem:
    """Precompute per-spring solve constants and scratch for the kernels.

    Each spring contributes a velocity constraint with softness
    ``1/(dt*k + c)`` and bias factor ``(dt*k/(dt*k + c))/dt``; damping is
    ``c = 2*zeta*sqrt(m_r*k)`` from the endpoint reduced mass.  The solver
    consumes these folded into per-spring constants: ``g_imt`` (softness
    impulse term times effective mass) and ``c_a``/``c_b`` (impulse-to-
    velocity factors per endpoint).

    ``slabs`` optionally names the node layout's lane slabs (list of
    ``(start, count)`` partitioning the nodes).  When given, nodes and
    six-lane spring blocks are padded to aligned 8-wide lanes with inert
    ghost entries: pure engine layout, identical dynamics.
    """
    n = len(masses)
    m = len(spring_a)
    if np.any(masses <= 0):
        raise ValueError("masses must be positive")
    if np.any(stiffness <= 0):
        raise ValueError("stiffness must be positive")
    if np.any(rest_length <= 0):
        raise ValueError("rest lengths must be positive")
    if dt <= 0:
        raise ValueError("dt must be positive")

    if slabs is not None:
        node_map, ghost_first, slab_of, n_pad = _pad_layout(slabs, n)
        ia, ib, real_springs = _pad_springs(spring_a, spring_b, node_map, ghost_first, slab_of)
        real_nodes = node_map
    else:
        n_pad = n
        real_nodes = np.arange(n, dtype=np.int32)
        real_springs = np.arange(m, dtype=np.int32)
        ia = np.ascontiguousarray(spring_a, dtype=np.int32)
        ib = np.ascontiguousarray(spring_b, dtype=np.int32)

    m_pad = len(ia)

    px = _aligned_zeros(n_pad)
    py = _aligned_zeros(n_pad)
    vx = _aligned_zeros(n_pad)
    vy = _aligned_zeros(n_pad)
    mass_arr = np.ones(n_pad)
    fric_arr = np.zeros(n_pad)
    py[:] = _GHOST_Y
    px[real_nodes] = positions[:, 0]
    py[real_nodes] = positions[:, 1]
    vx[real_nodes] = velocities[:, 0]
    vy[real_nodes] = velocities[:, 1]
    mass_arr[real_nodes] = masses
    fric_arr[real_nodes] = friction
    inv_m = 1.0 / mass_arr

    rest = np.ones(m_pad)
    k_arr = np.ones(m_pad)
    zeta = np.ones(m_pad)
    rest[real_springs] = rest_length
    k_arr[real_springs] = stiffness
    zeta[real_springs] = damping_ratio

    bias_factor = _aligned_zeros(m_pad)
    g_imt = _aligned_zeros(m_pad)
    c_a = _aligned_zeros(m_pad)
    c_b = _aligned_zeros(m_pad)
    for s in range(m_pad):
        a, b = int(ia[s]), int(ib[s])
        k = float(k_arr[s])
        m_r = 1.0 / (inv_m[a] + inv_m[b])
        c = 2.0 * float(zeta[s]) * math.sqrt(m_r * k)
        hk = dt * k
        softness = 1.0 / (hk + c)
        bias_factor[s] = hk * softness / dt
        gamma = softness / dt
        imt = 1.0 / (inv_m[a] + inv_m[b] + gamma)
        g_imt[s] = gamma * imt
        c_a[s] = imt * inv_m[a]
        c_b[s] = imt * inv_m[b]

    rest_arr = _aligned_zeros(m_pad)
    rest_arr[:] = rest

    plan_start, plan_count, plan_lane = build_plan(ia, ib)

    return PackedSystem(
        px=px,
        py=py,
        vx=vx,
        vy=vy,
        inv_m=inv_m,
        mass=mass_arr,
        fric=fric_arr,
        ia=ia,
        ib=ib,
        rest=rest_arr,
        bias_factor=bias_factor,
        g_imt=g_imt,
        c_a=c_a,
        c_b=c_b,
        nx=_aligned_zeros(m_pad),
        ny=_aligned_zeros(m_pad),
        r_acc=_aligned_zeros(m_pad),
        plan_start=plan_start,
        plan_count=plan_count,
        plan_lane=plan_lane,
        tv=_aligned_zeros(n_pad),
        m_eff=_aligned_zeros(n_pad),
        mu_eff=_aligned_zeros(n_pad),
        lam_n=_aligned_zeros(n_pad),
        lam_t=_aligned_zeros(n_pad),
        real_nodes=real_nodes,
        real_springs=real_springs,
        dt=float(dt),
        gravity=float(gravity),
        restitution=float(restitution),
        floor_enabled=bool(floor_enabled),
        slop=float(slop),
        bounce_speed=float(bounce_speed),
        fric_speed=float(fric_speed),
        dyn_fric_factor=float(dyn_fric_factor),
        baumgarte=float(baumgarte),
        iterations=int(iterations),
    )


@dataclass
class LocomotionJob:
    """Inputs of one locomotion evaluation, consumed by the kernels."""

    system: PackedSystem
    muscle_idx: np.ndarray
    muscle_sign: np.ndarray
    muscle_group: np.ndarray
    n_groups: int
    phase: np.ndarray
    amp: np.ndarray
    settle_time: float
    cmd_clamp: float
    noise: np.ndarray | None
    diag_idx: np.ndarray
    tip_idx: np.ndarray
    width: float
    height_adult: float
    evo_devo: bool
    size_fixed: float
    ed_start: float = 1.0
    ed_t0: float = 0.0
    ed_t1: float = 1.0
    hex_first: int = 0
    hex_count: int = 7
    vertex_node: int = 1
    sample_every: int = 0
    samples: np.ndarray | None = field(default=None)


def step_n(system: PackedSystem, n_steps: int, impl=None) -> int:
    """Advance the system; returns diverged step index or -1."""
    return (impl or _impl).step_n(system, n_steps)


def run_locomotion(job: LocomotionJob, n_steps: int, t0: float = 0.0, impl=None):
    """Run an evaluation; returns (diverged_step, x_start, x_end, rotation)."""
    return (impl or _impl).run_locomotion(job, n_steps, t0)

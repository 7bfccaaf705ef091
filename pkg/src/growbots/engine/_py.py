"""Pure-Python engine, the bit-exact twin of the compiled kernel.

Every arithmetic expression here mirrors _kernel.c with the same operand
order, so CPython float math (IEEE doubles, no FMA) produces bitwise
identical trajectories.  This engine exists as the portable fallback and
as the readable reference; it is orders of magnitude slower, see
benchmarks/bench_engines.py.
"""

from __future__ import annotations

import math

_PI = math.pi
_TWO_PI = 2.0 * math.pi


class _State:
    """Node/spring state unpacked into plain lists for the hot loops."""

    def __init__(self, s):
        self.s = s
        self.px = s.px.tolist()
        self.py = s.py.tolist()
        self.vx = s.vx.tolist()
        self.vy = s.vy.tolist()
        self.inv_m = s.inv_m.tolist()
        self.mass = s.mass.tolist()
        self.fric = s.fric.tolist()
        self.ia = s.ia.tolist()
        self.ib = s.ib.tolist()
        self.rest = s.rest.tolist()
        self.bias_factor = s.bias_factor.tolist()
        self.g_imt = s.g_imt.tolist()
        self.c_a = s.c_a.tolist()
        self.c_b = s.c_b.tolist()
        self.nx = s.nx.tolist()
        self.ny = s.ny.tolist()
        self.r_acc = s.r_acc.tolist()
        self.tv = s.tv.tolist()
        self.m_eff = s.m_eff.tolist()
        self.mu_eff = s.mu_eff.tolist()
        self.lam_n = s.lam_n.tolist()
        self.lam_t = s.lam_t.tolist()
        self.segments = list(zip(s.plan_start.tolist(), s.plan_count.tolist(), s.plan_lane.tolist()))

    def write_back(self):
        s = self.s
        s.px[:] = self.px
        s.py[:] = self.py
        s.vx[:] = self.vx
        s.vy[:] = self.vy
        s.rest[:] = self.rest
        s.nx[:] = self.nx
        s.ny[:] = self.ny
        s.r_acc[:] = self.r_acc
        s.tv[:] = self.tv
        s.m_eff[:] = self.m_eff
        s.mu_eff[:] = self.mu_eff
        s.lam_n[:] = self.lam_n
        s.lam_t[:] = self.lam_t


def _contact_capture(st, p):
    n = len(st.px)
    if not p.floor_enabled:
        for i in range(n):
            st.tv[i] = 0.0
            st.m_eff[i] = 0.0
            st.mu_eff[i] = 0.0
            st.lam_n[i] = 0.0
            st.lam_t[i] = 0.0
        return
    slop, dt = p.slop, p.dt
    baumgarte, restitution = p.baumgarte, p.restitution
    bounce_speed, fric_speed, dyn = p.bounce_speed, p.fric_speed, p.dyn_fric_factor
    py, vx, vy = st.py, st.vx, st.vy
    for i in range(n):
        appr = vy[i]
        pen = -py[i] - slop
        baum = (baumgarte / dt) * pen if pen > 0.0 else 0.0
        bounce = -restitution * appr if appr < -bounce_speed else 0.0
        target = bounce if bounce > baum else baum
        active = py[i] <= 0.0
        moving = dyn if (vx[i] > fric_speed or vx[i] < -fric_speed) else 1.0
        st.tv[i] = target if active else 0.0
        st.m_eff[i] = st.mass[i] if active else 0.0
        st.mu_eff[i] = moving * st.fric[i] if active else 0.0
        st.lam_n[i] = 0.0
        st.lam_t[i] = 0.0


def _spring_prepare(st):
    px, py = st.px, st.py
    ia, ib, rest, bf = st.ia, st.ib, st.rest, st.bias_factor
    nx, ny, r_acc = st.nx, st.ny, st.r_acc
    for s0, cnt, _lane in st.segments:
        for s in range(s0, s0 + cnt):
            dx = px[ib[s]] - px[ia[s]]
            dy = py[ib[s]] - py[ia[s]]
            len2 = dx * dx + dy * dy
            inv = 1.0 / math.sqrt(len2) if len2 > 0.0 else 0.0
            length = len2 * inv
            nx[s] = dx * inv
            ny[s] = dy * inv
            r_acc[s] = bf[s] * (length - rest[s])


def _spring_sweep(st):
    vx, vy = st.vx, st.vy
    ia, ib = st.ia, st.ib
    nx, ny, r_acc = st.nx, st.ny, st.r_acc
    g_imt, c_a, c_b = st.g_imt, st.c_a, st.c_b
    # Lane segments touch pairwise-distinct nodes, so the plain sequential
    # sweep below is identical to the compiled engine's elementwise form.
    for s0, cnt, _lane in st.segments:
        for s in range(s0, s0 + cnt):
            a = ia[s]
            b = ib[s]
            nxs = nx[s]
            nys = ny[s]
            vn = (vx[b] - vx[a]) * nxs + (vy[b] - vy[a]) * nys
            w = vn + r_acc[s]
            r_acc[s] -= w * g_imt[s]
            wa = w * c_a[s]
            wb = w * c_b[s]
            vx[a] += wa * nxs
            vy[a] += wa * nys
            vx[b] -= wb * nxs
            vy[b] -= wb * nys


def _contact_sweep(st):
    vx, vy = st.vx, st.vy
    tv, m_eff, mu, inv_m = st.tv, st.m_eff, st.mu_eff, st.inv_m
    lam_n, lam_t = st.lam_n, st.lam_t
    for i in range(len(vx)):
        dv = vy[i] - tv[i]
        dl = -dv * m_eff[i]
        ln = lam_n[i] + dl
        ln = ln if ln > 0.0 else 0.0
        vy[i] += (ln - lam_n[i]) * inv_m[i]
        lam_n[i] = ln

        dlt = -vx[i] * m_eff[i]
        cap = mu[i] * ln
        lt = lam_t[i] + dlt
        lt = cap if lt > cap else lt
        lt = -cap if lt < -cap else lt
        vx[i] += (lt - lam_t[i]) * inv_m[i]
        lam_t[i] = lt


def _integrate(st, p):
    dt, slop = p.dt, p.slop
    px, py, vx, vy = st.px, st.py, st.vx, st.vy
    if p.floor_enabled:
        for i in range(len(px)):
            px[i] += vx[i] * dt
            y = py[i] + vy[i] * dt
            py[i] = -slop if y < -slop else y
    else:
        for i in range(len(px)):
            px[i] += vx[i] * dt
            py[i] += vy[i] * dt


#: Any coordinate or velocity beyond this magnitude (or NaN) counts as a
#: diverged state; bound comparisons are order-independent, so the compiled
#: engine can vectorize the same check.
_STATE_BOUND = 1e300


def _state_is_finite(st):
    px, py, vx, vy = st.px, st.py, st.vx, st.vy
    for i in range(len(px)):
        if not (
            -_STATE_BOUND <= px[i] <= _STATE_BOUND
            and -_STATE_BOUND <= py[i] <= _STATE_BOUND
            and -_STATE_BOUND <= vx[i] <= _STATE_BOUND
            and -_STATE_BOUND <= vy[i] <= _STATE_BOUND
        ):
            return False
    return True


def _step_once(st, p):
    _contact_capture(st, p)
    dv = p.gravity * p.dt
    vy = st.vy
    for i in range(len(vy)):
        vy[i] += dv
    _spring_prepare(st)
    for _ in range(p.iterations):
        _spring_sweep(st)
        _contact_sweep(st)
    _integrate(st, p)


def step_n(s, n_steps: int) -> int:
    """Advance a PackedSystem; returns diverged step index or -1."""
    st = _State(s)
    result = -1
    for step in range(n_steps):
        _step_once(st, s)
        if not _state_is_finite(st):
            result = step
            break
    st.write_back()
    return result


def _growth_size(job, t):
    if not job.evo_devo:
        return job.size_fixed
    if t < job.ed_t0:
        return job.ed_start
    if t >= job.ed_t1:
        return 1.0
    return job.ed_start + (1.0 - job.ed_start) * (t - job.ed_t0) / (job.ed_t1 - job.ed_t0)


def _hex_centroid(st, job):
    sx = 0.0
    sy = 0.0
    for i in range(job.hex_first, job.hex_first + job.hex_count):
        sx += st.px[i]
        sy += st.py[i]
    return sx / job.hex_count, sy / job.hex_count


def _body_angle(st, job):
    cx, cy = _hex_centroid(st, job)
    return math.atan2(st.py[job.vertex_node] - cy, st.px[job.vertex_node] - cx)


def _write_sample(st, job, row, t):
    out = job.samples[row]
    out[0] = t
    out[1::2] = st.px
    out[2::2] = st.py


def run_locomotion(job, n_steps: int, t0: float = 0.0):
    """Run a LocomotionJob; returns (diverged_step, x_start, x_end, rotation)."""
    s = job.system
    st = _State(s)
    if job.n_groups > 64:
        raise ValueError("kernel supports at most 64 motor groups")

    muscle_idx = job.muscle_idx.tolist()
    muscle_sign = job.muscle_sign.tolist()
    muscle_group = job.muscle_group.tolist()
    phase = job.phase.tolist()
    amp = job.amp.tolist()
    diag_idx = job.diag_idx.tolist()
    tip_idx = job.tip_idx.tolist()
    noise = job.noise
    clamp = job.cmd_clamp
    width = job.width
    height_adult = job.height_adult
    dt = s.dt
    rest = st.rest

    cx, _cy = _hex_centroid(st, job)
    x_start = cx
    x_end = cx
    rotation = 0.0
    prev_angle = _body_angle(st, job)

    row = 0
    if job.samples is not None and job.sample_every > 0:
        _write_sample(st, job, row, t0)
        row += 1

    diverged = -1
    for step in range(n_steps):
        t = t0 + step * dt

        size = _growth_size(job, t)
        h = height_adult * size
        if diag_idx:
            diag_rest = math.sqrt(width * width + h * h)
            for d in diag_idx:
                rest[d] = diag_rest
        if tip_idx:
            halfw = 0.5 * width
            tip_rest = math.sqrt(halfw * halfw + h * h)
            for d in tip_idx:
                rest[d] = tip_rest
        t_act = t - job.settle_time
        if t_act >= 0.0:
            alpha_group = [amp[g] * math.sin(t_act + phase[g]) for g in range(job.n_groups)]
        else:
            alpha_group = [0.0] * job.n_groups
        noise_row = noise[step].tolist() if noise is not None else None
        for m in range(len(muscle_idx)):
            a = alpha_group[muscle_group[m]]
            if noise_row is not None:
                a += noise_row[m]
            if a > clamp:
                a = clamp
            elif a < -clamp:
                a = -clamp
            rest[muscle_idx[m]] = h * (1.0 + muscle_sign[m] * a)

        _step_once(st, s)

        angle = _body_angle(st, job)
        delta = angle - prev_angle
        if delta > _PI:
            delta -= _TWO_PI
        elif delta < -_PI:
            delta += _TWO_PI
        rotation += delta
        prev_angle = angle

        if not _state_is_finite(st):
            diverged = step
            break

        if job.samples is not None and job.sample_every > 0 and (step + 1) % job.sample_every == 0:
            _write_sample(st, job, row, t0 + (step + 1) * dt)
            row += 1

    if diverged < 0:
        cx, _cy = _hex_centroid(st, job)
        x_end = cx

    st.write_back()
    return diverged, x_start, x_end, rotation

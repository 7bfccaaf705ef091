# cython: language_level=3, boundscheck=False, wraparound=False
"""Cython bridge to the compiled simulation kernel (_kernel.c)."""

from libc.stdlib cimport malloc, free

cdef extern from "_kernel.h":
    ctypedef struct gb_segment:
        int start
        int count
        int lane

    ctypedef struct gb_system:
        int n_nodes
        double *px
        double *py
        double *vx
        double *vy
        const double *inv_m
        const double *mass
        const double *fric
        int n_springs
        const int *ia
        const int *ib
        double *rest
        const double *bias_factor
        const double *g_imt
        const double *c_a
        const double *c_b
        double *nx
        double *ny
        double *r_acc
        const gb_segment *plan
        int n_segments
        double *tv
        double *m_eff
        double *mu_eff
        double *lam_n
        double *lam_t
        double dt
        double gravity_y
        double restitution
        double slop
        double bounce_speed
        double fric_speed
        double dyn_fric_factor
        double baumgarte
        int iterations
        int floor_enabled

    int gb_step_n(gb_system *sys, int n_steps) nogil

    ctypedef struct gb_locomotion:
        gb_system *sys
        int n_muscles
        const int *muscle_idx
        const double *muscle_sign
        const int *muscle_group
        int n_groups
        const double *phase
        const double *amp
        double settle_time
        double cmd_clamp
        const double *noise
        int n_diag
        const int *diag_idx
        int n_tip
        const int *tip_idx
        double width
        double height_adult
        int evo_devo
        double size_fixed
        double ed_start
        double ed_t0
        double ed_t1
        int hex_first
        int hex_count
        int vertex_node
        int sample_every
        double *samples
        double x_start
        double x_end
        double rotation

    int gb_run_locomotion(gb_locomotion *job, int n_steps, double t0) nogil


cdef int _fill_system(object s, gb_system *c,
                      double[::1] px, double[::1] py, double[::1] vx, double[::1] vy,
                      double[::1] inv_m, double[::1] mass, double[::1] fric,
                      int[::1] ia, int[::1] ib, double[::1] rest,
                      double[::1] bias_factor, double[::1] g_imt,
                      double[::1] c_a, double[::1] c_b,
                      double[::1] nx, double[::1] ny, double[::1] r_acc,
                      double[::1] tv, double[::1] m_eff, double[::1] mu_eff,
                      double[::1] lam_n, double[::1] lam_t) except -1:
    c.n_nodes = px.shape[0]
    c.px = &px[0]; c.py = &py[0]; c.vx = &vx[0]; c.vy = &vy[0]
    c.inv_m = &inv_m[0]; c.mass = &mass[0]; c.fric = &fric[0]
    c.n_springs = ia.shape[0]
    if c.n_springs > 0:
        c.ia = &ia[0]; c.ib = &ib[0]; c.rest = &rest[0]
        c.bias_factor = &bias_factor[0]; c.g_imt = &g_imt[0]
        c.c_a = &c_a[0]; c.c_b = &c_b[0]
        c.nx = &nx[0]; c.ny = &ny[0]; c.r_acc = &r_acc[0]
    else:
        c.ia = NULL; c.ib = NULL; c.rest = NULL
        c.bias_factor = NULL; c.g_imt = NULL; c.c_a = NULL; c.c_b = NULL
        c.nx = NULL; c.ny = NULL; c.r_acc = NULL
    c.tv = &tv[0]; c.m_eff = &m_eff[0]; c.mu_eff = &mu_eff[0]
    c.lam_n = &lam_n[0]; c.lam_t = &lam_t[0]
    c.dt = s.dt
    c.gravity_y = s.gravity
    c.restitution = s.restitution
    c.slop = s.slop
    c.bounce_speed = s.bounce_speed
    c.fric_speed = s.fric_speed
    c.dyn_fric_factor = s.dyn_fric_factor
    c.baumgarte = s.baumgarte
    c.iterations = s.iterations
    c.floor_enabled = 1 if s.floor_enabled else 0
    return 0


cdef gb_segment *_make_plan(int[::1] start, int[::1] count, int[::1] lane) except NULL:
    cdef int n = start.shape[0]
    cdef gb_segment *plan = <gb_segment *>malloc(n * sizeof(gb_segment))
    if plan == NULL:
        raise MemoryError()
    cdef int i
    for i in range(n):
        plan[i].start = start[i]
        plan[i].count = count[i]
        plan[i].lane = lane[i]
    return plan


def step_n(object s, int n_steps):
    """Advance a PackedSystem; returns diverged step index or -1."""
    cdef gb_system csys
    cdef double[::1] px = s.px, py = s.py, vx = s.vx, vy = s.vy
    cdef double[::1] inv_m = s.inv_m, mass = s.mass, fric = s.fric
    cdef int[::1] ia = s.ia, ib = s.ib
    cdef double[::1] rest = s.rest
    cdef double[::1] bias_factor = s.bias_factor, g_imt = s.g_imt
    cdef double[::1] c_a = s.c_a, c_b = s.c_b
    cdef double[::1] nx = s.nx, ny = s.ny, r_acc = s.r_acc
    cdef double[::1] tv = s.tv, m_eff = s.m_eff, mu_eff = s.mu_eff
    cdef double[::1] lam_n = s.lam_n, lam_t = s.lam_t
    cdef int[::1] seg_start = s.plan_start, seg_count = s.plan_count, seg_lane = s.plan_lane

    _fill_system(s, &csys, px, py, vx, vy, inv_m, mass, fric, ia, ib, rest,
                 bias_factor, g_imt, c_a, c_b, nx, ny, r_acc,
                 tv, m_eff, mu_eff, lam_n, lam_t)
    cdef gb_segment *plan = _make_plan(seg_start, seg_count, seg_lane)
    csys.plan = plan
    csys.n_segments = seg_start.shape[0]

    cdef int result
    try:
        with nogil:
            result = gb_step_n(&csys, n_steps)
    finally:
        free(plan)
    return result


def run_locomotion(object job, int n_steps, double t0=0.0):
    """Run a LocomotionJob; returns (diverged_step, x_start, x_end, rotation)."""
    s = job.system
    cdef gb_system csys
    cdef double[::1] px = s.px, py = s.py, vx = s.vx, vy = s.vy
    cdef double[::1] inv_m = s.inv_m, mass = s.mass, fric = s.fric
    cdef int[::1] ia = s.ia, ib = s.ib
    cdef double[::1] rest = s.rest
    cdef double[::1] bias_factor = s.bias_factor, g_imt = s.g_imt
    cdef double[::1] c_a = s.c_a, c_b = s.c_b
    cdef double[::1] nx = s.nx, ny = s.ny, r_acc = s.r_acc
    cdef double[::1] tv = s.tv, m_eff = s.m_eff, mu_eff = s.mu_eff
    cdef double[::1] lam_n = s.lam_n, lam_t = s.lam_t
    cdef int[::1] seg_start = s.plan_start, seg_count = s.plan_count, seg_lane = s.plan_lane

    _fill_system(s, &csys, px, py, vx, vy, inv_m, mass, fric, ia, ib, rest,
                 bias_factor, g_imt, c_a, c_b, nx, ny, r_acc,
                 tv, m_eff, mu_eff, lam_n, lam_t)
    cdef gb_segment *plan = _make_plan(seg_start, seg_count, seg_lane)
    csys.plan = plan
    csys.n_segments = seg_start.shape[0]

    cdef gb_locomotion cjob
    cjob.sys = &csys

    cdef int[::1] muscle_idx = job.muscle_idx
    cdef double[::1] muscle_sign = job.muscle_sign
    cdef int[::1] muscle_group = job.muscle_group
    cdef double[::1] phase = job.phase, amp = job.amp
    cdef int[::1] diag_idx = job.diag_idx, tip_idx = job.tip_idx
    cdef double[:, ::1] noise
    cdef double[:, ::1] samples

    if job.n_groups > 64:
        raise ValueError("kernel supports at most 64 motor groups")

    cjob.n_muscles = muscle_idx.shape[0]
    cjob.muscle_idx = &muscle_idx[0] if muscle_idx.shape[0] else NULL
    cjob.muscle_sign = &muscle_sign[0] if muscle_sign.shape[0] else NULL
    cjob.muscle_group = &muscle_group[0] if muscle_group.shape[0] else NULL
    cjob.n_groups = job.n_groups
    cjob.phase = &phase[0]
    cjob.amp = &amp[0]
    cjob.settle_time = job.settle_time
    cjob.cmd_clamp = job.cmd_clamp
    if job.noise is not None:
        noise = job.noise
        if noise.shape[0] < n_steps or noise.shape[1] != cjob.n_muscles:
            raise ValueError("noise array shape mismatch")
        cjob.noise = &noise[0, 0]
    else:
        cjob.noise = NULL
    cjob.n_diag = diag_idx.shape[0]
    cjob.diag_idx = &diag_idx[0] if diag_idx.shape[0] else NULL
    cjob.n_tip = tip_idx.shape[0]
    cjob.tip_idx = &tip_idx[0] if tip_idx.shape[0] else NULL
    cjob.width = job.width
    cjob.height_adult = job.height_adult
    cjob.evo_devo = 1 if job.evo_devo else 0
    cjob.size_fixed = job.size_fixed
    cjob.ed_start = job.ed_start
    cjob.ed_t0 = job.ed_t0
    cjob.ed_t1 = job.ed_t1
    cjob.hex_first = job.hex_first
    cjob.hex_count = job.hex_count
    cjob.vertex_node = job.vertex_node
    if job.samples is not None:
        samples = job.samples
        cjob.sample_every = job.sample_every
        expected_rows = n_steps // job.sample_every + 1
        if samples.shape[0] < expected_rows or samples.shape[1] != 1 + 2 * csys.n_nodes:
            raise ValueError("samples buffer shape mismatch")
        cjob.samples = &samples[0, 0]
    else:
        cjob.sample_every = 0
        cjob.samples = NULL

    cdef int result
    try:
        with nogil:
            result = gb_run_locomotion(&cjob, n_steps, t0)
    finally:
        free(plan)
    return result, cjob.x_start, cjob.x_end, cjob.rotation

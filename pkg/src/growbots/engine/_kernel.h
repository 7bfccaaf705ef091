#ifndef GROWBOTS_KERNEL_H
#define GROWBOTS_KERNEL_H

#include <stdint.h>

/* Packed spring-mass system.  All float arrays are contiguous doubles.
 *
 * Springs are processed in array order by a sequential velocity-level
 * impulse solver.  The solve plan splits that order into segments: "lane"
 * segments are runs of springs whose endpoints are consecutive node
 * indices (ia[s+u] == ia[s]+u, same for ib) and therefore touch pairwise
 * distinct nodes, so the sweep over the segment can be executed as
 * elementwise array operations with results identical to the sequential
 * scalar sweep; everything else runs scalar.
 */
typedef struct {
    int start;   /* first spring index of the segment */
    int count;   /* number of springs */
    int lane;    /* 1: affine endpoint slabs, 0: scalar */
} gb_segment;

typedef struct {
    /* nodes */
    int n_nodes;
    double *px, *py, *vx, *vy;
    const double *inv_m, *mass, *fric;
    /* springs (solver order) */
    int n_springs;
    const int32_t *ia, *ib;
    double *rest;                               /* mutated by actuation */
    const double *bias_factor, *g_imt, *c_a, *c_b;
    double *nx, *ny, *r_acc;                    /* per-step scratch */
    /* solve plan */
    const gb_segment *plan;
    int n_segments;
    /* contact scratch (per node) */
    double *tv, *m_eff, *mu_eff, *lam_n, *lam_t;
    /* parameters */
    double dt, gravity_y, restitution, slop, bounce_speed,
           fric_speed, dyn_fric_factor, baumgarte;
    int iterations;
    int floor_enabled;
} gb_system;

/* Advance n_steps.  Returns the 0-based index of the step whose end state
 * was non-finite, or -1 if all steps completed cleanly. */
int gb_step_n(gb_system *sys, int n_steps);

/* Locomotion evaluation driver: sinusoidal gait over motor groups with
 * optional per-muscle noise, optional in-evaluation growth, displacement
 * and body-rotation tracking, and periodic position sampling. */
typedef struct {
    gb_system *sys;
    /* actuation */
    int n_muscles;
    const int32_t *muscle_idx;      /* spring indices */
    const double *muscle_sign;      /* +1 left, -1 right */
    const int32_t *muscle_group;
    int n_groups;
    const double *phase, *amp;      /* per group */
    double settle_time;
    double cmd_clamp;
    const double *noise;            /* n_steps * n_muscles, or NULL */
    /* height-tracking passive springs */
    int n_diag;
    const int32_t *diag_idx;
    int n_tip;
    const int32_t *tip_idx;
    double width;
    double height_adult;
    /* size program */
    int evo_devo;                   /* 0: fixed size, 1: grow during eval */
    double size_fixed;
    double ed_start, ed_t0, ed_t1;
    /* tracking */
    int hex_first, hex_count, vertex_node;
    /* sampling: every k steps into rows of [t, x0, y0, x1, y1, ...] */
    int sample_every;
    double *samples;
    /* outputs */
    double x_start, x_end, rotation;
} gb_locomotion;

/* Returns the diverged step index or -1 (see gb_step_n). */
int gb_run_locomotion(gb_locomotion *job, int n_steps, double t0);

#endif

/* Compiled hot path of the simulator.
 *
 * Must stay bit-identical to the pure-Python engine (_py.py): same
 * operations in the same order, no fused multiply-adds (build with
 * -ffp-contract=off), no reassociated reductions.  Lane segments are
 * elementwise by construction, so vectorizing them cannot change results.
 */

#include "_kernel.h"

#include <math.h>
#include <stddef.h>

/* Any coordinate or velocity beyond this magnitude (or NaN) counts as a
 * diverged state.  Bound comparisons AND-reduce in any order, so the check
 * vectorizes without changing the outcome. */
#define GB_STATE_BOUND 1e300

/* ---- per-step phases --------------------------------------------------- */

static void contact_capture(gb_system *sys)
{
    const int n = sys->n_nodes;
    const double slop = sys->slop, dt = sys->dt;
    const double baumgarte = sys->baumgarte, restitution = sys->restitution;
    const double bounce_speed = sys->bounce_speed, fric_speed = sys->fric_speed;
    const double dyn = sys->dyn_fric_factor;
    const double *py = sys->py, *vx = sys->vx, *vy = sys->vy;
    const double *mass = sys->mass, *fric = sys->fric;

    if (!sys->floor_enabled) {
        for (int i = 0; i < n; i++) {
            sys->tv[i] = 0.0; sys->m_eff[i] = 0.0; sys->mu_eff[i] = 0.0;
            sys->lam_n[i] = 0.0; sys->lam_t[i] = 0.0;
        }
        return;
    }
#pragma omp simd
    for (int i = 0; i < n; i++) {
        double appr = vy[i];
        double pen = -py[i] - slop;
        double baum = (pen > 0.0) ? (baumgarte / dt) * pen : 0.0;
        double bounce = (appr < -bounce_speed) ? -restitution * appr : 0.0;
        double target = (bounce > baum) ? bounce : baum;
        int active = (py[i] <= 0.0);
        double moving = (vx[i] > fric_speed || vx[i] < -fric_speed) ? dyn : 1.0;
        sys->tv[i] = active ? target : 0.0;
        sys->m_eff[i] = active ? mass[i] : 0.0;
        sys->mu_eff[i] = active ? moving * fric[i] : 0.0;
        sys->lam_n[i] = 0.0;
        sys->lam_t[i] = 0.0;
    }
}

static void apply_gravity(gb_system *sys)
{
    const double dv = sys->gravity_y * sys->dt;
    double *vy = sys->vy;
    for (int i = 0; i < sys->n_nodes; i++)
        vy[i] += dv;
}

/* Lane segments have length a multiple of 8 (the padded layout guarantees
 * it), so they are swept in fixed 8-wide chunks: no tails, no trip-count
 * checks, one full-width vector block per chunk. */
static inline __attribute__((always_inline)) void prep_lane(
    int cnt,
    const double *restrict pxa, const double *restrict pya,
    const double *restrict pxb, const double *restrict pyb,
    const double *restrict rst, const double *restrict bfs,
    double *restrict nx, double *restrict ny, double *restrict r)
{
    for (int c = 0; c < cnt; c += 8) {
        const double *restrict xa = pxa + c, *restrict ya = pya + c;
        const double *restrict xb = pxb + c, *restrict yb = pyb + c;
        const double *restrict rs = rst + c, *restrict bs = bfs + c;
        double *restrict nxc = nx + c, *restrict nyc = ny + c, *restrict rc = r + c;
#pragma omp simd
        for (int u = 0; u < 8; u++) {
            double dx = xb[u] - xa[u];
            double dy = yb[u] - ya[u];
            double len2 = dx * dx + dy * dy;
            double inv = (len2 > 0.0) ? 1.0 / sqrt(len2) : 0.0;
            double len = len2 * inv;
            nxc[u] = dx * inv;
            nyc[u] = dy * inv;
            rc[u] = bs[u] * (len - rs[u]);
        }
    }
}

static void spring_prepare(gb_system *sys)
{
    const double *px = sys->px, *py = sys->py;
    const double *rest = sys->rest, *bf = sys->bias_factor;
    const int32_t *ia = sys->ia, *ib = sys->ib;

    for (int seg = 0; seg < sys->n_segments; seg++) {
        const gb_segment *g = &sys->plan[seg];
        const int s0 = g->start, cnt = g->count;
        if (g->lane) {
            const double *pxa = px + ia[s0], *pya = py + ia[s0];
            const double *pxb = px + ib[s0], *pyb = py + ib[s0];
            prep_lane(cnt, pxa, pya, pxb, pyb, rest + s0, bf + s0,
                      sys->nx + s0, sys->ny + s0, sys->r_acc + s0);
        } else {
            for (int s = s0; s < s0 + cnt; s++) {
                double dx = px[ib[s]] - px[ia[s]];
                double dy = py[ib[s]] - py[ia[s]];
                double len2 = dx * dx + dy * dy;
                double inv = (len2 > 0.0) ? 1.0 / sqrt(len2) : 0.0;
                double len = len2 * inv;
                sys->nx[s] = dx * inv;
                sys->ny[s] = dy * inv;
                sys->r_acc[s] = bf[s] * (len - rest[s]);
            }
        }
    }
}

static inline __attribute__((always_inline)) void sweep_lane(
    int cnt,
    double *restrict vxa, double *restrict vya,
    double *restrict vxb, double *restrict vyb,
    const double *restrict nx, const double *restrict ny,
    const double *restrict gi, const double *restrict ca, const double *restrict cb,
    double *restrict r)
{
    for (int c = 0; c < cnt; c += 8) {
        double *restrict xa = vxa + c, *restrict ya = vya + c;
        double *restrict xb = vxb + c, *restrict yb = vyb + c;
        const double *restrict nxc = nx + c, *restrict nyc = ny + c;
        const double *restrict gic = gi + c, *restrict cac = ca + c, *restrict cbc = cb + c;
        double *restrict rc = r + c;
#pragma omp simd
        for (int u = 0; u < 8; u++) {
            double vn = (xb[u] - xa[u]) * nxc[u] + (yb[u] - ya[u]) * nyc[u];
            double w = vn + rc[u];
            rc[u] -= w * gic[u];
            double wa = w * cac[u], wb = w * cbc[u];
            xa[u] += wa * nxc[u];
            ya[u] += wa * nyc[u];
            xb[u] -= wb * nxc[u];
            yb[u] -= wb * nyc[u];
        }
    }
}

static void spring_sweep(gb_system *sys)
{
    double *vx = sys->vx, *vy = sys->vy;
    const int32_t *ia = sys->ia, *ib = sys->ib;

    for (int seg = 0; seg < sys->n_segments; seg++) {
        const gb_segment *g = &sys->plan[seg];
        const int s0 = g->start, cnt = g->count;
        if (g->lane) {
            double *vxa = vx + ia[s0], *vya = vy + ia[s0];
            double *vxb = vx + ib[s0], *vyb = vy + ib[s0];
            sweep_lane(cnt, vxa, vya, vxb, vyb, sys->nx + s0, sys->ny + s0,
                       sys->g_imt + s0, sys->c_a + s0, sys->c_b + s0, sys->r_acc + s0);
        } else {
            for (int s = s0; s < s0 + cnt; s++) {
                const int a = ia[s], b = ib[s];
                double nxs = sys->nx[s], nys = sys->ny[s];
                double vn = (vx[b] - vx[a]) * nxs + (vy[b] - vy[a]) * nys;
                double w = vn + sys->r_acc[s];
                sys->r_acc[s] -= w * sys->g_imt[s];
                double wa = w * sys->c_a[s], wb = w * sys->c_b[s];
                vx[a] += wa * nxs;
                vy[a] += wa * nys;
                vx[b] -= wb * nxs;
                vy[b] -= wb * nys;
            }
        }
    }
}

static void contact_sweep(gb_system *sys)
{
    const int n = sys->n_nodes;
    double *restrict vx = sys->vx, *restrict vy = sys->vy;
    double *restrict lam_n = sys->lam_n, *restrict lam_t = sys->lam_t;
    const double *restrict tv = sys->tv, *restrict m_eff = sys->m_eff;
    const double *restrict mu = sys->mu_eff;
    const double *restrict inv_m = sys->inv_m;

    /* Inactive contacts have m_eff == 0, turning every update into an
     * exact no-op: the sweep is branchless and elementwise per node. */
#pragma omp simd
    for (int i = 0; i < n; i++) {
        double dv = vy[i] - tv[i];
        double dl = -dv * m_eff[i];
        double ln = lam_n[i] + dl;
        ln = (ln > 0.0) ? ln : 0.0;
        vy[i] += (ln - lam_n[i]) * inv_m[i];
        lam_n[i] = ln;

        double dlt = -vx[i] * m_eff[i];
        double cap = mu[i] * ln;
        double lt = lam_t[i] + dlt;
        lt = (lt > cap) ? cap : lt;
        lt = (lt < -cap) ? -cap : lt;
        vx[i] += (lt - lam_t[i]) * inv_m[i];
        lam_t[i] = lt;
    }
}

static void integrate(gb_system *sys)
{
    const int n = sys->n_nodes;
    const double dt = sys->dt, slop = sys->slop;
    double *restrict px = sys->px, *restrict py = sys->py;
    const double *restrict vx = sys->vx, *restrict vy = sys->vy;

    if (sys->floor_enabled) {
#pragma omp simd
        for (int i = 0; i < n; i++) {
            px[i] += vx[i] * dt;
            double y = py[i] + vy[i] * dt;
            py[i] = (y < -slop) ? -slop : y;
        }
    } else {
#pragma omp simd
        for (int i = 0; i < n; i++) {
            px[i] += vx[i] * dt;
            py[i] += vy[i] * dt;
        }
    }
}

static int state_is_finite(const gb_system *sys)
{
    const int n = sys->n_nodes;
    const double *px = sys->px, *py = sys->py, *vx = sys->vx, *vy = sys->vy;
    int ok = 1;
#pragma omp simd reduction(&:ok)
    for (int i = 0; i < n; i++) {
        ok &= (px[i] >= -GB_STATE_BOUND) & (px[i] <= GB_STATE_BOUND);
        ok &= (py[i] >= -GB_STATE_BOUND) & (py[i] <= GB_STATE_BOUND);
        ok &= (vx[i] >= -GB_STATE_BOUND) & (vx[i] <= GB_STATE_BOUND);
        ok &= (vy[i] >= -GB_STATE_BOUND) & (vy[i] <= GB_STATE_BOUND);
    }
    return ok;
}

static void step_once(gb_system *sys)
{
    contact_capture(sys);
    apply_gravity(sys);
    spring_prepare(sys);
    for (int it = 0; it < sys->iterations; it++) {
        spring_sweep(sys);
        contact_sweep(sys);
    }
    integrate(sys);
}

int gb_step_n(gb_system *sys, int n_steps)
{
    for (int step = 0; step < n_steps; step++) {
        step_once(sys);
        if (!state_is_finite(sys))
            return step;
    }
    return -1;
}

/* ---- locomotion evaluation --------------------------------------------- */

static double growth_size(const gb_locomotion *job, double t)
{
    if (!job->evo_devo)
        return job->size_fixed;
    if (t < job->ed_t0)
        return job->ed_start;
    if (t >= job->ed_t1)
        return 1.0;
    return job->ed_start + (1.0 - job->ed_start) * (t - job->ed_t0) / (job->ed_t1 - job->ed_t0);
}

static void hex_centroid(const gb_locomotion *job, double *cx, double *cy)
{
    const gb_system *sys = job->sys;
    double sx = 0.0, sy = 0.0;
    for (int i = job->hex_first; i < job->hex_first + job->hex_count; i++) {
        sx += sys->px[i];
        sy += sys->py[i];
    }
    *cx = sx / job->hex_count;
    *cy = sy / job->hex_count;
}

static double body_angle(const gb_locomotion *job)
{
    double cx, cy;
    hex_centroid(job, &cx, &cy);
    return atan2(job->sys->py[job->vertex_node] - cy, job->sys->px[job->vertex_node] - cx);
}

static void write_sample(const gb_locomotion *job, int row, double t)
{
    const gb_system *sys = job->sys;
    double *out = job->samples + (size_t)row * (1 + 2 * sys->n_nodes);
    out[0] = t;
    for (int i = 0; i < sys->n_nodes; i++) {
        out[1 + 2 * i] = sys->px[i];
        out[2 + 2 * i] = sys->py[i];
    }
}

int gb_run_locomotion(gb_locomotion *job, int n_steps, double t0)
{
    gb_system *sys = job->sys;
    const double two_pi = 6.283185307179586476925286766559;
    double alpha_group[64];

    double cx, cy;
    hex_centroid(job, &cx, &cy);
    job->x_start = cx;
    job->x_end = cx;
    job->rotation = 0.0;
    double prev_angle = body_angle(job);

    int row = 0;
    if (job->sample_every > 0)
        write_sample(job, row++, t0);

    for (int step = 0; step < n_steps; step++) {
        double t = t0 + step * sys->dt;

        /* muscle commands */
        double size = growth_size(job, t);
        double h = job->height_adult * size;
        if (job->n_diag > 0) {
            double diag_rest = sqrt(job->width * job->width + h * h);
            for (int d = 0; d < job->n_diag; d++)
                sys->rest[job->diag_idx[d]] = diag_rest;
        }
        if (job->n_tip > 0) {
            double halfw = 0.5 * job->width;
            double tip_rest = sqrt(halfw * halfw + h * h);
            for (int d = 0; d < job->n_tip; d++)
                sys->rest[job->tip_idx[d]] = tip_rest;
        }
        double t_act = t - job->settle_time;
        for (int g = 0; g < job->n_groups; g++)
            alpha_group[g] = (t_act >= 0.0) ? job->amp[g] * sin(t_act + job->phase[g]) : 0.0;
        const double *noise_row = job->noise ? job->noise + (size_t)step * job->n_muscles : 0;
        for (int m = 0; m < job->n_muscles; m++) {
            double a = alpha_group[job->muscle_group[m]];
            if (noise_row)
                a += noise_row[m];
            if (a > job->cmd_clamp)
                a = job->cmd_clamp;
            else if (a < -job->cmd_clamp)
                a = -job->cmd_clamp;
            sys->rest[job->muscle_idx[m]] = h * (1.0 + job->muscle_sign[m] * a);
        }

        step_once(sys);

        double angle = body_angle(job);
        double delta = angle - prev_angle;
        if (delta > 3.141592653589793)
            delta -= two_pi;
        else if (delta < -3.141592653589793)
            delta += two_pi;
        job->rotation += delta;
        prev_angle = angle;

        if (!state_is_finite(sys))
            return step;

        if (job->sample_every > 0 && (step + 1) % job->sample_every == 0)
            write_sample(job, row++, t0 + (step + 1) * sys->dt);
    }

    hex_centroid(job, &cx, &cy);
    job->x_end = cx;
    return -1;
}

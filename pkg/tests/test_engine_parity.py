"""The compiled and pure-Python engines must produce bitwise-equal states."""

import numpy as np
import pytest

from growbots import control as C
from growbots import engine
from growbots import morphology as M
from growbots.physics2d import PointMass, Spring, World


requires_compiled = pytest.mark.skipif(
    not engine.compiled_available(), reason="compiled engine not built"
)


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


def starfish_job(noise=None, pad=True, coeffs=M.ADULT, genotype_seed=5, evo_devo=False):
    body = M.build_starfish(coeffs)
    system = engine.pack_system(
        positions=body.positions, velocities=np.zeros_like(body.positions),
        masses=body.masses, friction=body.friction,
        spring_a=body.spring_a, spring_b=body.spring_b,
        rest_length=body.rest_length, stiffness=body.stiffness,
        damping_ratio=body.damping_ratio,
        dt=0.005, gravity=-100.0, restitution=0.2,
        slabs=M.node_slabs() if pad else None,
    )
    gait = C.decode_gait(C.random_genotype(rng(genotype_seed)))
    return engine.LocomotionJob(
        system=system,
        muscle_idx=system.real_springs[body.muscles], muscle_sign=body.muscle_signs,
        muscle_group=body.muscle_groups, n_groups=12,
        phase=gait.phases, amp=gait.amplitudes,
        settle_time=0.5, cmd_clamp=C.COMMAND_CLAMP, noise=noise,
        diag_idx=system.real_springs[body.diagonals],
        tip_idx=system.real_springs[body.tip_springs],
        width=3.0, height_adult=4.0,
        evo_devo=evo_devo, size_fixed=coeffs.size,
        ed_start=0.5, ed_t0=1.0, ed_t1=2.0,
    )


def state_fields(system):
    return [system.px, system.py, system.vx, system.vy, system.rest]


@requires_compiled
class TestBitwiseParity:
    def test_generic_step_small_world(self):
        def packed():
            w = World(
                point_masses=[
                    PointMass(position=(0.0, 0.4), velocity=(1.0, 0.0)),
                    PointMass(position=(1.1, 0.9), velocity=(-0.3, 0.2), mass=2.0),
                    PointMass(position=(0.5, 1.8), friction_static=1.0),
                ],
                springs=[Spring(0, 1, 1.0, 8000.0), Spring(1, 2, 1.0, 3000.0)],
            )
            return w._sys

        a, b = packed(), packed()
        ra = engine.step_n(a, 400, impl=engine.get_impl("compiled"))
        rb = engine.step_n(b, 400, impl=engine.get_impl("python"))
        assert ra == rb == -1
        for fa, fb in zip(state_fields(a), state_fields(b)):
            assert np.array_equal(fa, fb)

    @pytest.mark.parametrize("with_noise", [False, True])
    def test_locomotion_parity(self, with_noise):
        noise = None
        if with_noise:
            noise = rng(42).standard_normal((400, 96)) * 0.01
        ja = starfish_job(noise)
        jb = starfish_job(noise)
        ra = engine.run_locomotion(ja, 400, impl=engine.get_impl("compiled"))
        rb = engine.run_locomotion(jb, 400, impl=engine.get_impl("python"))
        assert ra == rb
        for fa, fb in zip(state_fields(ja.system), state_fields(jb.system)):
            assert np.array_equal(fa, fb)

    def test_evo_devo_parity(self):
        ja = starfish_job(evo_devo=True, coeffs=M.muscle_model(0.5))
        jb = starfish_job(evo_devo=True, coeffs=M.muscle_model(0.5))
        ra = engine.run_locomotion(ja, 500, impl=engine.get_impl("compiled"))
        rb = engine.run_locomotion(jb, 500, impl=engine.get_impl("python"))
        assert ra == rb
        for fa, fb in zip(state_fields(ja.system), state_fields(jb.system)):
            assert np.array_equal(fa, fb)

    def test_sampling_parity(self):
        ja, jb = starfish_job(), starfish_job()
        for j in (ja, jb):
            j.sample_every = 20
            j.samples = np.zeros((400 // 20 + 1, 1 + 2 * len(j.system.px)))
        engine.run_locomotion(ja, 400, impl=engine.get_impl("compiled"))
        engine.run_locomotion(jb, 400, impl=engine.get_impl("python"))
        assert np.array_equal(ja.samples, jb.samples)


class TestPaddedLayout:
    def test_padded_equals_unpadded(self):
        ja = starfish_job(pad=True)
        jb = starfish_job(pad=False)
        ra = engine.run_locomotion(ja, 300)
        rb = engine.run_locomotion(jb, 300)
        assert ra == rb
        assert np.array_equal(ja.system.node_positions(), jb.system.node_positions())
        assert np.array_equal(ja.system.node_velocities(), jb.system.node_velocities())

    def test_ghost_springs_are_inert(self):
        system = starfish_job(pad=True).system
        ghosts = np.setdiff1d(np.arange(len(system.px)), system.real_nodes)
        vy0 = system.vy[ghosts].copy()
        engine.step_n(system, 50)
        # ghosts free-fall: same velocity change as pure gravity
        assert np.allclose(system.vy[ghosts] - vy0, -100.0 * 0.005 * 50, atol=1e-12)
        assert np.all(system.vx[ghosts] == 0.0)

    def test_plan_lane_segments_are_disjoint(self):
        system = starfish_job(pad=True).system
        for start, count, lane in zip(system.plan_start, system.plan_count, system.plan_lane):
            if not lane:
                continue
            nodes = list(system.ia[start : start + count]) + list(
                system.ib[start : start + count]
            )
            assert len(set(nodes)) == 2 * count

    def test_plan_covers_all_springs_in_order(self):
        system = starfish_job(pad=True).system
        covered = []
        for start, count, _ in zip(system.plan_start, system.plan_count, system.plan_lane):
            covered.extend(range(start, start + count))
        assert covered == list(range(len(system.ia)))


class TestEngineSelection:
    def test_active_engine_reported(self):
        assert engine.active_engine() in ("compiled", "python")

    def test_get_impl_names(self):
        assert engine.get_impl("python") is not None
        with pytest.raises(ValueError):
            engine.get_impl("weird")

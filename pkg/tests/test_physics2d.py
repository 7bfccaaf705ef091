import math

import numpy as np
import pytest

from growbots.physics2d import (
    DT_DEFAULT,
    FLOOR_RESTITUTION,
    PENETRATION_SLOP,
    PointMass,
    SimulationDiverged,
    Spring,
    World,
    resolve_ground_contact,
    spring_constraint_coefficients,
    spring_damping,
)


class TestSpringConstraintCoefficients:
    def test_reference_case(self):
        # k=20000, two 1 kg masses: c = 2*sqrt(0.5*20000) = 200
        c = spring_damping(20000.0, 1.0, 1.0, 1.0)
        assert c == 200.0
        bias_factor, softness = spring_constraint_coefficients(20000.0, c, 0.005)
        assert softness == 1.0 / 300.0
        assert bias_factor == pytest.approx((100.0 / 300.0) / 0.005, rel=1e-15)

    def test_rigid_limit(self):
        bias_factor, softness = spring_constraint_coefficients(1e12, 200.0, 0.005)
        assert softness < 1e-9
        assert bias_factor == pytest.approx(1.0 / 0.005, rel=1e-6)

    def test_unit_case(self):
        # c=0 and dt*k=1 make the constraint fully stiff over one step
        bias_factor, softness = spring_constraint_coefficients(200.0, 0.0, 0.005)
        assert softness == pytest.approx(1.0, rel=1e-15)
        assert bias_factor * 0.005 == pytest.approx(1.0, rel=1e-15)

    @pytest.mark.parametrize("k,c,dt", [(0.0, 1.0, 0.005), (-5.0, 1.0, 0.005), (10.0, 1.0, 0.0)])
    def test_invalid_parameters(self, k, c, dt):
        with pytest.raises(ValueError):
            spring_constraint_coefficients(k, c, dt)


def two_mass_world(dt, stretch=0.1, rest=2.0, k=20000.0):
    length = rest * (1.0 + stretch)
    return World(
        point_masses=[
            PointMass(position=(0.0, 0.0), mass=1.0),
            PointMass(position=(length, 0.0), mass=1.0),
        ],
        springs=[Spring(0, 1, rest_length=rest, stiffness=k, damping_ratio=1.0)],
        gravity=0.0,
        dt=dt,
        floor_enabled=False,
    )


def spring_length(world):
    p = world.positions
    return float(np.linalg.norm(p[1] - p[0]))


class TestCriticallyDampedSpring:
    @pytest.mark.parametrize("dt", [0.005, 0.001, 0.0001])
    def test_never_overshoots(self, dt):
        # zeta=1: the displacement decays without ever changing sign
        world = two_mass_world(dt)
        rest = 2.0
        c0 = spring_length(world) - rest
        horizon = 10.0 * (1.0 / math.sqrt(20000.0 / 0.5))
        for _ in range(int(horizon / dt) + 1):
            world.step()
            assert spring_length(world) - rest > -1e-12 * c0

    def test_matches_analytic_solution(self):
        # x(t) - x_r = C0 * (1 + w t) exp(-w t), w = sqrt(k/m_r), within 2%
        # of the initial displacement over five time constants at dt=1e-4.
        dt = 1e-4
        world = two_mass_world(dt)
        rest = 2.0
        c0 = spring_length(world) - rest
        omega = math.sqrt(20000.0 / 0.5)
        n_steps = int(5.0 / omega / dt)
        worst = 0.0
        for step in range(1, n_steps + 1):
            world.step()
            t = step * dt
            exact = c0 * (1.0 + omega * t) * math.exp(-omega * t)
            worst = max(worst, abs((spring_length(world) - rest) - exact))
        assert worst <= 0.02 * c0

    def test_momentum_conserved_without_gravity(self):
        rng = np.random.default_rng(3)
        nodes = [
            PointMass(position=tuple(rng.uniform(-1, 1, 2)), velocity=tuple(rng.uniform(-1, 1, 2)),
                      mass=float(rng.uniform(0.5, 2.0)))
            for _ in range(8)
        ]
        springs = [
            Spring(i, j, rest_length=1.0, stiffness=5000.0)
            for i in range(8) for j in range(i + 1, 8) if (i + j) % 3 == 0
        ]
        world = World(point_masses=nodes, springs=springs, gravity=0.0, floor_enabled=False)
        p0 = world.total_momentum()
        scale = sum(n.mass * math.hypot(*n.velocity) for n in nodes)
        world.step(10_000)
        drift = np.abs(world.total_momentum() - p0).max()
        assert drift <= 1e-9 * max(1.0, scale)


class TestGroundContact:
    def test_free_fall_velocity_after_one_step(self):
        world = World(point_masses=[PointMass(position=(0.0, 1.0))], gravity=-100.0)
        world.step()
        assert world.velocities[0, 1] == -0.5

    def test_empty_world_steps(self):
        world = World()
        world.step(3)
        assert world.simulated_time == pytest.approx(3 * DT_DEFAULT)

    def test_resting_node_impulse(self):
        # static equilibrium: tangential impulse 0, normal impulse m*|g|*dt
        node = PointMass(position=(0.0, 0.0), velocity=(0.0, 0.0), mass=2.0)
        lam_t, lam_n = resolve_ground_contact(node)
        assert lam_t == 0.0
        assert lam_n == pytest.approx(2.0 * 100.0 * DT_DEFAULT, rel=1e-12)

    def test_airborne_node_zero_impulse(self):
        node = PointMass(position=(0.0, 0.5), velocity=(0.0, -1.0))
        assert resolve_ground_contact(node) == (0.0, 0.0)

    def test_restitution_reflects_approach_speed(self):
        # striking the floor at -1 m/s leaves the step at +0.2 m/s
        world = World(point_masses=[PointMass(position=(0.0, 0.0), velocity=(0.0, -1.0))])
        world.step()
        assert world.velocities[0, 1] == pytest.approx(0.2, abs=1e-12)

    def test_slow_approach_is_inelastic(self):
        world = World(point_masses=[PointMass(position=(0.0, 0.0), velocity=(0.0, -0.005))])
        world.step()
        assert abs(world.velocities[0, 1]) < 1e-9

    def test_sliding_friction_uses_dynamic_coefficient(self):
        # sliding at 2 mm/s > 1 mm/s threshold: cap is 0.5*0.5*N = 0.25*N
        node = PointMass(position=(0.0, 0.0), velocity=(0.002, 0.0), friction_static=0.5)
        lam_t, lam_n = resolve_ground_contact(node)
        stopping = node.mass * 0.002
        assert lam_t == pytest.approx(-min(stopping, 0.25 * lam_n), rel=1e-12)

    def test_static_friction_below_threshold(self):
        node = PointMass(position=(0.0, 0.0), velocity=(0.0005, 0.0), friction_static=0.5)
        lam_t, lam_n = resolve_ground_contact(node)
        # stopping impulse is far below the static cap, node stops
        assert lam_t == pytest.approx(-node.mass * 0.0005, rel=1e-12)
        assert abs(lam_t) <= 0.5 * lam_n

    def test_friction_cone_every_step(self):
        # a pushed block: tangential impulse never exceeds mu * normal impulse
        world = World(
            point_masses=[PointMass(position=(0.0, 0.0), velocity=(3.0, 0.0), friction_static=0.5)]
        )
        sys = world._sys
        for _ in range(500):
            world.step()
            mu = 0.5  # static cap is the upper bound for either regime
            assert abs(sys.lam_t[0]) <= mu * sys.lam_n[0] + 1e-12

    def test_no_penetration_below_slop(self):
        world = World(
            point_masses=[PointMass(position=(0.0, 2.0), velocity=(0.0, -8.0))],
            gravity=-100.0,
        )
        for _ in range(2000):
            world.step()
            assert world.positions[0, 1] >= -PENETRATION_SLOP - 1e-15
        # and the node did come to rest on the floor
        assert abs(world.velocities[0, 1]) < 1e-6

    def test_restitution_bounce_decays(self):
        world = World(point_masses=[PointMass(position=(0.0, 1.0))], gravity=-100.0)
        peaks = []
        prev_y, rising = 1.0, False
        for _ in range(4000):
            world.step()
            y = world.positions[0, 1]
            if rising and y < prev_y:
                peaks.append(prev_y)
                rising = False
            rising = y > prev_y
            prev_y = y
        assert len(peaks) >= 1
        assert peaks[0] < 0.1 * 1.0  # restitution 0.2 => energy factor 0.04


class TestDeterminismAndErrors:
    def test_bitwise_deterministic(self):
        def run():
            world = World(
                point_masses=[
                    PointMass(position=(0.0, 1.0), velocity=(0.5, 0.0)),
                    PointMass(position=(1.0, 1.5), velocity=(-0.2, 0.1)),
                ],
                springs=[Spring(0, 1, rest_length=1.0, stiffness=3000.0)],
            )
            world.step(500)
            return world.positions, world.velocities

        p1, v1 = run()
        p2, v2 = run()
        assert np.array_equal(p1, p2) and np.array_equal(v1, v2)

    def test_divergence_raises_with_step_index(self):
        world = World(point_masses=[PointMass(position=(0.0, float("nan")))])
        with pytest.raises(SimulationDiverged) as err:
            world.step(5)
        assert err.value.step_index == 0

    def test_invalid_spring_endpoints_rejected(self):
        with pytest.raises(ValueError):
            World(point_masses=[PointMass(position=(0, 0))], springs=[Spring(0, 1, 1.0, 10.0)])

    def test_tap_receives_samples(self):
        world = World(point_masses=[PointMass(position=(0.0, 5.0))])
        seen = []
        world.run(100, tap=lambda t, pos: seen.append((t, pos.copy())), tap_every=20)
        assert len(seen) == 6  # initial + 5 chunks
        assert seen[0][0] == 0.0
        assert seen[-1][0] == pytest.approx(0.5)

    def test_simulated_time_advances_by_dt(self):
        world = World(point_masses=[PointMass(position=(0.0, 1.0))])
        world.step()
        assert world.simulated_time == DT_DEFAULT
        world.step(9)
        assert world.simulated_time == pytest.approx(10 * DT_DEFAULT)

    def test_restitution_range_validated(self):
        with pytest.raises(ValueError):
            World(restitution=1.5)


def test_friction_cone_on_full_robot():
    # every contact of every step satisfies |lam_t| <= mu * lam_n + 1e-12,
    # with mu the effective (static or dynamic) coefficient of that step
    from growbots import morphology

    body = morphology.build_starfish()
    world = World(
        point_masses=[
            PointMass(position=tuple(p), mass=float(m), friction_static=float(f))
            for p, m, f in zip(body.positions, body.masses, body.friction)
        ],
        springs=[
            Spring(int(a), int(b), float(r), float(k), float(z))
            for a, b, r, k, z in zip(
                body.spring_a, body.spring_b, body.rest_length,
                body.stiffness, body.damping_ratio,
            )
        ],
    )
    sys = world._sys
    for _ in range(400):
        world.step()
        violation = np.abs(sys.lam_t) - sys.mu_eff * sys.lam_n
        assert violation.max() <= 1e-12

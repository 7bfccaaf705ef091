"""Compare the compiled and pure-Python engines on the standard workload.

Usage:  python benchmarks/bench_engines.py [--steps N] [--full]

The headline number is one locomotion evaluation: 12,000 steps of the
109-node / 264-spring starfish.  The pure-Python engine is measured on a
shorter horizon and scaled (it is several hundred times slower); pass
--full to run it for the complete evaluation instead.
"""

import argparse
import time

import numpy as np

from growbots import control, engine, evaluation, morphology


def make_job(noise=None):
    body = morphology.build_starfish(morphology.ADULT)
    system = engine.pack_system(
        positions=body.positions, velocities=np.zeros_like(body.positions),
        masses=body.masses, friction=body.friction,
        spring_a=body.spring_a, spring_b=body.spring_b,
        rest_length=body.rest_length, stiffness=body.stiffness,
        damping_ratio=body.damping_ratio,
        dt=0.005, gravity=-100.0, restitution=0.2,
        slabs=morphology.node_slabs(),
    )
    gait = control.decode_gait(control.random_genotype(np.random.default_rng(5)))
    return engine.LocomotionJob(
        system=system,
        muscle_idx=system.real_springs[body.muscles], muscle_sign=body.muscle_signs,
        muscle_group=body.muscle_groups, n_groups=12,
        phase=gait.phases, amp=gait.amplitudes,
        settle_time=9.42, cmd_clamp=control.COMMAND_CLAMP, noise=noise,
        diag_idx=system.real_springs[body.diagonals],
        tip_idx=system.real_springs[body.tip_springs],
        width=3.0, height_adult=4.0, evo_devo=False, size_fixed=1.0,
    )


def time_engine(impl_name, steps, repeats=3, noise_seed=None):
    best = float("inf")
    impl = engine.get_impl(impl_name)
    for _ in range(repeats):
        noise = None
        if noise_seed is not None:
            rng = np.random.Generator(np.random.PCG64(noise_seed))
            noise = rng.standard_normal((steps, 96)) * 0.01
        job = make_job(noise)
        t0 = time.perf_counter()
        engine.run_locomotion(job, steps, impl=impl)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=12000)
    parser.add_argument("--full", action="store_true",
                        help="run the Python engine for the full horizon too")
    args = parser.parse_args()

    print(f"workload: starfish locomotion, {args.steps} steps "
          f"(109 nodes, 264 springs, 10 solver iterations/step)")
    print(f"active engine: {engine.active_engine()}\n")

    py_steps = args.steps if args.full else min(600, args.steps)
    rows = []
    if engine.compiled_available():
        t = time_engine("compiled", args.steps)
        rows.append(("compiled, noise off", args.steps, t))
        t_noise = time_engine("compiled", args.steps, noise_seed=1)
        rows.append(("compiled, noise on (incl. generation)", args.steps, t_noise))
    t_py = time_engine("python", py_steps, repeats=1)
    label = "python, noise off" + ("" if py_steps == args.steps else f" ({py_steps} steps, scaled)")
    rows.append((label, py_steps, t_py * args.steps / py_steps))

    print(f"{'engine':45s} {'per evaluation':>16s} {'steps/s':>12s}")
    for label, steps, t in rows:
        print(f"{label:45s} {t * 1e3:13.1f} ms {args.steps / t:12.0f}")
    if engine.compiled_available():
        print(f"\nspeedup compiled vs python: {rows[-1][2] / rows[0][2]:.0f}x")


if __name__ == "__main__":
    main()

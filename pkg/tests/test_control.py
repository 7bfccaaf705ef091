import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growbots import control as C


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


genotypes = st.integers(min_value=0, max_value=2**32 - 1).map(
    lambda s: C.random_genotype(rng(s))
)


class TestGaitSignal:
    def test_zero_amplitude(self):
        gait = C.GaitParameters(phases=np.zeros(12), amplitudes=np.zeros(12))
        for t in (0.0, 1.0, 5.5):
            assert C.gait_signal(gait, 3, t) == 0.0

    def test_sine_peak(self):
        gait = C.GaitParameters(phases=np.zeros(12), amplitudes=np.full(12, 0.2))
        assert C.gait_signal(gait, 0, math.pi / 2) == pytest.approx(0.2, rel=1e-12)

    def test_phase_pi(self):
        gait = C.GaitParameters(phases=np.full(12, math.pi), amplitudes=np.full(12, 0.1))
        assert C.gait_signal(gait, 0, math.pi / 2) == pytest.approx(-0.1, rel=1e-12)

    def test_invalid_group(self):
        gait = C.GaitParameters(phases=np.zeros(12), amplitudes=np.zeros(12))
        with pytest.raises(ValueError):
            C.gait_signal(gait, 12, 0.0)

    @given(genotypes, st.floats(min_value=0, max_value=100, allow_nan=False))
    def test_periodic(self, genotype, t):
        gait = C.decode_gait(genotype)
        for g in range(12):
            a = gait.amplitudes[g] * math.sin(t + gait.phases[g])
            b = C.gait_signal(gait, g, t)
            assert a == b
            assert abs(b) <= 0.2 + 1e-12


class TestApplyCommand:
    def test_neutral(self):
        assert C.apply_command(4.0, 0.0) == (4.0, 4.0)

    def test_amplitude_cap(self):
        left, right = C.apply_command(4.0, 0.2)
        assert left == pytest.approx(4.8, rel=1e-15)
        assert right == pytest.approx(3.2, rel=1e-15)

    def test_sign_symmetry_small(self):
        left, right = C.apply_command(2.0, -0.1)
        assert left == pytest.approx(1.8, rel=1e-15)
        assert right == pytest.approx(2.2, rel=1e-15)

    def test_clamps_extreme_commands(self):
        left, right = C.apply_command(4.0, 5.0)
        assert left == 4.0 * (1 + C.COMMAND_CLAMP)
        assert right == 4.0 * (1 - C.COMMAND_CLAMP)
        assert right > 0

    def test_rejects_bad_height(self):
        with pytest.raises(ValueError):
            C.apply_command(0.0, 0.1)


class TestRandomGenotype:
    def test_ranges(self):
        g = rng(1)
        sample = np.array([C.random_genotype(g) for _ in range(2000)])
        phases, amps = sample[:, 0::2], sample[:, 1::2]
        assert phases.min() >= -math.pi and phases.max() <= math.pi
        assert amps.min() >= 0.0 and amps.max() <= 0.2

    def test_deterministic_replay(self):
        assert np.array_equal(C.random_genotype(rng(42)), C.random_genotype(rng(42)))

    def test_mean_amplitude(self):
        g = rng(2)
        n = 20_000
        amps = np.array([C.random_genotype(g)[1::2] for _ in range(n // 12)]).ravel()
        sigma = 0.2 / math.sqrt(12.0)
        assert abs(amps.mean() - 0.1) <= 3.0 * sigma / math.sqrt(len(amps))

    def test_decode_encode_roundtrip(self):
        genotype = C.random_genotype(rng(3))
        assert np.array_equal(C.encode_gait(C.decode_gait(genotype)), genotype)


class TestMutation:
    def test_exactly_two_genes_change(self):
        g = rng(4)
        parent = C.random_genotype(g)
        for _ in range(200):
            child = C.mutate(parent, g)
            assert np.sum(child != parent) == 2

    def test_unchanged_genes_bit_identical(self):
        g = rng(5)
        parent = C.random_genotype(g)
        child = C.mutate(parent, g)
        same = child == parent
        assert np.array_equal(child[same], parent[same])

    def test_reflection_arithmetic(self):
        assert C.reflect_unit(1.03) == 2.0 - 1.03
        assert C.reflect_unit(-0.2) == 0.2
        assert C.reflect_unit(0.5) == 0.5
        assert C.reflect_unit(2.3) == pytest.approx(0.3, rel=1e-12)

    def test_bounds_preserved_bulk(self):
        g = rng(6)
        parent = C.random_genotype(g)
        for _ in range(5000):
            parent = C.mutate(parent, g)
        C.validate_genotype(parent)  # raises if out of range

    @given(genotypes, st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=200)
    def test_bounds_property(self, parent, seed):
        child = C.mutate(parent, rng(seed))
        C.validate_genotype(child)

    def test_ks_against_reflected_normal(self):
        # all genes start at normalized 0.3; mutated values must follow the
        # reflected normal law (quick check; acceptance runs the full size)
        x0 = 0.3
        parent = C.from_unit(np.full(24, x0))
        g = rng(7)
        samples = []
        for _ in range(10_000):
            child = C.mutate(parent, g)
            changed = np.flatnonzero(child != parent)
            samples.extend(C.to_unit(child)[changed])
        d = ks_distance_reflected_normal(np.array(samples), x0, math.sqrt(C.MUTATION_VARIANCE))
        assert d < 0.03

    def test_ks_mismatch_detected(self):
        # sanity: the oracle rejects a plainly wrong distribution
        bad = np.random.Generator(np.random.PCG64(8)).uniform(0, 1, 5000)
        d = ks_distance_reflected_normal(bad, 0.3, math.sqrt(C.MUTATION_VARIANCE))
        assert d > 0.05


def reflected_normal_cdf(v, x0, sigma):
    """P(fold(x0 + N(0, sigma^2)) <= v), folding into [0,1] by reflection.

    The preimage of [0, v] under the fold is the union of [2k - v, 2k + v]
    over all integers k; +/-6 sigma of terms is beyond double precision.
    """
    from math import erf, sqrt

    def phi(z):
        return 0.5 * (1.0 + erf((z - x0) / (sigma * sqrt(2.0))))

    total = 0.0
    for k in range(-6, 7):
        total += phi(2 * k + v) - phi(2 * k - v)
    return total


def ks_distance_reflected_normal(samples, x0, sigma):
    samples = np.sort(samples)
    n = len(samples)
    cdf = np.array([reflected_normal_cdf(v, x0, sigma) for v in samples])
    upper = np.abs(np.arange(1, n + 1) / n - cdf)
    lower = np.abs(cdf - np.arange(0, n) / n)
    return float(max(upper.max(), lower.max()))


class TestGenotypeDistance:
    def test_identity(self):
        a = C.random_genotype(rng(9))
        assert C.genotype_distance(a, a) == 0.0

    def test_single_gene(self):
        a = C.from_unit(np.full(24, 0.5))
        b = a.copy()
        unit = C.to_unit(b)
        unit[4] += 0.3
        b = C.from_unit(unit)
        assert C.genotype_distance(a, b) == pytest.approx(0.3, rel=1e-12)

    def test_pythagoras(self):
        a = C.from_unit(np.full(24, 0.2))
        unit = C.to_unit(a)
        unit[0] += 0.3
        unit[13] += 0.4
        b = C.from_unit(unit)
        assert C.genotype_distance(a, b) == pytest.approx(0.5, rel=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            C.genotype_distance(np.zeros(23), np.zeros(24))

    @given(genotypes, genotypes, genotypes)
    @settings(max_examples=100)
    def test_metric_properties(self, a, b, c):
        dab = C.genotype_distance(a, b)
        dba = C.genotype_distance(b, a)
        assert dab == dba
        assert dab >= 0
        assert C.genotype_distance(a, c) <= dab + C.genotype_distance(b, c) + 1e-12

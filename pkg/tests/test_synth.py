import numpy as np
import pytest

from contentmap.synth import SbmSpec, delta_star, generate


class TestSpecValidation:
    def test_odd_n_rejected(self):
        with pytest.raises(ValueError):
            SbmSpec(7, 0.5, 0.1)

    def test_probability_bounds(self):
        with pytest.raises(ValueError):
            SbmSpec(10, 1.5, 0.1)
        with pytest.raises(ValueError):
            SbmSpec(10, 0.5, -0.1)

    def test_derived_quantities(self):
        spec = SbmSpec(10, 0.3, 0.1)
        assert spec.rho == pytest.approx(0.2)
        assert spec.delta == pytest.approx(0.2)

    def test_from_density_bounds(self):
        spec = SbmSpec.from_density(200, 0.2, 0.1)
        assert spec.p_in == pytest.approx(0.25)
        assert spec.p_out == pytest.approx(0.15)
        with pytest.raises(ValueError):
            SbmSpec.from_density(200, 0.2, 0.5)  # p_out would go negative


class TestGenerate:
    def test_zero_noise_labels_equal_blocks(self):
        inst = generate(SbmSpec(40, 0.6, 0.1, noise=0.0, seed=1))
        labels = inst.metadata.assignment
        blocks = inst.planted.assignment
        assert np.array_equal(labels, blocks)

    def test_forced_two_cliques(self):
        inst = generate(SbmSpec(4, 1.0, 0.0, seed=0))
        assert inst.network.n == 4
        assert inst.dropped_count == 0
        edges = set(zip(inst.network.edge_src.tolist(), inst.network.edge_dst.tolist()))
        assert edges == {(0, 1), (2, 3)}

    def test_largest_component_restriction(self):
        inst = generate(SbmSpec(4, 1.0, 0.0, seed=0), largest_component_only=True)
        # the two 2-cliques tie; one survives, the other is reported dropped
        assert inst.network.n == 2
        assert inst.dropped_count == 2
        assert inst.planted.n == 2
        assert inst.metadata.assignment.size == 2

    def test_expected_edge_count(self):
        # C(200,2) * 0.2 = 3980 expected edges; sample mean over 100 seeds
        # stays within 3 standard errors
        counts = [
            generate(SbmSpec(200, 0.2, 0.2, seed=s)).network.edge_src.size
            for s in range(100)
        ]
        pairs = 200 * 199 // 2
        expected = pairs * 0.2
        sigma_mean = np.sqrt(pairs * 0.2 * 0.8 / 100)
        assert abs(np.mean(counts) - expected) < 3 * sigma_mean

    def test_label_flip_count_binomial(self):
        spec = SbmSpec(1000, 0.9, 0.1, noise=0.25, seed=3)
        inst = generate(spec)
        flips = int((inst.metadata.assignment != inst.planted.assignment).sum())
        mean = inst.network.n * 0.25
        sigma = np.sqrt(inst.network.n * 0.25 * 0.75)
        assert abs(flips - mean) < 4 * sigma

    def test_block_densities(self):
        within = []
        across = []
        for s in range(30):
            inst = generate(SbmSpec(100, 0.3, 0.1, seed=s))
            blocks = inst.planted.assignment
            same = blocks[inst.network.edge_src] == blocks[inst.network.edge_dst]
            within.append(int(same.sum()))
            across.append(int((~same).sum()))
        n_within_pairs = 2 * (50 * 49 // 2)
        n_across_pairs = 50 * 50
        for counts, pairs, p in ((within, n_within_pairs, 0.3), (across, n_across_pairs, 0.1)):
            mean = pairs * p
            sigma_mean = np.sqrt(pairs * p * (1 - p) / len(counts))
            assert abs(np.mean(counts) - mean) < 3 * sigma_mean

    def test_seeded_determinism(self):
        a = generate(SbmSpec(60, 0.4, 0.1, noise=0.2, seed=42))
        b = generate(SbmSpec(60, 0.4, 0.1, noise=0.2, seed=42))
        assert np.array_equal(a.network.edge_src, b.network.edge_src)
        assert np.array_equal(a.network.edge_dst, b.network.edge_dst)
        assert np.array_equal(a.metadata.assignment, b.metadata.assignment)
        c = generate(SbmSpec(60, 0.4, 0.1, noise=0.2, seed=43))
        assert not (
            np.array_equal(a.network.edge_src, c.network.edge_src)
            and np.array_equal(a.metadata.assignment, c.metadata.assignment)
        )

    def test_isolated_nodes_dropped_and_reported(self):
        # sparse enough that isolated nodes occur
        inst = generate(SbmSpec(50, 0.05, 0.01, seed=2))
        assert inst.network.n + inst.dropped_count == 50
        assert inst.planted.n == inst.network.n
        for orig in inst.dropped:
            assert 0 <= orig < 50

    def test_degenerate_instance_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            generate(SbmSpec(4, 0.0, 0.0, seed=0))


class TestDeltaStar:
    def test_reference_value(self):
        assert delta_star(200, 0.2) == pytest.approx(0.0566, abs=0.0005)

    def test_small_density_limit(self):
        assert delta_star(200, 1e-9) < 1e-4

    def test_scaling_with_n(self):
        # quadrupling N halves the threshold
        assert delta_star(800, 0.2) == pytest.approx(delta_star(200, 0.2) / 2, rel=1e-12)
        assert delta_star(800, 0.2) == pytest.approx(0.0283, abs=0.0005)

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            delta_star(1, 0.2)
        with pytest.raises(ValueError):
            delta_star(10, 0.0)

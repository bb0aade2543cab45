import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wormnet.graph import DegreeDistribution
from wormnet.netgen import (
    FAMILIES,
    GenerationError,
    NetworkSpec,
    build_complete,
    build_configuration_model,
    build_multimodal,
    build_network,
    build_powerlaw,
    degree_distribution,
    sample_powerlaw_degrees,
)


class TestNetworkSpec:
    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown family"):
            NetworkSpec("smallworld", 10)

    def test_multimodal_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            NetworkSpec("multimodal", 10, peaks=((2, 0.5), (3, 0.4)))

    def test_multimodal_peak_degree_range(self):
        with pytest.raises(ValueError, match="lie in"):
            NetworkSpec("multimodal", 5, peaks=((5, 1.0),))

    def test_configmodel_needs_exactly_one_source(self):
        with pytest.raises(ValueError, match="exactly one"):
            NetworkSpec("configmodel", 3)
        with pytest.raises(ValueError, match="exactly one"):
            NetworkSpec(
                "configmodel", 3,
                degrees=(1, 1, 0),
                distribution=DegreeDistribution({1: 2, 0: 1}, 3),
            )

    def test_powerlaw_parameter_validation(self):
        with pytest.raises(ValueError, match="alpha"):
            NetworkSpec("powerlaw", 100, alpha=1.0, k_min=1, k_max=10)
        with pytest.raises(ValueError, match="k_min"):
            NetworkSpec("powerlaw", 100, alpha=2.0)
        with pytest.raises(ValueError, match="1 <= k_min"):
            NetworkSpec("powerlaw", 100, alpha=2.0, k_min=5, k_max=3)


class TestComplete:
    def test_structure(self):
        g = build_complete(7)
        assert g.num_edges == 21
        assert g.degrees().tolist() == [6] * 7

    def test_trivial_sizes(self):
        assert build_complete(0).num_edges == 0
        assert build_complete(1).num_edges == 0
        assert build_complete(2).edge_set() == {(0, 1)}


class TestConfigurationModel:
    def test_exact_degree_sequence(self):
        deg = [3, 2, 2, 1, 1, 1, 2, 2, 2, 2]
        g = build_configuration_model(deg, seed=1)
        assert g.degrees().tolist() == deg

    def test_odd_sum_rejected(self):
        with pytest.raises(ValueError, match="even"):
            build_configuration_model([1, 1, 1])

    def test_degree_too_large_rejected(self):
        with pytest.raises(ValueError, match="max degree"):
            build_configuration_model([3, 1, 1, 1][:3])

    def test_non_graphical_sequence_raises(self):
        # Erdos-Gallai fails for (3, 3, 3, 1): no simple graph exists
        with pytest.raises(GenerationError):
            build_configuration_model([3, 3, 3, 1], seed=0)

    def test_deterministic(self):
        deg = [2] * 50
        assert build_configuration_model(deg, seed=9) == build_configuration_model(deg, seed=9)

    def test_directed_out_degrees_exact_in_degrees_permuted(self):
        rng = np.random.default_rng(2)
        out_deg = rng.integers(0, 6, size=60)
        g = build_configuration_model(out_deg, directed=True, seed=7)
        assert g.degrees("out").tolist() == out_deg.tolist()
        assert sorted(g.degrees("in").tolist()) == sorted(out_deg.tolist())

    def test_directed_explicit_in_degrees(self):
        out_deg = [2, 1, 0, 1]
        in_deg = [0, 1, 2, 1]
        g = build_configuration_model(out_deg, directed=True, seed=0, in_degrees=in_deg)
        assert g.degrees("out").tolist() == out_deg
        assert g.degrees("in").tolist() == in_deg

    def test_directed_in_out_sum_mismatch(self):
        with pytest.raises(ValueError, match="sums"):
            build_configuration_model([2, 0, 0], directed=True, in_degrees=[1, 0, 0])

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(1, 5), min_size=16, max_size=40), st.integers(0, 2**31))
    def test_simple_graph_with_exact_degrees(self, deg, seed):
        # min degree 1 and n >= 16 keep every sequence graphical
        # (Erdos-Gallai: 6k <= k(k-1) + (n-k) whenever n >= 8k - k^2)
        deg = list(deg)
        if sum(deg) % 2:
            deg[0] += 1
        g = build_configuration_model(deg, seed=seed)
        assert g.degrees().tolist() == deg
        edges = g.edge_array
        assert not np.any(edges[:, 0] == edges[:, 1])
        assert len(g.edge_set()) == g.num_edges


class TestMultimodal:
    def test_degrees_land_on_peaks(self):
        peaks = ((3, 0.5), (9, 0.5))
        g = build_multimodal(400, peaks, seed=11)
        degs = g.degrees()
        # the parity fix may bump one node off-peak by exactly +1
        on_peak = np.isin(degs, [3, 9])
        off = np.nonzero(~on_peak)[0]
        assert len(off) <= 1
        if len(off):
            assert degs[off[0]] in (4, 10)

    def test_peak_proportions(self):
        peaks = ((2, 0.25), (8, 0.75))
        g = build_multimodal(4000, peaks, seed=5)
        frac_low = np.mean(np.isin(g.degrees(), [2, 3]))
        assert abs(frac_low - 0.25) < 0.03


class TestPowerlaw:
    def test_support_and_parity(self):
        degs = sample_powerlaw_degrees(501, 2.5, 2, 40, seed=3)
        assert degs.min() >= 2 and degs.max() <= 40
        assert degs.sum() % 2 == 0
        assert len(degs) == 501

    def test_exponent_recovered_from_samples(self):
        degs = sample_powerlaw_degrees(100_000, 2.5, 1, 100, seed=0)
        ks, counts = np.unique(degs, return_counts=True)
        mask = (ks >= 2) & (ks <= 30) & (counts >= 10)
        slope = np.polyfit(np.log(ks[mask]), np.log(counts[mask]), 1)[0]
        assert slope == pytest.approx(-2.5, abs=0.2)

    def test_steep_exponent_concentrates_at_k_min(self):
        degs = sample_powerlaw_degrees(10_000, 50.0, 3, 60, seed=1)
        assert np.mean(degs == 3) > 0.99

    def test_graph_degrees_match_sample(self):
        rng = np.random.default_rng(12)
        degs = sample_powerlaw_degrees(600, 2.2, 1, 30, rng)
        g = build_configuration_model(degs, seed=rng)
        assert sorted(g.degrees().tolist()) == sorted(degs.tolist())

    def test_build_powerlaw_deterministic(self):
        a = build_powerlaw(300, 2.5, 1, 20, seed=8)
        b = build_powerlaw(300, 2.5, 1, 20, seed=8)
        assert a == b
        assert a != build_powerlaw(300, 2.5, 1, 20, seed=9)


class TestBuildNetwork:
    @pytest.mark.parametrize("family", FAMILIES)
    def test_dispatch_deterministic(self, family):
        spec = {
            "complete": NetworkSpec("complete", 12),
            "multimodal": NetworkSpec("multimodal", 50, seed=1, peaks=((2, 0.5), (4, 0.5))),
            "configmodel": NetworkSpec("configmodel", 20, seed=1, degrees=(2,) * 20),
            "powerlaw": NetworkSpec("powerlaw", 80, seed=1, alpha=2.5, k_min=1, k_max=10),
        }[family]
        assert build_network(spec) == build_network(spec)

    def test_configmodel_from_distribution(self):
        dist = DegreeDistribution({2: 10, 4: 5}, 15)
        g = build_network(NetworkSpec("configmodel", 15, distribution=dist))
        assert sorted(g.degrees().tolist()) == sorted(dist.to_sequence().tolist())

    def test_degree_distribution_of_graph(self):
        g = build_complete(6)
        assert degree_distribution(g).counts == {5: 6}

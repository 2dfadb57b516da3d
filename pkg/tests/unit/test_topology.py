"""Unit tests for src/network/topology.py."""

from __future__ import annotations

import numpy as np
import pytest

from src.network.topology import (
    NetworkError,
    band_costs,
    build_network,
    random_positions,
)
from tests.conftest import DEFAULT_BANDS, SEVERED


class TestBandCosts:
    def test_first_band(self):
        assert band_costs(np.array([50.0]), 500.0, DEFAULT_BANDS, 20.0)[0] == 2.0

    def test_band_edges_are_open_on_the_right(self):
        costs = band_costs(np.array([100.0, 300.0, 400.0]), 500.0, DEFAULT_BANDS, 20.0)
        assert costs.tolist() == [5.0, 7.0, 9.0]

    def test_last_band_closed(self):
        assert band_costs(np.array([500.0]), 500.0, DEFAULT_BANDS, 20.0)[0] == 9.0

    def test_beyond_range_is_sentinel(self):
        assert band_costs(np.array([600.0]), 500.0, DEFAULT_BANDS, 20.0)[0] == 20.0

    def test_range_shorter_than_bands(self):
        costs = band_costs(np.array([150.0, 250.0]), 200.0, DEFAULT_BANDS, 20.0)
        assert costs.tolist() == [5.0, 20.0]


class TestBuildNetwork:
    def test_two_devices_50m(self):
        net = build_network([(0, 0), (50, 0)], 500.0, DEFAULT_BANDS, 10.0, catalog_size=10, capacities=2)
        assert net.d2d_cost[0, 1] == 2.0
        assert net.d2d_cost[1, 0] == 2.0
        assert net.bs_cost.tolist() == [10.0, 10.0]

    def test_single_device(self):
        net = build_network([(0, 0)], 500.0, DEFAULT_BANDS, 10.0, catalog_size=10, capacities=2)
        assert net.device_count == 1
        assert net.bs_cost.tolist() == [10.0]
        assert net.d2d_cost.tolist() == [[0.0]]
        assert net.neighbourhood(0) == (0,)

    def test_two_devices_out_of_range(self):
        net = build_network([(0, 0), (600, 0)], 500.0, DEFAULT_BANDS, 10.0, catalog_size=10, capacities=2)
        assert net.d2d_cost[0, 1] == net.c_max
        assert net.neighbourhood(0) == (0,)
        assert net.neighbourhood(1) == (1,)

    def test_default_sentinel_exceeds_bs(self):
        net = build_network([(0, 0)], 500.0, DEFAULT_BANDS, 10.0, catalog_size=10, capacities=2)
        assert net.c_max == 20.0

    def test_rejects_band_cost_at_bs_cost(self):
        with pytest.raises(NetworkError):
            build_network([(0, 0)], 500.0, [(100.0, 10.0)], 10.0, catalog_size=10, capacities=2)

    def test_rejects_negative_cost(self):
        with pytest.raises(NetworkError):
            build_network([(0, 0)], 500.0, [(100.0, -1.0)], 10.0, catalog_size=10, capacities=2)

    def test_rejects_unsorted_bands(self):
        with pytest.raises(NetworkError):
            build_network(
                [(0, 0)], 500.0, [(300.0, 5.0), (100.0, 2.0)], 10.0, catalog_size=10, capacities=2
            )

    def test_rejects_empty_positions(self):
        with pytest.raises(NetworkError):
            build_network([], 500.0, DEFAULT_BANDS, 10.0, catalog_size=10, capacities=2)

    def test_rejects_capacity_not_below_catalog(self):
        with pytest.raises(NetworkError):
            build_network([(0, 0)], 500.0, DEFAULT_BANDS, 10.0, catalog_size=3, capacities=3)

    def test_deterministic(self):
        positions = random_positions(8, 1500.0, np.random.default_rng(3))
        a = build_network(positions, 500.0, DEFAULT_BANDS, 10.0, catalog_size=100, capacities=6)
        b = build_network(positions, 500.0, DEFAULT_BANDS, 10.0, catalog_size=100, capacities=6)
        np.testing.assert_array_equal(a.cost, b.cost)

    def test_symmetric_costs(self, reference_net):
        np.testing.assert_array_equal(reference_net.cost, reference_net.cost.T)

    def test_cost_matrix_is_read_only(self, reference_net):
        with pytest.raises(ValueError):
            reference_net.cost[1, 2] = 0.0


class TestNeighbourhood:
    def test_self_first_then_by_cost(self, star_net):
        assert star_net.neighbourhood(0) == (0, 1, 2)
        assert star_net.neighbourhood(1) == (1, 0)

    def test_ties_broken_by_index(self, network_factory):
        net = network_factory([[0, 5, 5], [5, 0, 20], [5, 20, 0]])
        assert net.neighbourhood(0) == (0, 1, 2)

    def test_never_includes_devices_beyond_range(self, reference_net):
        positions = reference_net.positions
        for i in range(reference_net.device_count):
            for j in reference_net.neighbourhood(i):
                assert np.linalg.norm(positions[i] - positions[j]) <= 500.0

    def test_j_star_counts_self_and_bs(self, star_net):
        assert star_net.j_star == 4

    def test_bound_parameters(self, star_net):
        assert star_net.c_star == 10.0
        assert star_net.max_capacity == 2

    def test_with_costs_keeps_the_rest(self, star_net):
        cost = np.array(star_net.cost)
        cost[1, 3] = cost[3, 1] = SEVERED
        changed = star_net.with_costs(cost)
        assert changed.neighbourhood(0) == (0, 1)
        assert star_net.neighbourhood(0) == (0, 1, 2)
        assert changed.catalog_size == star_net.catalog_size


class TestNetworkValidation:
    def test_rejects_live_link_not_below_bs(self, network_factory):
        with pytest.raises(NetworkError):
            network_factory([[0, 10], [10, 0]])

    def test_rejects_nonzero_self_cost(self, network_factory):
        with pytest.raises(NetworkError):
            network_factory([[1, 2], [2, 0]])

    def test_rejects_sentinel_below_bs(self, network_factory):
        with pytest.raises(NetworkError):
            network_factory([[0, 2], [2, 0]], c_max=9.0)


class TestRandomPositions:
    def test_inside_cell(self):
        positions = random_positions(50, 1500.0, np.random.default_rng(0))
        assert positions.shape == (50, 2)
        assert positions.min() >= 0.0
        assert positions.max() <= 1500.0

    def test_seeded(self):
        a = random_positions(8, 1500.0, np.random.default_rng(9))
        b = random_positions(8, 1500.0, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

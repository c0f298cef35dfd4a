"""Synthetic two-ring generator and query heat-map accumulation."""

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from alcurve.synthetic import (
    GridSpec,
    HeatMap,
    SyntheticConfig,
    accumulate_heatmap,
    generate_synthetic,
)


class TestSyntheticConfig:
    def test_defaults(self):
        cfg = SyntheticConfig()
        assert cfg.n_points == 600
        assert cfg.inner_radius == 0.5
        assert cfg.outer_radius == 1.0
        assert cfg.radial_gain == 1.3
        assert cfg.noise_sigma == 0.06
        assert cfg.neighbors == 10

    def test_radius_ordering_enforced(self):
        with pytest.raises(ValueError):
            SyntheticConfig(inner_radius=1.0, outer_radius=0.5)
        with pytest.raises(ValueError):
            SyntheticConfig(inner_radius=0.0)

    def test_neighbor_count_bounded(self):
        with pytest.raises(ValueError):
            SyntheticConfig(n_points=5, neighbors=5)
        with pytest.raises(ValueError):
            SyntheticConfig(neighbors=0)

    def test_noise_nonnegative(self):
        with pytest.raises(ValueError):
            SyntheticConfig(noise_sigma=-0.1)


class TestGenerator:
    def test_deterministic_per_seed(self):
        a = generate_synthetic(SyntheticConfig(n_points=80, seed=5))
        b = generate_synthetic(SyntheticConfig(n_points=80, seed=5))
        assert np.array_equal(a.features, b.features)
        assert a.edges == b.edges
        assert np.array_equal(a.gt_labels(), b.gt_labels())

    def test_seed_changes_output(self):
        a = generate_synthetic(SyntheticConfig(n_points=80, seed=1))
        b = generate_synthetic(SyntheticConfig(n_points=80, seed=2))
        assert not np.array_equal(a.features, b.features)

    def test_sample_count_and_full_gt(self):
        sg = generate_synthetic(SyntheticConfig(n_points=120, seed=0))
        assert len(sg) == 120
        assert sg.has_full_gt()

    def test_labels_follow_radius(self):
        cfg = SyntheticConfig(n_points=200, seed=3)
        sg = generate_synthetic(cfg)
        radii = np.linalg.norm(sg.positions, axis=1)
        assert np.array_equal(sg.gt_labels(), (radii < cfg.inner_radius).astype(int))
        assert np.all(radii <= cfg.outer_radius + 1e-12)

    def test_class_balance_near_area_ratio(self):
        # P(label=1) = (r_inner/r_outer)^2 = 0.25 under uniform area sampling
        total, positive = 0, 0
        for seed in range(5):
            sg = generate_synthetic(SyntheticConfig(n_points=400, seed=seed))
            positive += int(sg.gt_labels().sum())
            total += len(sg)
        frac = positive / total
        sd = np.sqrt(0.25 * 0.75 / total)
        assert abs(frac - 0.25) < 5 * sd

    def test_identity_warp_preserves_positions(self):
        cfg = SyntheticConfig(n_points=60, warp_angle=0.0, radial_gain=1.0,
                              noise_sigma=0.0, neighbors=5, seed=0)
        sg = generate_synthetic(cfg)
        assert np.allclose(sg.features, sg.positions)

    def test_warp_preserves_radius_up_to_gain(self):
        cfg = SyntheticConfig(n_points=100, noise_sigma=0.0, seed=1)
        sg = generate_synthetic(cfg)
        r_pos = np.linalg.norm(sg.positions, axis=1)
        r_feat = np.linalg.norm(sg.features, axis=1)
        assert np.allclose(r_feat, cfg.radial_gain * r_pos)

    def test_adjacency_symmetric_and_degree_bounded_below(self):
        cfg = SyntheticConfig(n_points=150, seed=2)
        sg = generate_synthetic(cfg)
        degree = np.zeros(len(sg), dtype=int)
        for i, j in sg.edges:
            assert sg.adjacent(j, i)
            degree[i] += 1
            degree[j] += 1
        # mutualized union can only add neighbours beyond the k nearest
        assert np.all(degree >= cfg.neighbors)

    def test_graph_connected(self):
        for seed in range(4):
            sg = generate_synthetic(SyntheticConfig(n_points=100, seed=seed))
            n = len(sg)
            rows = [i for i, j in sg.edges] + [j for i, j in sg.edges]
            cols = [j for i, j in sg.edges] + [i for i, j in sg.edges]
            adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
            n_comp, _ = connected_components(adj, directed=False)
            assert n_comp == 1


class TestHeatMap:
    def _grid(self):
        return GridSpec(x_min=0.0, x_max=1.0, y_min=0.0, y_max=1.0, nx=4, ny=4)

    def test_empty_log_all_zero(self):
        hm = accumulate_heatmap([], self._grid())
        assert hm.counts.shape == (4, 4)
        assert hm.total == 0
        assert hm.spill == 0

    def test_single_point_single_cell(self):
        hm = accumulate_heatmap([(0.1, 0.1)], self._grid())
        assert hm.counts[0, 0] == 1
        assert hm.counts.sum() == 1
        assert hm.total == 1

    def test_max_edge_lands_in_last_cell(self):
        hm = accumulate_heatmap([(1.0, 1.0)], self._grid())
        assert hm.counts[3, 3] == 1
        assert hm.spill == 0

    def test_out_of_range_counted_as_spill(self):
        hm = accumulate_heatmap([(2.0, 0.5), (-0.1, 0.5)], self._grid())
        assert hm.counts.sum() == 0
        assert hm.spill == 2
        assert hm.total == 2

    def test_order_invariance(self):
        rng = np.random.default_rng(0)
        points = rng.uniform(0, 1, (30, 2))
        a = accumulate_heatmap(points, self._grid())
        b = accumulate_heatmap(points[::-1], self._grid())
        assert np.array_equal(a.counts, b.counts)

    def test_cell_assignment_matches_floor_rule(self):
        hm = accumulate_heatmap([(0.26, 0.74)], self._grid())
        assert hm.counts[2, 1] == 1  # iy = floor(0.74*4), ix = floor(0.26*4)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            GridSpec(x_min=1.0, x_max=0.0, y_min=0.0, y_max=1.0)
        with pytest.raises(ValueError):
            GridSpec(x_min=0.0, x_max=1.0, y_min=0.0, y_max=1.0, nx=0)

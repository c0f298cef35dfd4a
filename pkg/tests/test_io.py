"""Lossless persistence of graphs, models, trees, and heat maps."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alcurve.classifier import BoostConfig, predict_scores, train_boosted
from alcurve.graph import Sample, SampleGraph, SpatialEdge, SpatialGraph
from alcurve.io import (
    FORMAT_VERSION,
    FormatError,
    load_any_graph,
    load_graph_with_source,
    load_model,
    load_sample_graph,
    load_spatial_graph,
    model_from_dict,
    model_to_dict,
    read_heatmap_csv,
    sample_graph_from_dict,
    sample_graph_to_dict,
    save_model,
    save_sample_graph,
    save_spatial_graph,
    spatial_graph_from_dict,
    spatial_graph_to_dict,
    tree_from_dict,
    tree_to_dict,
    write_heatmap_csv,
)
from alcurve.reconstruction import Tree
from alcurve.synthetic import GridSpec, SyntheticConfig, accumulate_heatmap, generate_synthetic


def _spatial_graph():
    rng = np.random.default_rng(0)
    nodes = rng.uniform(0, 100, (5, 2))
    edges = []
    for k, (a, b) in enumerate([(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]):
        mid = (nodes[a] + nodes[b]) / 2 + rng.normal(0, 1, 2)
        edges.append(SpatialEdge(
            node_a=a, node_b=b,
            polyline=np.vstack([nodes[a], mid, nodes[b]]),
            features=rng.normal(size=4),
            gt_label=(k % 2) if k < 4 else None,
        ))
    return SpatialGraph(nodes=nodes, edges=tuple(edges))


def _sample_graph():
    rng = np.random.default_rng(1)
    samples = [
        Sample(features=rng.normal(size=3),
               gt_label=int(rng.integers(2)),
               position=rng.uniform(0, 10, 2))
        for _ in range(6)
    ]
    return SampleGraph(samples, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)])


class TestSpatialGraphFormat:
    def test_round_trip_exact(self, tmp_path):
        g = _spatial_graph()
        path = tmp_path / "g.json"
        save_spatial_graph(g, path)
        back = load_spatial_graph(path)
        assert np.array_equal(back.nodes, g.nodes)
        assert len(back.edges) == len(g.edges)
        for e0, e1 in zip(g.edges, back.edges):
            assert (e0.node_a, e0.node_b) == (e1.node_a, e1.node_b)
            assert np.array_equal(e0.polyline, e1.polyline)
            assert np.array_equal(e0.features, e1.features)
            assert e0.gt_label == e1.gt_label

    def test_header_identifies_format(self, tmp_path):
        g = _spatial_graph()
        path = tmp_path / "g.json"
        save_spatial_graph(g, path)
        doc = json.loads(path.read_text())
        assert doc["format"] == "spatial-graph"
        assert doc["version"] == FORMAT_VERSION
        assert doc["feature_dim"] == 4

    def test_wrong_format_rejected(self, tmp_path):
        sg = _sample_graph()
        path = tmp_path / "sg.json"
        save_sample_graph(sg, path)
        with pytest.raises(FormatError):
            load_spatial_graph(path)

    def test_future_version_rejected(self):
        doc = spatial_graph_to_dict(_spatial_graph())
        doc["version"] = FORMAT_VERSION + 1
        with pytest.raises(FormatError):
            spatial_graph_from_dict(doc)

    def test_nonconsecutive_node_ids_rejected(self):
        doc = spatial_graph_to_dict(_spatial_graph())
        doc["nodes"][0]["id"] = 99
        with pytest.raises(FormatError):
            spatial_graph_from_dict(doc)

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("not json at all")
        with pytest.raises(FormatError):
            load_spatial_graph(path)


class TestSampleGraphFormat:
    def test_round_trip_exact(self, tmp_path):
        sg = _sample_graph()
        path = tmp_path / "sg.json"
        save_sample_graph(sg, path)
        back = load_sample_graph(path)
        assert np.array_equal(back.features, sg.features)
        assert np.array_equal(back.positions, sg.positions)
        assert back.edges == sg.edges
        assert np.array_equal(back.gt_labels(), sg.gt_labels())

    def test_missing_gt_survives(self, tmp_path):
        samples = [Sample(features=np.array([float(i)])) for i in range(3)]
        sg = SampleGraph(samples, [(0, 1), (1, 2)])
        path = tmp_path / "sg.json"
        save_sample_graph(sg, path)
        back = load_sample_graph(path)
        assert back.gt_labels().tolist() == [-1, -1, -1]
        assert not back.has_full_gt()

    def test_synthetic_graph_round_trip(self, tmp_path):
        sg = generate_synthetic(SyntheticConfig(n_points=60, seed=0))
        path = tmp_path / "syn.json"
        save_sample_graph(sg, path)
        back = load_sample_graph(path)
        assert np.array_equal(back.features, sg.features)
        assert back.edges == sg.edges

    @given(st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_round_trip_property(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 10))
        samples = [
            Sample(features=rng.normal(size=2),
                   gt_label=int(rng.integers(2)) if rng.uniform() < 0.5 else None,
                   position=rng.uniform(0, 1, 2) if rng.uniform() < 0.5 else None)
            for _ in range(n)
        ]
        pairs = {(int(a), int(b)) for a, b in rng.integers(0, n, (n, 2)) if a != b}
        sg = SampleGraph(samples, pairs)
        back = sample_graph_from_dict(sample_graph_to_dict(sg))
        assert np.array_equal(back.features, sg.features)
        assert back.edges == sg.edges
        assert np.array_equal(back.gt_labels(), sg.gt_labels())
        for s0, s1 in zip(sg.samples, back.samples):
            if s0.position is None:
                assert s1.position is None
            else:
                assert np.array_equal(s0.position, s1.position)


class TestLoadAnyGraph:
    def test_dispatches_on_format(self, tmp_path):
        sp, sg = tmp_path / "sp.json", tmp_path / "sg.json"
        save_spatial_graph(_spatial_graph(), sp)
        save_sample_graph(_sample_graph(), sg)
        from_spatial = load_any_graph(sp)
        from_samples = load_any_graph(sg)
        assert len(from_spatial) == 5  # one sample per spatial edge
        assert len(from_samples) == 6

    def test_source_graph_returned_for_spatial_input(self, tmp_path):
        sp = tmp_path / "sp.json"
        save_spatial_graph(_spatial_graph(), sp)
        sg, source = load_graph_with_source(sp)
        assert source is not None
        assert len(sg) == len(source.edges)

    def test_no_source_for_sample_input(self, tmp_path):
        path = tmp_path / "sg.json"
        save_sample_graph(_sample_graph(), path)
        _, source = load_graph_with_source(path)
        assert source is None


class TestModelFormat:
    def _model(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(40, 3))
        y = (X[:, 0] + 0.2 * X[:, 1] > 0).astype(int)
        return train_boosted(X, y, BoostConfig(n_learners=12), seed=0), X

    def test_round_trip_predictions_identical(self, tmp_path):
        model, X = self._model()
        path = tmp_path / "m.json"
        save_model(model, path)
        back = load_model(path)
        assert back.n_features == model.n_features
        assert back.base_score == model.base_score
        assert back.shrinkage == model.shrinkage
        assert np.array_equal(predict_scores(back, X), predict_scores(model, X))

    def test_dict_round_trip_through_json(self):
        model, X = self._model()
        doc = json.loads(json.dumps(model_to_dict(model)))
        back = model_from_dict(doc)
        assert np.array_equal(predict_scores(back, X), predict_scores(model, X))

    def test_version_checked(self):
        model, _ = self._model()
        doc = model_to_dict(model)
        doc["version"] = 999
        with pytest.raises(FormatError):
            model_from_dict(doc)


class TestTreeFormat:
    def test_round_trip(self):
        t = Tree(root=3, edge_indices=(5, 2, 9))
        back = tree_from_dict(json.loads(json.dumps(tree_to_dict(t))))
        assert back == t

    def test_format_checked(self):
        doc = tree_to_dict(Tree(root=0, edge_indices=()))
        doc["format"] = "something-else"
        with pytest.raises(FormatError):
            tree_from_dict(doc)


class TestHeatmapCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        grid = GridSpec(x_min=-1.5, x_max=1.5, y_min=-1.5, y_max=1.5, nx=8, ny=6)
        hm = accumulate_heatmap(rng.uniform(-2, 2, (200, 2)), grid)
        path = tmp_path / "hm.csv"
        write_heatmap_csv(hm, path)
        back = read_heatmap_csv(path)
        assert np.array_equal(back.counts, hm.counts)
        assert back.spill == hm.spill
        assert back.grid == hm.grid

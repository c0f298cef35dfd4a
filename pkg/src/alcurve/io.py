"""File formats: spatial graphs, sample graphs, trained models, heat-maps.

All formats are versioned JSON documents.  Floats survive a round-trip
bit-exactly (json emits shortest repr, which Python parses back to the
same double), so save/load is lossless.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .classifier import BoostedModel, RegressionTree
from .graph import Sample, SampleGraph, SpatialEdge, SpatialGraph
from .reconstruction import Tree
from .synthetic import GridSpec, HeatMap

SPATIAL_GRAPH_FORMAT = "spatial-graph"
SAMPLE_GRAPH_FORMAT = "sample-graph"
MODEL_FORMAT = "boosted-model"
TREE_FORMAT = "extracted-tree"
FORMAT_VERSION = 1


class FormatError(ValueError):
    """Document is not a recognized alcurve file."""


def _check_header(doc: dict, expected: str) -> None:
    if not isinstance(doc, dict) or doc.get("format") != expected:
        raise FormatError(f"expected a {expected!r} document")
    if doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"unsupported {expected} version {doc.get('version')!r}")


def _dump(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def _load(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {path}") from exc


# -- spatial graphs ---------------------------------------------------------

def spatial_graph_to_dict(g: SpatialGraph) -> dict:
    nodes = [
        {"id": i, **dict(zip("xyz", map(float, row)))}
        for i, row in enumerate(np.atleast_2d(g.nodes))
    ]
    edges = []
    for i, e in enumerate(g.edges):
        rec = {
            "id": i,
            "node_a": e.node_a,
            "node_b": e.node_b,
            "polyline": e.polyline.tolist(),
            "features": e.features.tolist(),
        }
        if e.gt_label is not None:
            rec["gt_label"] = e.gt_label
        edges.append(rec)
    feature_dim = g.edges[0].features.size if g.edges else 0
    return {
        "format": SPATIAL_GRAPH_FORMAT,
        "version": FORMAT_VERSION,
        "feature_dim": feature_dim,
        "nodes": nodes,
        "edges": edges,
    }


def spatial_graph_from_dict(doc: dict) -> SpatialGraph:
    _check_header(doc, SPATIAL_GRAPH_FORMAT)
    node_recs = sorted(doc["nodes"], key=lambda r: r["id"])
    if [r["id"] for r in node_recs] != list(range(len(node_recs))):
        raise FormatError("node ids must be 0..n-1")
    dims = ["x", "y"] + (["z"] if node_recs and "z" in node_recs[0] else [])
    nodes = np.array([[r[d] for d in dims] for r in node_recs], dtype=np.float64)
    edge_recs = sorted(doc["edges"], key=lambda r: r["id"])
    if [r["id"] for r in edge_recs] != list(range(len(edge_recs))):
        raise FormatError("edge ids must be 0..n-1")
    edges = [
        SpatialEdge(
            node_a=int(r["node_a"]),
            node_b=int(r["node_b"]),
            polyline=np.array(r["polyline"], dtype=np.float64),
            features=np.array(r["features"], dtype=np.float64),
            gt_label=r.get("gt_label"),
        )
        for r in edge_recs
    ]
    for e in edges:
        if e.features.size != doc["feature_dim"]:
            raise FormatError("edge feature length disagrees with feature_dim")
    return SpatialGraph(nodes=nodes, edges=tuple(edges))


def save_spatial_graph(g: SpatialGraph, path) -> None:
    _dump(spatial_graph_to_dict(g), path)


def load_spatial_graph(path) -> SpatialGraph:
    return spatial_graph_from_dict(_load(path))


# -- sample graphs ----------------------------------------------------------

def sample_graph_to_dict(sg: SampleGraph) -> dict:
    samples = []
    for i, s in enumerate(sg.samples):
        rec: dict = {"id": i, "features": s.features.tolist()}
        if s.gt_label is not None:
            rec["gt_label"] = s.gt_label
        if s.position is not None:
            rec["position"] = s.position.tolist()
        samples.append(rec)
    return {
        "format": SAMPLE_GRAPH_FORMAT,
        "version": FORMAT_VERSION,
        "feature_dim": sg.feature_dim,
        "samples": samples,
        "adjacency": [list(pair) for pair in sg.edges],
    }


def sample_graph_from_dict(doc: dict) -> SampleGraph:
    _check_header(doc, SAMPLE_GRAPH_FORMAT)
    recs = sorted(doc["samples"], key=lambda r: r["id"])
    if [r["id"] for r in recs] != list(range(len(recs))):
        raise FormatError("sample ids must be 0..n-1")
    samples = [
        Sample(
            features=np.array(r["features"], dtype=np.float64),
            gt_label=r.get("gt_label"),
            position=None if r.get("position") is None else np.array(r["position"]),
        )
        for r in recs
    ]
    return SampleGraph(samples, [(int(a), int(b)) for a, b in doc["adjacency"]])


def save_sample_graph(sg: SampleGraph, path) -> None:
    _dump(sample_graph_to_dict(sg), path)


def load_sample_graph(path) -> SampleGraph:
    return sample_graph_from_dict(_load(path))


def load_any_graph(path) -> SampleGraph:
    """Load a sample graph, converting a spatial-graph document if needed."""
    return load_graph_with_source(path)[0]


def load_graph_with_source(path) -> tuple[SampleGraph, SpatialGraph | None]:
    """Like load_any_graph, but keeps the source geometry when the document
    is a spatial graph (sample i corresponds to edge i)."""
    from .graph import from_spatial_graph

    doc = _load(path)
    if doc.get("format") == SPATIAL_GRAPH_FORMAT:
        g = spatial_graph_from_dict(doc)
        return from_spatial_graph(g), g
    return sample_graph_from_dict(doc), None


# -- boosted models ---------------------------------------------------------

def model_to_dict(m: BoostedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": FORMAT_VERSION,
        "shrinkage": m.shrinkage,
        "base_score": m.base_score,
        "n_features": m.n_features,
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "value": t.value.tolist(),
            }
            for t in m.trees
        ],
    }


def model_from_dict(doc: dict) -> BoostedModel:
    _check_header(doc, MODEL_FORMAT)
    trees = [
        RegressionTree(
            feature=np.array(t["feature"], dtype=np.int64),
            threshold=np.array(t["threshold"], dtype=np.float64),
            left=np.array(t["left"], dtype=np.int64),
            right=np.array(t["right"], dtype=np.int64),
            value=np.array(t["value"], dtype=np.float64),
        )
        for t in doc["trees"]
    ]
    return BoostedModel(
        trees=trees,
        shrinkage=float(doc["shrinkage"]),
        base_score=float(doc["base_score"]),
        n_features=int(doc["n_features"]),
    )


def save_model(m: BoostedModel, path) -> None:
    _dump(model_to_dict(m), path)


def load_model(path) -> BoostedModel:
    return model_from_dict(_load(path))


# -- extracted trees --------------------------------------------------------

def tree_to_dict(t: Tree) -> dict:
    return {
        "format": TREE_FORMAT,
        "version": FORMAT_VERSION,
        "root": t.root,
        "edge_indices": list(t.edge_indices),
    }


def tree_from_dict(doc: dict) -> Tree:
    _check_header(doc, TREE_FORMAT)
    return Tree(root=int(doc["root"]), edge_indices=tuple(int(i) for i in doc["edge_indices"]))


# -- heat-maps --------------------------------------------------------------

def write_heatmap_csv(hm: HeatMap, path) -> None:
    """Dense grid table: one row per cell plus grid metadata in comments."""
    g = hm.grid
    lines = [
        f"# x_min={g.x_min!r} x_max={g.x_max!r} y_min={g.y_min!r} y_max={g.y_max!r}",
        f"# nx={g.nx} ny={g.ny} spill={hm.spill}",
        "ix,iy,count",
    ]
    for iy in range(g.ny):
        for ix in range(g.nx):
            lines.append(f"{ix},{iy},{hm.counts[iy, ix]}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_heatmap_csv(path) -> HeatMap:
    text = Path(path).read_text().strip().splitlines()
    meta: dict[str, float] = {}
    rows = []
    for line in text:
        if line.startswith("#"):
            for tok in line[1:].split():
                key, val = tok.split("=")
                meta[key] = float(val)
        elif line and not line.startswith("ix,"):
            rows.append(tuple(int(v) for v in line.split(",")))
    grid = GridSpec(
        x_min=meta["x_min"],
        x_max=meta["x_max"],
        y_min=meta["y_min"],
        y_max=meta["y_max"],
        nx=int(meta["nx"]),
        ny=int(meta["ny"]),
    )
    counts = np.zeros((grid.ny, grid.nx), dtype=np.int64)
    for ix, iy, c in rows:
        counts[iy, ix] = c
    return HeatMap(counts=counts, grid=grid, spill=int(meta["spill"]))

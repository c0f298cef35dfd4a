"""Sample-adjacency data model.

A :class:`SampleGraph` holds one sample per candidate path together with a
symmetric adjacency relation ("consecutive paths").  It is built either
from a :class:`SpatialGraph` (two samples are adjacent iff their edges
share a node) or directly, e.g. by the synthetic generator which connects
nearest neighbours in image space.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np


class EmptyGraphError(ValueError):
    """Raised when an operation needs at least one edge/sample."""


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Sample:
    """A candidate path: feature vector, optional ground truth, optional position.

    ``position`` is a 2-D or 3-D coordinate in pixel/voxel units, used only
    for display and heat-maps.
    """

    features: np.ndarray
    gt_label: int | None = None
    position: np.ndarray | None = None

    def __post_init__(self) -> None:
        feats = _as_readonly(np.atleast_1d(np.asarray(self.features, dtype=np.float64)))
        if feats.ndim != 1 or feats.size < 1:
            raise ValueError("features must be a non-empty 1-D vector")
        if not np.all(np.isfinite(feats)):
            raise ValueError("feature entries must be finite")
        object.__setattr__(self, "features", feats)
        if self.gt_label is not None and self.gt_label not in (0, 1):
            raise ValueError(f"gt_label must be 0 or 1, got {self.gt_label!r}")
        if self.position is not None:
            pos = _as_readonly(np.atleast_1d(np.asarray(self.position, dtype=np.float64)))
            if pos.size not in (2, 3):
                raise ValueError("position must be 2-D or 3-D")
            object.__setattr__(self, "position", pos)


class SampleGraph:
    """Immutable collection of samples plus a symmetric, irreflexive adjacency.

    Safe to share across concurrent readers; all mutation of labelling
    state lives outside in :class:`LabelSet`.
    """

    def __init__(self, samples: Sequence[Sample], adjacency: Iterable[tuple[int, int]]):
        if len(samples) == 0:
            raise EmptyGraphError("a sample graph needs at least one sample")
        self._samples = tuple(samples)
        n = len(self._samples)
        dim = self._samples[0].features.size
        for s in self._samples:
            if s.features.size != dim:
                raise ValueError("all feature vectors must share one dimension")
        neighbors: list[set[int]] = [set() for _ in range(n)]
        edges: set[tuple[int, int]] = set()
        for i, j in adjacency:
            i, j = int(i), int(j)
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"adjacency refers to missing sample ({i}, {j})")
            if i == j:
                raise ValueError("adjacency must be irreflexive")
            neighbors[i].add(j)
            neighbors[j].add(i)
            edges.add((min(i, j), max(i, j)))
        self._neighbors = tuple(frozenset(s) for s in neighbors)
        self._edges = tuple(sorted(edges))
        self._features = _as_readonly(np.stack([s.features for s in self._samples]))
        if all(s.position is not None for s in self._samples):
            self._positions = _as_readonly(np.stack([s.position for s in self._samples]))
        else:
            self._positions = None

    def __len__(self) -> int:
        return len(self._samples)

    @property
    def samples(self) -> tuple[Sample, ...]:
        return self._samples

    @property
    def feature_dim(self) -> int:
        return self._features.shape[1]

    @property
    def features(self) -> np.ndarray:
        """(N, d) read-only feature matrix."""
        return self._features

    @property
    def positions(self) -> np.ndarray | None:
        """(N, 2|3) positions, or None if any sample lacks one."""
        return self._positions

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """Adjacency as sorted (i, j) pairs with i < j, each pair once."""
        return self._edges

    def neighbors(self, i: int) -> frozenset[int]:
        return self._neighbors[i]

    def adjacent(self, i: int, j: int) -> bool:
        return j in self._neighbors[i]

    def gt_label(self, i: int) -> int | None:
        return self._samples[i].gt_label

    def gt_labels(self) -> np.ndarray:
        """(N,) int array of ground-truth labels, -1 where absent."""
        return np.array(
            [-1 if s.gt_label is None else s.gt_label for s in self._samples], dtype=np.int64
        )

    def has_full_gt(self) -> bool:
        return all(s.gt_label is not None for s in self._samples)


class LabelSet:
    """Ordered map from sample index to binary label.

    Insertion order is the annotation order; an index may be added once.
    One owner mutates a LabelSet per session; readers should copy.
    """

    def __init__(self, n_samples: int | None = None):
        self._entries: dict[int, int] = {}
        self._n = n_samples

    def add(self, index: int, label: int) -> None:
        index = int(index)
        if index in self._entries:
            raise ValueError(f"sample {index} is already labelled")
        if self._n is not None and not (0 <= index < self._n):
            raise ValueError(f"sample index {index} out of range")
        if label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {label!r}")
        self._entries[index] = int(label)

    def __contains__(self, index: int) -> bool:
        return index in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries.items())

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(self._entries)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(self._entries.values())

    def label(self, index: int) -> int:
        return self._entries[index]

    def copy(self) -> "LabelSet":
        out = LabelSet(self._n)
        out._entries = dict(self._entries)
        return out


@dataclass(frozen=True)
class SpatialEdge:
    """Edge of an overcomplete spatial graph: a candidate tubular path."""

    node_a: int
    node_b: int
    polyline: np.ndarray
    features: np.ndarray
    gt_label: int | None = None

    def __post_init__(self) -> None:
        poly = np.atleast_2d(np.asarray(self.polyline, dtype=np.float64))
        if poly.shape[0] < 1 or poly.shape[1] not in (2, 3):
            raise ValueError("polyline must be a non-empty sequence of 2-D/3-D points")
        object.__setattr__(self, "polyline", _as_readonly(poly))
        object.__setattr__(
            self, "features", _as_readonly(np.atleast_1d(np.asarray(self.features, np.float64)))
        )
        if self.gt_label is not None and self.gt_label not in (0, 1):
            raise ValueError("gt_label must be 0 or 1")


@dataclass(frozen=True)
class SpatialGraph:
    """Overcomplete spatial graph: nodes with coordinates, edges with geometry."""

    nodes: np.ndarray
    edges: tuple[SpatialEdge, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=np.float64))
        if nodes.shape[1] not in (2, 3):
            raise ValueError("node coordinates must be 2-D or 3-D")
        object.__setattr__(self, "nodes", _as_readonly(nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        n = nodes.shape[0]
        dims = {e.features.size for e in self.edges}
        if len(dims) > 1:
            raise ValueError("edge feature vectors must share one dimension")
        for e in self.edges:
            if not (0 <= e.node_a < n and 0 <= e.node_b < n):
                raise ValueError(f"edge endpoint out of range: ({e.node_a}, {e.node_b})")


def from_spatial_graph(g: SpatialGraph) -> SampleGraph:
    """One sample per edge; samples adjacent iff their edges share a node.

    Sample positions are set to the midpoint of each edge polyline
    (point at half arclength).
    """
    if len(g.edges) == 0:
        raise EmptyGraphError("spatial graph has no edges")
    samples = [
        Sample(
            features=e.features,
            gt_label=e.gt_label,
            position=_polyline_point_at(e.polyline, 0.5),
        )
        for e in g.edges
    ]
    by_node: dict[int, list[int]] = {}
    for idx, e in enumerate(g.edges):
        by_node.setdefault(e.node_a, []).append(idx)
        by_node.setdefault(e.node_b, []).append(idx)
    adjacency = set()
    for incident in by_node.values():
        for a, b in itertools.combinations(sorted(incident), 2):
            if a != b:
                adjacency.add((a, b))
    return SampleGraph(samples, adjacency)


def _polyline_arclengths(poly: np.ndarray) -> np.ndarray:
    """Cumulative arclength at each vertex, starting at 0."""
    if poly.shape[0] == 1:
        return np.zeros(1)
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])

def _polyline_point_at(poly: np.ndarray, fraction: float) -> np.ndarray:
    """Point at the given fraction of total arclength."""
    cum = _polyline_arclengths(poly)
    total = cum[-1]
    if total == 0.0:
        return poly[0]
    target = fraction * total
    k = int(np.searchsorted(cum, target, side="right") - 1)
    k = min(k, poly.shape[0] - 2)
    seg_len = cum[k + 1] - cum[k]
    t = 0.0 if seg_len == 0 else (target - cum[k]) / seg_len
    return poly[k] + t * (poly[k + 1] - poly[k])

def _resample_polyline(poly: np.ndarray, step: float = 1.0) -> np.ndarray:
    """Points every `step` units of arclength, endpoints included."""
    cum = _polyline_arclengths(poly)
    total = cum[-1]
    if total == 0.0:
        return poly[:1]
    targets = np.arange(0.0, total, step)
    targets = np.append(targets, total)
    k = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, poly.shape[0] - 2)
    seg_len = cum[k + 1] - cum[k]
    t = np.where(seg_len > 0, (targets - cum[k]) / np.where(seg_len > 0, seg_len, 1.0), 0.0)
    return poly[k] + t[:, None] * (poly[k + 1] - poly[k])

def _point_segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point to the segment a-b."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(points - proj, axis=1)

def _min_distance_to_traces(points: np.ndarray, traces: Sequence[np.ndarray]) -> np.ndarray:
    """Distance from each point to the nearest trace polyline."""
    best = np.full(points.shape[0], np.inf)
    for trace in traces:
        tr = np.atleast_2d(np.asarray(trace, dtype=np.float64))
        if tr.shape[0] == 1:
            np.minimum(best, np.linalg.norm(points - tr[0], axis=1), out=best)
            continue
        for k in range(tr.shape[0] - 1):
            np.minimum(best, _point_segment_distances(points, tr[k], tr[k + 1]), out=best)
    return best


def match_ground_truth(
    g: SpatialGraph,
    traces: Sequence[np.ndarray],
    dist_thresh: float = 10.0,
    overlap_thresh: float = 0.5,
) -> list[int]:
    """Label each edge against ground-truth traces.

    An edge is positive iff the farthest point of its polyline (sampled
    every 1 px of arclength) lies within ``dist_thresh`` of a trace AND the
    covered-arclength fraction strictly exceeds ``overlap_thresh``.
    The covered fraction is approximated by the fraction of unit-arclength
    sample points within ``dist_thresh``.
    """
    if dist_thresh <= 0 or overlap_thresh <= 0:
        raise ValueError("thresholds must be positive")
    labels = []
    for e in g.edges:
        if len(traces) == 0:
            labels.append(0)
            continue
        pts = _resample_polyline(e.polyline, step=1.0)
        d = _min_distance_to_traces(pts, traces)
        covered = float(np.mean(d <= dist_thresh))
        labels.append(1 if (d.max() <= dist_thresh and covered > overlap_thresh) else 0)
    return labels


def candidate_batches(
    sg: SampleGraph, k: int, labeled: LabelSet | Iterable[int]
) -> list[tuple[int, ...]]:
    """All unordered sets of k unlabeled samples forming a connected walk.

    Each set is reported once, as a sorted index tuple.  ``labeled`` may be
    a :class:`LabelSet` or any iterable of indices to exclude (e.g. labelled
    plus held-out evaluation samples).  Returns [] when no batch exists;
    callers fall back to k-1.

    Only k <= 3 is supported: batch scores are evaluated by exhaustive
    enumeration, which the selection strategies rely on.
    """
    excluded = set(labeled.indices) if isinstance(labeled, LabelSet) else set(labeled)
    eligible = [i for i in range(len(sg)) if i not in excluded]
    if not 1 <= k <= len(eligible):
        raise ValueError(f"k={k} out of range for {len(eligible)} unlabeled samples")
    if k > 3:
        raise ValueError("batches longer than 3 are not supported")
    if k == 1:
        return [(i,) for i in eligible]
    elig = set(eligible)
    if k == 2:
        return [(i, j) for i, j in sg.edges if i in elig and j in elig]
    # k == 3: a connected 3-set always contains a center adjacent to the
    # other two, so enumerate (a, center, c) and deduplicate.
    found: set[tuple[int, int, int]] = set()
    for center in eligible:
        nbrs = sorted(n for n in sg.neighbors(center) if n in elig)
        for a, c in itertools.combinations(nbrs, 2):
            found.add(tuple(sorted((a, center, c))))
    return sorted(found)

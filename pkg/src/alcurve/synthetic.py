"""Synthetic two-ring dataset: a positive disk surrounded by negatives.

Points are drawn uniformly in a disk; the label depends on the image-space
radius, while the classifier only ever sees warped, noisy features.  The
warp twists each point about the origin in proportion to its radius and
stretches it radially, so feature-space structure and image-space adjacency
genuinely disagree.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .graph import Sample, SampleGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyntheticConfig:
    n_points: int = 600
    inner_radius: float = 0.5
    outer_radius: float = 1.0
    warp_angle: float = np.pi / 6
    radial_gain: float = 1.3
    noise_sigma: float = 0.06
    neighbors: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.inner_radius < self.outer_radius:
            raise ValueError("need 0 < inner_radius < outer_radius")
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if not 0 < self.neighbors < self.n_points:
            raise ValueError("neighbors must lie in 1..n_points-1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.radial_gain <= 0:
            raise ValueError("radial_gain must be positive")


def _warp(points: np.ndarray, cfg: SyntheticConfig, rng: np.random.Generator) -> np.ndarray:
    radii = np.linalg.norm(points, axis=1)
    theta = cfg.warp_angle * radii / cfg.outer_radius
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    rotated = np.column_stack(
        [
            cos_t * points[:, 0] - sin_t * points[:, 1],
            sin_t * points[:, 0] + cos_t * points[:, 1],
        ]
    )
    warped = cfg.radial_gain * rotated
    if cfg.noise_sigma > 0:
        warped = warped + rng.normal(0.0, cfg.noise_sigma, size=warped.shape)
    return warped


def _mutual_knn_adjacency(points: np.ndarray, k: int) -> set[tuple[int, int]]:
    tree = cKDTree(points)
    # k+1 because each point is its own nearest neighbor
    _, nn = tree.query(points, k=k + 1)
    pairs: set[tuple[int, int]] = set()
    for i, row in enumerate(nn):
        for j in row[1:]:
            a, b = (i, int(j)) if i < j else (int(j), i)
            pairs.add((a, b))
    return pairs


def _is_connected(n: int, pairs: set[tuple[int, int]]) -> bool:
    if not pairs:
        return n == 1
    rows = [a for a, b in pairs] + [b for a, b in pairs]
    cols = [b for a, b in pairs] + [a for a, b in pairs]
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_comp, _ = connected_components(adj, directed=False)
    return n_comp == 1


def generate_synthetic(cfg: SyntheticConfig = SyntheticConfig(), max_attempts: int = 20) -> SampleGraph:
    """Sample the dataset; retries with the next seed if the mutual-kNN
    graph comes out disconnected (logged, rare at default density)."""
    for attempt in range(max_attempts):
        seed = cfg.seed + attempt
        rng = np.random.default_rng(seed)
        u = rng.random(cfg.n_points)
        phi = rng.random(cfg.n_points) * 2.0 * np.pi
        radii = cfg.outer_radius * np.sqrt(u)
        points = np.column_stack([radii * np.cos(phi), radii * np.sin(phi)])
        labels = (radii < cfg.inner_radius).astype(int)
        features = _warp(points, cfg, rng)
        pairs = _mutual_knn_adjacency(points, cfg.neighbors)
        if not _is_connected(cfg.n_points, pairs):
            log.warning("synthetic graph disconnected at seed %d; retrying", seed)
            continue
        samples = [
            Sample(features=features[i], gt_label=int(labels[i]), position=points[i])
            for i in range(cfg.n_points)
        ]
        return SampleGraph(samples=samples, adjacency=pairs)
    raise RuntimeError(f"no connected graph within {max_attempts} seeds of {cfg.seed}")


@dataclass(frozen=True)
class GridSpec:
    """Rectangular binning of the 2-D feature plane."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int = 32
    ny: int = 32

    def __post_init__(self) -> None:
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("grid extent must be positive in both axes")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid must have at least one cell per axis")


@dataclass
class HeatMap:
    """Query counts per feature-space cell; out-of-range points land in spill."""

    counts: np.ndarray
    grid: GridSpec
    spill: int = 0

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.spill


def accumulate_heatmap(query_log, grid: GridSpec) -> HeatMap:
    """Bin queried feature vectors onto the grid.

    query_log is any iterable of 2-D feature points (e.g. the feature
    vectors of every queried sample across trials).  Points exactly on
    the max edge fall into the last cell.
    """
    counts = np.zeros((grid.ny, grid.nx), dtype=np.int64)
    spill = 0
    dx = (grid.x_max - grid.x_min) / grid.nx
    dy = (grid.y_max - grid.y_min) / grid.ny
    for point in query_log:
        x, y = float(point[0]), float(point[1])
        if not (grid.x_min <= x <= grid.x_max and grid.y_min <= y <= grid.y_max):
            spill += 1
            continue
        ix = min(int((x - grid.x_min) / dx), grid.nx - 1)
        iy = min(int((y - grid.y_min) / dy), grid.ny - 1)
        counts[iy, ix] += 1
    return HeatMap(counts=counts, grid=grid, spill=spill)

"""Path classifier: gradient boosted trees with exponential loss.

Small axis-aligned regression trees are fit stagewise to the negative
gradient of the exponential loss, each stage on a fresh row subsample
with a per-split random feature subset.  A bagged-tree committee backs
the query-by-committee baseline.

Tie-breaking is pinned everywhere (lowest feature index, then lowest
threshold) so training is bit-reproducible for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit


class DegenerateModelError(ValueError):
    """Training data contains a single class."""


@dataclass(frozen=True)
class BoostConfig:
    """Boosting hyperparameters; defaults follow the interactive regime.

    features_per_split <= 0 means min(50, d), resolved at fit time.
    """

    n_learners: int = 50
    max_depth: int = 2
    shrinkage: float = 0.06
    row_subsample: float = 0.5
    features_per_split: int = 0

    def __post_init__(self) -> None:
        if self.n_learners < 1:
            raise ValueError("n_learners must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must lie in (0, 1]")
        if not 0.0 < self.row_subsample <= 1.0:
            raise ValueError("row_subsample must lie in (0, 1]")

    def resolve_features_per_split(self, d: int) -> int:
        m = self.features_per_split if self.features_per_split > 0 else min(50, d)
        return min(m, d)


LEAF = -1
_LEAF_CLIP = 4.0


class RegressionTree:
    """Axis-aligned binary tree stored as flat node arrays.

    Internal nodes route x[feature] <= threshold to the left child; leaves
    carry a real value.
    """

    def __init__(
        self,
        feature: np.ndarray,
        threshold: np.ndarray,
        left: np.ndarray,
        right: np.ndarray,
        value: np.ndarray,
    ):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def depth(self) -> int:
        def rec(node: int) -> int:
            if self.feature[node] == LEAF:
                return 0
            return 1 + max(rec(self.left[node]), rec(self.right[node]))

        return rec(0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            internal = self.feature[nodes] != LEAF
            if not internal.any():
                break
            idx = np.nonzero(internal)[0]
            cur = nodes[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            nodes[idx] = np.where(go_left, self.left[cur], self.right[cur])
        return self.value[nodes]

    def predict_one(self, x: np.ndarray) -> float:
        node = 0
        while self.feature[node] != LEAF:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return float(self.value[node])

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index for each row."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            internal = self.feature[nodes] != LEAF
            if not internal.any():
                return nodes
            idx = np.nonzero(internal)[0]
            cur = nodes[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            nodes[idx] = np.where(go_left, self.left[cur], self.right[cur])


class _TreeBuilder:
    """Grows one tree by recursive best-split search on a target vector.

    Split quality is the least-squares gain of fitting constants to the two
    sides.  Gain ties break on the lowest original feature index, then the
    lowest threshold, which keeps training deterministic.
    """

    def __init__(self, X: np.ndarray, target: np.ndarray, max_depth: int, m_features: int, rng):
        self.X = X
        self.t = target
        self.max_depth = max_depth
        self.m = m_features
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaf_rows: dict[int, np.ndarray] = {}

    def build(self) -> None:
        rows = np.arange(self.X.shape[0])
        self._grow(rows, 0)

    def _new_node(self) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        return len(self.feature) - 1

    def _grow(self, rows: np.ndarray, depth: int) -> int:
        node = self._new_node()
        split = self._best_split(rows) if depth < self.max_depth and rows.size >= 2 else None
        if split is None:
            self.leaf_rows[node] = rows
            return node
        feat, thresh = split
        go_left = self.X[rows, feat] <= thresh
        self.feature[node] = feat
        self.threshold[node] = thresh
        self.left[node] = self._grow(rows[go_left], depth + 1)
        self.right[node] = self._grow(rows[~go_left], depth + 1)
        return node

    def _best_split(self, rows: np.ndarray) -> tuple[int, float] | None:
        d = self.X.shape[1]
        feats = np.sort(self.rng.choice(d, size=min(self.m, d), replace=False))
        vals = self.X[np.ix_(rows, feats)]
        order = np.argsort(vals, axis=0, kind="stable")
        sv = np.take_along_axis(vals, order, axis=0)
        st = self.t[rows][order]
        n = rows.size
        prefix = np.cumsum(st, axis=0)
        total = prefix[-1]
        counts = np.arange(1, n, dtype=np.float64)
        left_sum = prefix[:-1]
        right_sum = total[None, :] - left_sum
        gain = (
            left_sum**2 / counts[:, None]
            + right_sum**2 / (n - counts)[:, None]
            - (total**2 / n)[None, :]
        )
        valid = sv[:-1] < sv[1:]
        gain = np.where(valid, gain, -np.inf)
        per_col_pos = np.argmax(gain, axis=0)  # first max = lowest threshold
        per_col_gain = gain[per_col_pos, np.arange(feats.size)]
        best_col = int(np.argmax(per_col_gain))  # first max = lowest feature index
        best_gain = per_col_gain[best_col]
        if not np.isfinite(best_gain) or best_gain <= 0.0:
            return None
        pos = per_col_pos[best_col]
        thresh = float((sv[pos, best_col] + sv[pos + 1, best_col]) / 2.0)
        return int(feats[best_col]), thresh

    def finish(self, leaf_value) -> RegressionTree:
        value = np.zeros(len(self.feature))
        for node, rows in self.leaf_rows.items():
            value[node] = leaf_value(rows)
        return RegressionTree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=value,
        )


@dataclass
class BoostedModel:
    """Stagewise sum of shrunken regression trees plus a constant base score."""

    trees: list[RegressionTree] = field(default_factory=list)
    shrinkage: float = 0.06
    base_score: float = 0.0
    n_features: int = 0

    def staged_scores(self, X: np.ndarray) -> np.ndarray:
        """(n_stages + 1, n) scores after 0, 1, ... trees, for diagnostics."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty((len(self.trees) + 1, X.shape[0]))
        out[0] = self.base_score
        for k, tree in enumerate(self.trees):
            out[k + 1] = out[k] + self.shrinkage * tree.predict(X)
        return out


def _validate_xy(features, labels) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = np.asarray(labels, dtype=np.int64).ravel()
    if X.shape[0] != y.size:
        raise ValueError("features and labels disagree in length")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary 0/1")
    if len(np.unique(y)) < 2:
        raise DegenerateModelError("training data contains a single class")
    return X, y


def train_boosted(features, labels, cfg: BoostConfig = BoostConfig(), seed: int = 0) -> BoostedModel:
    """Fit the boosted classifier on binary labels.

    Labels are mapped to {-1, +1} and the exponential loss sum(exp(-y F))
    is minimized stagewise: each tree fits the negative gradient y exp(-y F)
    by least squares on a fresh row subsample, and each leaf takes one
    Newton step of the loss, clipped to +-4.  base_score is the optimal
    constant 0.5 log(n_pos / n_neg).
    """
    X, y01 = _validate_xy(features, labels)
    n, d = X.shape
    y = 2.0 * y01 - 1.0
    rng = np.random.default_rng(seed)
    m_feats = cfg.resolve_features_per_split(d)
    n_sub = max(1, int(round(cfg.row_subsample * n)))

    base = 0.5 * math.log(float(np.sum(y01 == 1)) / float(np.sum(y01 == 0)))
    F = np.full(n, base)
    trees: list[RegressionTree] = []
    for _ in range(cfg.n_learners):
        rows = np.sort(rng.choice(n, size=n_sub, replace=False))
        w = np.exp(-y[rows] * F[rows])
        residual = y[rows] * w
        builder = _TreeBuilder(X[rows], residual, cfg.max_depth, m_feats, rng)
        builder.build()

        def newton_leaf(leaf_rows: np.ndarray) -> float:
            wl = w[leaf_rows]
            gamma = float(np.sum(y[rows][leaf_rows] * wl) / np.sum(wl))
            return float(np.clip(gamma, -_LEAF_CLIP, _LEAF_CLIP))

        tree = builder.finish(newton_leaf)
        trees.append(tree)
        F += cfg.shrinkage * tree.predict(X)
    return BoostedModel(trees=trees, shrinkage=cfg.shrinkage, base_score=base, n_features=d)


def predict_score(m: BoostedModel, x) -> float:
    """Raw additive score F for a single feature vector."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != m.n_features:
        raise ValueError(f"expected {m.n_features} features, got {x.size}")
    return m.base_score + m.shrinkage * sum(t.predict_one(x) for t in m.trees)


def predict_scores(m: BoostedModel, X) -> np.ndarray:
    """Raw scores for a feature matrix."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != m.n_features:
        raise ValueError(f"expected {m.n_features} features, got {X.shape[1]}")
    F = np.full(X.shape[0], m.base_score)
    for t in m.trees:
        F += m.shrinkage * t.predict(X)
    return F


def score_to_probability(F):
    """Logistic correction p(y=1|x) = 1 / (1 + exp(-2F))."""
    F = np.asarray(F, dtype=np.float64)
    if not np.all(np.isfinite(F)):
        raise ValueError("score must be finite")
    p = expit(2.0 * F)
    return float(p) if p.ndim == 0 else p


def predict_probabilities(m: BoostedModel, X) -> np.ndarray:
    """Class-1 probabilities via the logistic correction."""
    return score_to_probability(predict_scores(m, X))


@dataclass
class Committee:
    """Bagged classification trees with per-split random feature subsets."""

    members: list[RegressionTree]
    n_features: int

    def votes(self, X: np.ndarray) -> np.ndarray:
        """(n_members, n) matrix of 0/1 votes."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.stack([(t.predict(X) >= 0.5).astype(np.int64) for t in self.members])


def train_committee(features, labels, n_members: int = 25, seed: int = 0) -> Committee:
    """Train the committee: each member sees a bootstrap resample and
    sqrt(d) random features per split, grown until pure."""
    if n_members < 1:
        raise ValueError("n_members must be >= 1")
    X, y01 = _validate_xy(features, labels)
    n, d = X.shape
    rng = np.random.default_rng(seed)
    m_feats = max(1, int(round(math.sqrt(d))))
    members = []
    for _ in range(n_members):
        rows = rng.integers(0, n, size=n)
        yb = y01[rows].astype(np.float64)
        builder = _TreeBuilder(X[rows], yb, max_depth=32, m_features=m_feats, rng=rng)
        builder.build()
        tree = builder.finish(lambda leaf_rows: float(np.mean(yb[leaf_rows])))
        members.append(tree)
    return Committee(members=members, n_features=d)


def vote_disagreement(c: Committee, x) -> float:
    """Vote entropy of the committee at x (0 log 0 taken as 0)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    votes = c.votes(x[None, :])[:, 0]
    return _vote_entropy(np.sum(votes == 1), len(c.members))


def vote_disagreements(c: Committee, X) -> np.ndarray:
    """Vote entropy per row of X."""
    votes = c.votes(X)
    n1 = votes.sum(axis=0)
    return np.array([_vote_entropy(int(v), len(c.members)) for v in n1])


def _vote_entropy(n1: int, m: int) -> float:
    h = 0.0
    for v in (n1, m - n1):
        if v > 0:
            frac = v / m
            h -= frac * math.log(frac)
    return h

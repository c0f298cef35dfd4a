"""Tree extraction from edge probabilities.

Each edge gets cost -log(p/(1-p)): probable edges are rewarded, improbable
ones penalized, and a zero-cost empty tree is always admissible.  Small
graphs are solved exactly by subset enumeration.  Larger ones fall back to
a greedy grower -- a deliberately simple surrogate for a full combinatorial
optimizer -- whose bounded subtree lookahead lets it cross low-probability
bridges when the reward behind them pays for the crossing.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph import SpatialGraph

PROB_EPS = 1e-6

# subset enumeration is 2^m; 16 edges keeps the exact path well under a
# millisecond-scale budget while covering every section a user would
# plausibly inspect by hand
EXACT_EDGE_LIMIT = 16


@dataclass(frozen=True)
class Tree:
    """A rooted, connected, acyclic subset of a spatial graph's edges."""

    root: int
    edge_indices: tuple[int, ...]

    def validate(self, g: SpatialGraph) -> None:
        n_nodes = g.nodes.shape[0]
        if not 0 <= self.root < n_nodes:
            raise ValueError("root is not a node of the graph")
        seen = set()
        nodes = {self.root}
        pending = list(self.edge_indices)
        # peel off edges that attach to the connected component; each must
        # add exactly one new node (acyclicity)
        while pending:
            progress = False
            for ei in list(pending):
                if ei in seen:
                    raise ValueError("duplicate edge index in tree")
                e = g.edges[ei]
                a, b = e.node_a, e.node_b
                if a in nodes and b in nodes:
                    raise ValueError("tree contains a cycle")
                if a in nodes or b in nodes:
                    nodes.add(a)
                    nodes.add(b)
                    seen.add(ei)
                    pending.remove(ei)
                    progress = True
            if not progress:
                raise ValueError("tree edges are not connected to the root")


def edge_cost(p):
    """Log-odds cost -log(p/(1-p)), with p clipped away from 0 and 1."""
    arr = np.asarray(p, dtype=np.float64)
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    clipped = np.clip(arr, PROB_EPS, 1.0 - PROB_EPS)
    cost = -np.log(clipped / (1.0 - clipped))
    return float(cost) if cost.ndim == 0 else cost


def tree_cost(t: Tree, probs) -> float:
    """Summed edge cost of a tree; the empty tree costs 0."""
    if not t.edge_indices:
        return 0.0
    probs = np.asarray(probs, dtype=np.float64)
    return float(np.sum(edge_cost(probs[list(t.edge_indices)])))


def _is_tree_from_root(g: SpatialGraph, subset, root: int) -> bool:
    """True when the edge subset forms one tree containing the root."""
    nodes = {root}
    for ei in subset:
        e = g.edges[ei]
        nodes.add(e.node_a)
        nodes.add(e.node_b)
    if len(subset) != len(nodes) - 1:
        return False  # cycle, or detached piece double-counting nodes
    reached = {root}
    frontier = [root]
    while frontier:
        cur = frontier.pop()
        for ei in subset:
            e = g.edges[ei]
            if e.node_a == cur and e.node_b not in reached:
                reached.add(e.node_b)
                frontier.append(e.node_b)
            elif e.node_b == cur and e.node_a not in reached:
                reached.add(e.node_a)
                frontier.append(e.node_a)
    return reached == nodes


def _extract_exact(g: SpatialGraph, costs: np.ndarray, root: int) -> tuple[int, ...]:
    """Minimum-cost rooted tree by subset enumeration (small graphs only)."""
    # only negative edges and the bridges between them can belong to an
    # optimum, but with 2^m this small, plain enumeration is simplest
    m = len(g.edges)
    best_cost = 0.0
    best: tuple[int, ...] = ()
    for size in range(1, m + 1):
        for subset in combinations(range(m), size):
            cost = float(costs[list(subset)].sum())
            if cost > best_cost - 1e-15:
                # ties break toward the lexicographically lowest tuple,
                # which enumeration order already visits first
                continue
            if _is_tree_from_root(g, subset, root):
                best_cost = cost
                best = subset
    return best


def _subtree_extensions(g, costs, incident, in_tree_nodes, used_edges, max_edges):
    """Enumerate connected edge sets of <= max_edges hanging off the tree.

    Each extension touches the current tree at exactly one node and is
    internally acyclic, so splicing one in keeps the result a tree.
    Yields (cost, sorted_edge_tuple), deduplicated.
    """
    seen: set[frozenset[int]] = set()

    def extend(edges, nodes, cost):
        if len(edges) >= max_edges:
            return
        for node in list(nodes):
            for ei in incident[node]:
                if ei in used_edges or ei in edges:
                    continue
                e = g.edges[ei]
                other = e.node_b if e.node_a == node else e.node_a
                if other in in_tree_nodes or other in nodes:
                    continue
                key = frozenset(edges | {ei})
                if key in seen:
                    continue
                seen.add(key)
                new_cost = cost + costs[ei]
                yield new_cost, tuple(sorted(edges | {ei}))
                yield from extend(edges | {ei}, nodes | {other}, new_cost)

    for start in in_tree_nodes:
        for ei in incident[start]:
            if ei in used_edges:
                continue
            e = g.edges[ei]
            other = e.node_b if e.node_a == start else e.node_a
            if other in in_tree_nodes:
                continue
            key = frozenset({ei})
            if key in seen:
                continue
            seen.add(key)
            yield costs[ei], (ei,)
            yield from extend({ei}, {other}, costs[ei])


def _extract_greedy(g, costs, root, lookahead):
    """Grow a tree while the total cost strictly decreases.

    Each step splices in the extension with the best cost per edge;
    normalizing by length keeps a cheap direct entry preferred over a
    bundle that reaches the same reward through an unnecessary toll edge.
    Ties break toward shorter, then lexicographically lower, edge tuples.
    """
    n_nodes = g.nodes.shape[0]
    incident: dict[int, list[int]] = {i: [] for i in range(n_nodes)}
    for ei, e in enumerate(g.edges):
        incident[e.node_a].append(ei)
        incident[e.node_b].append(ei)

    in_tree_nodes = {root}
    used_edges: set[int] = set()
    chosen: list[int] = []
    while True:
        best_key = None
        best_set: tuple[int, ...] | None = None
        for cost, edges in _subtree_extensions(
            g, costs, incident, in_tree_nodes, used_edges, lookahead
        ):
            if cost >= 0.0:
                continue
            key = (cost / len(edges), len(edges), edges)
            if best_key is None or key < best_key:
                best_key = key
                best_set = edges
        if best_set is None:
            break
        for ei in best_set:
            e = g.edges[ei]
            used_edges.add(ei)
            chosen.append(ei)
            in_tree_nodes.add(e.node_a)
            in_tree_nodes.add(e.node_b)
    return tuple(chosen)


def extract_tree(g: SpatialGraph, probs, root: int, lookahead: int = 3) -> Tree:
    """Lowest-cost tree of graph edges rooted at `root`.

    Graphs of up to EXACT_EDGE_LIMIT edges are solved exactly; beyond
    that a greedy grower takes over, considering extensions of up to
    `lookahead` edges at a time.  The result only ever has non-positive
    cost since the bare root is always admissible.
    """
    n_nodes = g.nodes.shape[0]
    if not 0 <= root < n_nodes:
        raise ValueError(f"root {root} is not a node of the graph")
    if lookahead < 1:
        raise ValueError("lookahead must be at least 1")
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (len(g.edges),):
        raise ValueError("need one probability per graph edge")
    costs = np.atleast_1d(edge_cost(probs))

    if len(g.edges) <= EXACT_EDGE_LIMIT:
        return Tree(root=root, edge_indices=_extract_exact(g, costs, root))
    return Tree(root=root, edge_indices=_extract_greedy(g, costs, root, lookahead))

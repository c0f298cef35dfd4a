"""Neighbourhood probability propagation.

Classifier probabilities are diffused over the sample-adjacency graph so
that a sample disagreeing with its neighbourhood regains uncertainty.
The pipeline: RBF affinity restricted to adjacent samples, symmetric
degree normalization, then a damped diffusion solved in closed form.
A plain fixed-point iteration acts as the independent reference solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from alcurve.graph import LabelSet, SampleGraph


class ConvergenceError(RuntimeError):
    """Iterative solver failed to reach tolerance within max_iter."""


Support = Literal["neighbors", "global"]


@dataclass(frozen=True)
class PropagationConfig:
    """Diffusion parameters.

    alpha is the fraction of information exchanged with neighbours per
    step (0 keeps the classifier output, 1 would ignore it entirely);
    sigma is the RBF bandwidth of the affinity.
    """

    alpha: float = 0.9
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetric nonnegative pairwise similarity.

    "neighbors" support zeroes non-adjacent pairs and the diagonal;
    "global" support keeps every pair, so the diagonal is exactly 1.
    """

    matrix: np.ndarray
    sigma: float
    support: Support

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def median_adjacent_distance(sg: SampleGraph) -> float:
    """Median feature distance over adjacent pairs: default-sigma heuristic."""
    if not sg.edges:
        return 1.0
    idx = np.asarray(sg.edges)
    d = np.linalg.norm(sg.features[idx[:, 0]] - sg.features[idx[:, 1]], axis=1)
    med = float(np.median(d))
    return med if med > 0 else 1.0


def build_affinity(sg: SampleGraph, sigma: float, support: Support = "neighbors") -> AffinityMatrix:
    """RBF affinity w_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)).

    With "neighbors" support, w_ij is kept only where samples i and j are
    adjacent; with "global" support, every pair is kept.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    X = sg.features
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    W = np.exp(-d2 / (2.0 * sigma * sigma))
    if support == "neighbors":
        mask = np.zeros_like(W, dtype=bool)
        for i, j in sg.edges:
            mask[i, j] = mask[j, i] = True
        W = np.where(mask, W, 0.0)
    elif support == "global":
        np.fill_diagonal(W, 1.0)
    else:
        raise ValueError(f"unknown support {support!r}")
    W = (W + W.T) / 2.0  # exact symmetry against float asymmetry
    return AffinityMatrix(matrix=W, sigma=float(sigma), support=support)


def normalize_symmetric(W: AffinityMatrix | np.ndarray) -> np.ndarray:
    """S = D^(-1/2) W D^(-1/2) with d_ii the row sums of W.

    Rows/columns of isolated samples (zero degree) come out all-zero.
    """
    M = W.matrix if isinstance(W, AffinityMatrix) else np.asarray(W, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or not np.array_equal(M, M.T):
        raise ValueError("affinity matrix must be square and symmetric")
    d = M.sum(axis=1)
    inv_sqrt = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
    return inv_sqrt[:, None] * M * inv_sqrt[None, :]


def clamp_labels(P: np.ndarray, labels: LabelSet) -> np.ndarray:
    """Replace labelled rows with one-hot rows; unlabelled rows unchanged."""
    out = np.array(P, dtype=np.float64, copy=True)
    for i, y in labels:
        out[i, 0] = 1.0 - y
        out[i, 1] = float(y)
    return out


def _validate_table(P: np.ndarray) -> np.ndarray:
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != 2:
        raise ValueError("probability table must be N x 2")
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise ValueError("probability table entries must be finite and nonnegative")
    if np.any(P.sum(axis=1) <= 0):
        raise ValueError("probability table rows must not sum to zero")
    return P


def _row_normalize(P: np.ndarray) -> np.ndarray:
    s = P.sum(axis=1, keepdims=True)
    return P / np.where(s > 0, s, 1.0)


class PropagationSolver:
    """Closed-form diffusion with a cached factorization of (I - alpha S).

    The graph, and hence S, is fixed across active-learning iterations
    while the probability table changes, so the factorization is reused.
    Sparse LU if S is sparse enough to bother, dense LU otherwise.
    """

    def __init__(self, S: np.ndarray, alpha: float):
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        S = np.asarray(S, dtype=np.float64)
        n = S.shape[0]
        self.alpha = float(alpha)
        self.n = n
        A = np.eye(n) - alpha * S
        density = np.count_nonzero(S) / max(n * n, 1)
        if n >= 256 and density < 0.05:
            self._solve = scipy.sparse.linalg.factorized(scipy.sparse.csc_matrix(A))
        else:
            lu, piv = scipy.linalg.lu_factor(A)
            self._solve = lambda b: scipy.linalg.lu_solve((lu, piv), b)

    def solve(self, P0: np.ndarray) -> np.ndarray:
        """Solve (I - alpha S) P = P0 and row-normalize the result."""
        P0 = _validate_table(P0)
        if P0.shape[0] != self.n:
            raise ValueError("table height does not match the graph")
        P = np.column_stack([self._solve(P0[:, 0]), self._solve(P0[:, 1])])
        if not np.all(np.isfinite(P)):
            raise ConvergenceError("linear solve produced non-finite values")
        return _row_normalize(P)


def propagate_closed_form(P0: np.ndarray, S: np.ndarray, alpha: float) -> np.ndarray:
    """Diffused probabilities: solve (I - alpha S) P* = P0, rows normalized.

    The explicit inverse is never formed.  For repeated solves on one
    graph use :class:`PropagationSolver` directly.
    """
    return PropagationSolver(S, alpha).solve(P0)


def propagate_iterative(
    P0: np.ndarray,
    S: np.ndarray,
    alpha: float,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> np.ndarray:
    """Reference solver: iterate P <- alpha S P + (1 - alpha) P0 to a fixed point.

    Rows are normalized once after convergence.  The iteration limit of the
    linear map is a positive multiple of the closed-form solution, so both
    solvers agree exactly after row normalization; this function is kept
    free of linear solves so it can serve as an independent oracle.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    P0 = _validate_table(P0)
    S = np.asarray(S, dtype=np.float64)
    P = P0.copy()
    for _ in range(max_iter):
        nxt = alpha * (S @ P) + (1.0 - alpha) * P0
        delta = float(np.max(np.abs(nxt - P)))
        P = nxt
        if delta < tol:
            return _row_normalize(P)
    raise ConvergenceError(f"no convergence below {tol} within {max_iter} iterations")


def entropy(p: float | np.ndarray) -> float | np.ndarray:
    """Binary Shannon entropy (natural log) of class-1 probability p.

    0 log 0 is taken as 0, so the endpoints map to exactly 0.
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log(p), 0.0) - np.where(q > 0, q * np.log(q), 0.0)
    return float(h) if h.ndim == 0 else h


def propagated_entropy(P_star: np.ndarray, labels: LabelSet) -> np.ndarray:
    """Per-sample entropy of the diffused table; labelled rows forced to 0.

    Labelled samples must never be re-queried, so their informativeness is
    zeroed regardless of where diffusion moved their row.
    """
    P_star = _validate_table(P_star)
    h = entropy(_row_normalize(P_star)[:, 1])
    h = np.asarray(h, dtype=np.float64).copy()
    for i, _ in labels:
        h[i] = 0.0
    return h

"""Batch query selection: RS, US, QBC, PPS and density-weighted PPS.

Every informed selector is an argmax of a per-batch score over the candidate
enumeration; ties break toward the lexicographically smallest index tuple so
selection is reproducible bit-for-bit.  Scoring is vectorized over the whole
candidate list because the experiment loop re-selects at every iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .classifier import Committee, vote_disagreements
from .propagation import AffinityMatrix, PropagationConfig, entropy, propagated_entropy

_KINDS = ("rs", "us", "qbc", "pps", "dps")


@dataclass(frozen=True)
class ScoreComponents:
    """Decomposition of a batch score for logging and heat-maps."""

    sum_entropy: float
    sigma_global: float | None = None
    sigma_labeled: float | None = None
    sigma_internal: float | None = None
    mu: float | None = None


@dataclass(frozen=True)
class QueryBatch:
    """A selected batch of unlabeled sample indices with its score."""

    indices: tuple[int, ...]
    score: float = 0.0
    components: ScoreComponents | None = None


@dataclass(frozen=True)
class StrategyConfig:
    """Which selector to run and with what knobs.

    density_sigma=None reuses the propagation bandwidth for the global
    affinity matrix behind the density measures.
    """

    kind: str = "dps"
    k: int = 2
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    density_sigma: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", self.kind.lower())
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if not 1 <= self.k <= 3:
            raise ValueError("batch length k must lie in 1..3")
        if self.density_sigma is not None and self.density_sigma <= 0:
            raise ValueError("density_sigma must be positive")


def _labeled_indices(labeled) -> list[int]:
    if hasattr(labeled, "indices"):
        return sorted(labeled.indices)
    return sorted(set(int(i) for i in labeled))


def density_measures(E, labeled, W_tilde: AffinityMatrix) -> tuple[float, float, float]:
    """Global / labeled / internal similarity mass of a batch.

    sigma_G sums affinities from E to every sample (diagonal included),
    sigma_L from E to the labeled set, sigma_I between distinct members
    of E.  Requires the global-support affinity matrix.
    """
    if W_tilde.support != "global":
        raise ValueError("density measures need an affinity matrix with global support")
    idx = sorted(set(int(i) for i in E))
    if not idx:
        raise ValueError("batch must be nonempty")
    lab = _labeled_indices(labeled)
    if set(idx) & set(lab):
        raise ValueError("batch overlaps the labeled set")
    W = W_tilde.matrix
    sigma_g = float(W[idx, :].sum())
    sigma_l = float(W[np.ix_(idx, lab)].sum()) if lab else 0.0
    sub = W[np.ix_(idx, idx)]
    sigma_i = float(sub.sum() - np.trace(sub))
    return sigma_g, sigma_l, sigma_i


def mu(E, labeled, W_tilde: AffinityMatrix) -> float:
    """Diversity/representativeness weight (sigma_G - sigma_L - sigma_I) / sigma_G."""
    sigma_g, sigma_l, sigma_i = density_measures(E, labeled, W_tilde)
    return (sigma_g - sigma_l - sigma_i) / sigma_g


def _candidate_matrix(candidates: Iterable[Sequence[int]]) -> tuple[list[tuple[int, ...]], np.ndarray]:
    cands = sorted(tuple(int(i) for i in c) for c in candidates)
    if not cands:
        raise ValueError("no candidate batches to select from")
    k = len(cands[0])
    if any(len(c) != k for c in cands):
        raise ValueError("candidate batches must share one length")
    return cands, np.asarray(cands, dtype=np.int64)


def _pick(cands: list[tuple[int, ...]], scores: np.ndarray) -> tuple[tuple[int, ...], float]:
    # argmax returns the first maximum; candidates are sorted, so ties go
    # to the lexicographically smallest index tuple
    best = int(np.argmax(scores))
    return cands[best], float(scores[best])


def select_rs(candidates, rng: np.random.Generator) -> QueryBatch:
    """Uniform random choice among the candidates."""
    cands, _ = _candidate_matrix(candidates)
    choice = cands[int(rng.integers(len(cands)))]
    return QueryBatch(indices=choice)


def select_us(candidates, probabilities) -> QueryBatch:
    """Highest summed prediction entropy."""
    cands, arr = _candidate_matrix(candidates)
    h = entropy(np.asarray(probabilities, dtype=np.float64))
    best, score = _pick(cands, h[arr].sum(axis=1))
    return QueryBatch(indices=best, score=score, components=ScoreComponents(sum_entropy=score))


def select_qbc(candidates, committee: Committee, features) -> QueryBatch:
    """Highest summed committee vote entropy."""
    cands, arr = _candidate_matrix(candidates)
    d = vote_disagreements(committee, np.asarray(features, dtype=np.float64))
    best, score = _pick(cands, d[arr].sum(axis=1))
    return QueryBatch(indices=best, score=score, components=ScoreComponents(sum_entropy=score))


def select_pps(candidates, P_star, labels) -> QueryBatch:
    """Highest summed entropy of the propagated class distribution."""
    cands, arr = _candidate_matrix(candidates)
    h = propagated_entropy(P_star, labels)
    best, score = _pick(cands, h[arr].sum(axis=1))
    return QueryBatch(indices=best, score=score, components=ScoreComponents(sum_entropy=score))


def select_dps(candidates, P_star, labels, W_tilde: AffinityMatrix) -> QueryBatch:
    """Density-weighted propagation sampling: argmax mu(E) * sum H(p*_i)."""
    if W_tilde.support != "global":
        raise ValueError("density measures need an affinity matrix with global support")
    cands, arr = _candidate_matrix(candidates)
    lab = _labeled_indices(labels)
    if set(lab) & set(arr.ravel().tolist()):
        raise ValueError("candidate batches overlap the labeled set")

    h = propagated_entropy(P_star, labels)
    sum_h = h[arr].sum(axis=1)

    W = W_tilde.matrix
    row_sums = W.sum(axis=1)
    sigma_g = row_sums[arr].sum(axis=1)
    if lab:
        lab_cols = W[:, lab].sum(axis=1)
        sigma_l = lab_cols[arr].sum(axis=1)
    else:
        sigma_l = np.zeros(len(cands))
    sigma_i = np.zeros(len(cands))
    k = arr.shape[1]
    for a in range(k):
        for b in range(a + 1, k):
            sigma_i += 2.0 * W[arr[:, a], arr[:, b]]
    mu_vals = (sigma_g - sigma_l - sigma_i) / sigma_g
    scores = mu_vals * sum_h

    best = int(np.argmax(scores))
    components = ScoreComponents(
        sum_entropy=float(sum_h[best]),
        sigma_global=float(sigma_g[best]),
        sigma_labeled=float(sigma_l[best]),
        sigma_internal=float(sigma_i[best]),
        mu=float(mu_vals[best]),
    )
    return QueryBatch(indices=cands[best], score=float(scores[best]), components=components)

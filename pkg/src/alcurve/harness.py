"""Active-learning experiment harness.

One trial = seed labels, then iterate train -> evaluate -> select ->
oracle-label until the budget runs out; one experiment = many trials per
strategy over a shared dataset and evaluation split.  The evaluation
split is stratified, fixed per dataset, excluded from the query pool and
never costs oracle budget.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .classifier import (
    BoostConfig,
    predict_probabilities,
    train_boosted,
    train_committee,
)
from .graph import LabelSet, SampleGraph, candidate_batches
from .propagation import (
    AffinityMatrix,
    PropagationConfig,
    PropagationSolver,
    build_affinity,
    clamp_labels,
    normalize_symmetric,
)
from .strategies import (
    QueryBatch,
    select_dps,
    select_pps,
    select_qbc,
    select_rs,
    select_us,
)
from .synthetic import SyntheticConfig, generate_synthetic

log = logging.getLogger(__name__)

STRATEGY_KINDS = ("rs", "us", "qbc", "pps", "dps")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of a full multi-trial experiment.

    Exactly one of `synthetic` / `graph_path` names the dataset.
    """

    synthetic: SyntheticConfig | None = field(default_factory=SyntheticConfig)
    graph_path: str | None = None
    strategies: tuple[str, ...] = STRATEGY_KINDS
    seed_per_class: int = 4
    k: int = 2
    budget: int = 100
    trials: int = 30
    metric: str = "accuracy"
    master_seed: int = 0
    eval_fraction: float = 0.3
    boost: BoostConfig = field(default_factory=BoostConfig)
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    density_sigma: float | None = None
    committee_size: int = 25

    def __post_init__(self) -> None:
        if (self.synthetic is None) == (self.graph_path is None):
            raise ValueError("configure exactly one of synthetic / graph_path")
        object.__setattr__(self, "strategies", tuple(s.lower() for s in self.strategies))
        for s in self.strategies:
            if s not in STRATEGY_KINDS:
                raise ValueError(f"unknown strategy {s!r}")
        if self.seed_per_class < 1:
            raise ValueError("seed_per_class must be >= 1")
        if self.budget <= 2 * self.seed_per_class:
            raise ValueError("budget must exceed the seed set size")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.metric not in ("accuracy", "voc"):
            raise ValueError("metric must be 'accuracy' or 'voc'")
        if not 1 <= self.k <= 3:
            raise ValueError("batch length k must lie in 1..3")
        if not 0.0 < self.eval_fraction < 1.0:
            raise ValueError("eval_fraction must lie in (0, 1)")
        if self.committee_size < 2:
            raise ValueError("committee_size must be >= 2")


@dataclass(frozen=True)
class QueryRecord:
    """One logged selection: who asked, when, and why."""

    strategy: str
    trial: int
    iteration: int
    batch: QueryBatch


@dataclass
class LearningCurve:
    """Metric after every retrain of a single trial."""

    strategy: str
    trial_seed: int
    points: list[tuple[int, float]]
    truncated: bool = False
    queries: list[QueryRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("a learning curve needs at least the seed-set point")
        counts = [n for n, _ in self.points]
        if any(b <= a for a, b in zip(counts, counts[1:])):
            raise ValueError("labels_used must be strictly increasing")


@dataclass
class StrategySummary:
    """Across-trial aggregate for one strategy."""

    strategy: str
    labels_grid: list[int]
    mean_metric: list[float]
    var_metric: list[float]
    final_variance: float
    curves: list[LearningCurve]


@dataclass
class AggregateResult:
    metric: str
    full_baseline: float
    strategies: dict[str, StrategySummary]
    config: ExperimentConfig


def experiment_config_from_dict(doc: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a plain declarative document."""
    doc = dict(doc)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    if doc.get("synthetic") is not None:
        doc["synthetic"] = SyntheticConfig(**doc["synthetic"])
    if "boost" in doc:
        doc["boost"] = BoostConfig(**doc["boost"])
    if "propagation" in doc:
        doc["propagation"] = PropagationConfig(**doc["propagation"])
    if "strategies" in doc:
        doc["strategies"] = tuple(doc["strategies"])
    return ExperimentConfig(**doc)


# -- oracle ------------------------------------------------------------------

def simulated_oracle(sg: SampleGraph, index: int) -> int:
    """Ground-truth label of a sample; stands in for the human annotator."""
    label = sg.gt_label(int(index))
    if label is None:
        raise ValueError(f"sample {index} has no ground-truth label")
    return label


class SimulatedOracle:
    """Callable oracle that counts annotation effort (one unit per sample)."""

    def __init__(self, sg: SampleGraph):
        self._sg = sg
        self.effort = 0

    def __call__(self, index: int) -> int:
        label = simulated_oracle(self._sg, index)
        self.effort += 1
        return label


# -- metrics -----------------------------------------------------------------

def _as_pred_classes(predictions) -> np.ndarray:
    preds = np.asarray(predictions, dtype=np.float64).ravel()
    if np.any(preds < 0) or np.any(preds > 1):
        raise ValueError("predictions must be probabilities in [0, 1]")
    return preds >= 0.5


def accuracy(predictions, labels) -> float:
    """Fraction correct, thresholding probabilities at 0.5 (>= goes to 1)."""
    classes = _as_pred_classes(predictions)
    y = np.asarray(labels, dtype=np.int64).ravel()
    if y.size != classes.size or y.size == 0:
        raise ValueError("predictions and labels must align and be nonempty")
    return float(np.mean(classes == (y == 1)))


def voc_score(predictions, labels) -> float:
    """TP / (TP + FP + FN); ignores true negatives; 0 when the denominator is 0."""
    classes = _as_pred_classes(predictions)
    y = np.asarray(labels, dtype=np.int64).ravel() == 1
    if y.size != classes.size or y.size == 0:
        raise ValueError("predictions and labels must align and be nonempty")
    tp = int(np.sum(classes & y))
    fp = int(np.sum(classes & ~y))
    fn = int(np.sum(~classes & y))
    denom = tp + fp + fn
    return 0.0 if denom == 0 else tp / denom


_METRICS = {"accuracy": accuracy, "voc": voc_score}


# -- shared per-dataset state --------------------------------------------------

@dataclass
class _Context:
    sg: SampleGraph
    train_pool: np.ndarray
    eval_idx: np.ndarray
    solver: PropagationSolver | None = None
    W_global: AffinityMatrix | None = None


def _stratified_split(gt: np.ndarray, eval_fraction: float, master_seed: int):
    """Per-class shuffle; the same dataset and master seed always give the
    same split, independent of strategy or trial."""
    rng = np.random.default_rng([master_seed, 0x5EED])
    eval_parts = []
    for c in (0, 1):
        members = np.flatnonzero(gt == c)
        n_eval = int(round(eval_fraction * members.size))
        eval_parts.append(rng.permutation(members)[:n_eval])
    eval_idx = np.sort(np.concatenate(eval_parts))
    train_pool = np.setdiff1d(np.arange(gt.size), eval_idx)
    return train_pool, eval_idx


def _load_dataset(cfg: ExperimentConfig) -> SampleGraph:
    if cfg.graph_path is not None:
        from .io import load_any_graph

        return load_any_graph(cfg.graph_path)
    return generate_synthetic(cfg.synthetic)


def _build_context(cfg: ExperimentConfig, strategies: tuple[str, ...]) -> _Context:
    sg = _load_dataset(cfg)
    if not sg.has_full_gt():
        raise ValueError("experiments need ground truth on every sample")
    gt = sg.gt_labels()
    if np.sum(gt == 0) < cfg.seed_per_class or np.sum(gt == 1) < cfg.seed_per_class:
        raise ValueError("dataset too small to seed both classes")
    train_pool, eval_idx = _stratified_split(gt, cfg.eval_fraction, cfg.master_seed)
    ctx = _Context(sg=sg, train_pool=train_pool, eval_idx=eval_idx)
    sigma = cfg.propagation.sigma
    if any(s in ("pps", "dps") for s in strategies):
        W = build_affinity(sg, sigma, support="neighbors")
        ctx.solver = PropagationSolver(normalize_symmetric(W), cfg.propagation.alpha)
    if "dps" in strategies:
        ctx.W_global = build_affinity(sg, cfg.density_sigma or sigma, support="global")
    return ctx


def _draw_seed_set(ctx: _Context, cfg: ExperimentConfig, rng, oracle) -> LabelSet:
    gt = ctx.sg.gt_labels()
    X = ctx.sg.features
    for attempt in range(8):
        labels = LabelSet(len(ctx.sg))
        drawn: list[int] = []
        for c in (0, 1):
            pool = ctx.train_pool[gt[ctx.train_pool] == c]
            drawn.extend(int(i) for i in rng.choice(pool, size=cfg.seed_per_class, replace=False))
        # a seed set whose feature rows all coincide cannot anchor a split;
        # redraw from the continued stream rather than training on it
        if attempt < 7 and np.ptp(X[drawn], axis=0).max() == 0.0:
            log.warning("degenerate seed draw (attempt %d); redrawing", attempt)
            continue
        for i in drawn:
            labels.add(i, oracle(i))
        return labels
    raise AssertionError("unreachable")


def _candidates_with_fallback(sg: SampleGraph, k: int, excluded: set[int]):
    """Candidate batches at the largest feasible k <= requested."""
    n_eligible = len(sg) - len(excluded)
    k_try = min(k, n_eligible)
    while k_try >= 1:
        cands = candidate_batches(sg, k_try, excluded)
        if cands:
            return cands, k_try
        k_try -= 1
    return [], 0


def select_batch(
    strategy: str,
    cands,
    sg: SampleGraph,
    labels: LabelSet,
    rng: np.random.Generator,
    model=None,
    solver: PropagationSolver | None = None,
    W_global: AffinityMatrix | None = None,
    committee_size: int = 25,
) -> QueryBatch:
    """Dispatch one selection step; shared by the harness and the service."""
    X = sg.features
    if strategy == "rs":
        return select_rs(cands, rng)
    if strategy == "us":
        return select_us(cands, predict_probabilities(model, X))
    if strategy == "qbc":
        idx = list(labels.indices)
        committee = train_committee(
            X[idx], labels.labels, committee_size, seed=int(rng.integers(2**31))
        )
        return select_qbc(cands, committee, X)
    # pps / dps: diffuse the current predictions over the graph
    p = predict_probabilities(model, X)
    P0 = clamp_labels(np.column_stack([1.0 - p, p]), labels)
    P_star = solver.solve(P0)
    if strategy == "pps":
        return select_pps(cands, P_star, labels)
    return select_dps(cands, P_star, labels, W_global)


def _run_trial(ctx: _Context, cfg: ExperimentConfig, strategy: str, trial_seed: int) -> LearningCurve:
    sg = ctx.sg
    X = sg.features
    gt = sg.gt_labels()
    metric_fn = _METRICS[cfg.metric]
    rng = np.random.default_rng(trial_seed)
    oracle = SimulatedOracle(sg)

    # the seed draw happens before any strategy-specific rng use, so all
    # strategies at one trial seed start from the identical label set
    labels = _draw_seed_set(ctx, cfg, rng, oracle)
    eval_set = set(ctx.eval_idx.tolist())

    points: list[tuple[int, float]] = []
    queries: list[QueryRecord] = []
    truncated = False
    iteration = 0
    while True:
        idx = list(labels.indices)
        model = train_boosted(X[idx], labels.labels, cfg.boost, seed=int(rng.integers(2**31)))
        eval_probs = predict_probabilities(model, X[ctx.eval_idx])
        points.append((len(labels), metric_fn(eval_probs, gt[ctx.eval_idx])))
        if len(labels) >= cfg.budget:
            break
        k_eff = min(cfg.k, cfg.budget - len(labels))
        cands, k_used = _candidates_with_fallback(sg, k_eff, eval_set | set(labels.indices))
        if not cands:
            truncated = True
            log.warning("strategy %s starved at %d labels (trial %d)", strategy, len(labels), trial_seed)
            break
        if k_used < k_eff:
            log.info("fell back to k=%d at %d labels (trial %d)", k_used, len(labels), trial_seed)
        batch = select_batch(
            strategy, cands, sg, labels, rng,
            model=model, solver=ctx.solver, W_global=ctx.W_global,
            committee_size=cfg.committee_size,
        )
        iteration += 1
        queries.append(QueryRecord(strategy=strategy, trial=trial_seed, iteration=iteration, batch=batch))
        for i in batch.indices:
            labels.add(i, oracle(i))
    return LearningCurve(
        strategy=strategy,
        trial_seed=trial_seed,
        points=points,
        truncated=truncated,
        queries=queries,
    )


def run_trial(cfg: ExperimentConfig, strategy: str, trial_seed: int) -> LearningCurve:
    """Run one trial of one strategy, building dataset state from scratch."""
    strategy = strategy.lower()
    if strategy not in STRATEGY_KINDS:
        raise ValueError(f"unknown strategy {strategy!r}")
    ctx = _build_context(cfg, (strategy,))
    return _run_trial(ctx, cfg, strategy, trial_seed)


def _aggregate(strategy: str, curves: list[LearningCurve]) -> StrategySummary:
    tables = [dict(c.points) for c in curves]
    grid = sorted(set.intersection(*(set(t) for t in tables)))
    mean = [float(np.mean([t[n] for t in tables])) for n in grid]
    var = [float(np.var([t[n] for t in tables])) for n in grid]
    finals = [c.points[-1][1] for c in curves]
    return StrategySummary(
        strategy=strategy,
        labels_grid=grid,
        mean_metric=mean,
        var_metric=var,
        final_variance=float(np.var(finals)),
        curves=curves,
    )


def run_experiment(cfg: ExperimentConfig) -> AggregateResult:
    """All trials of all configured strategies plus the full-data baseline."""
    ctx = _build_context(cfg, cfg.strategies)
    X = ctx.sg.features
    gt = ctx.sg.gt_labels()
    metric_fn = _METRICS[cfg.metric]

    full_model = train_boosted(
        X[ctx.train_pool], gt[ctx.train_pool], cfg.boost, seed=cfg.master_seed
    )
    full = metric_fn(predict_probabilities(full_model, X[ctx.eval_idx]), gt[ctx.eval_idx])

    summaries: dict[str, StrategySummary] = {}
    for strategy in cfg.strategies:
        curves = [
            _run_trial(ctx, cfg, strategy, cfg.master_seed + t) for t in range(cfg.trials)
        ]
        summaries[strategy] = _aggregate(strategy, curves)
        log.info(
            "strategy %s: final mean %.4f var %.6f",
            strategy,
            summaries[strategy].mean_metric[-1] if summaries[strategy].mean_metric else float("nan"),
            summaries[strategy].final_variance,
        )
    return AggregateResult(
        metric=cfg.metric, full_baseline=full, strategies=summaries, config=cfg
    )


# -- export -------------------------------------------------------------------

def export_results(result: AggregateResult, out_dir) -> dict[str, Path]:
    """Write curves.csv, queries.csv and summary.json under out_dir.

    Output bytes are deterministic for a given result.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "curves": out / "curves.csv",
        "queries": out / "queries.csv",
        "summary": out / "summary.json",
    }

    with paths["curves"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["strategy", "labels", "mean_metric", "var_metric"])
        for name in sorted(result.strategies):
            s = result.strategies[name]
            for n, m, v in zip(s.labels_grid, s.mean_metric, s.var_metric):
                w.writerow([name, n, repr(m), repr(v)])

    with paths["queries"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["strategy", "trial", "iteration", "indices",
             "sum_entropy", "sigma_global", "sigma_labeled", "sigma_internal", "mu"]
        )
        for name in sorted(result.strategies):
            for curve in result.strategies[name].curves:
                for q in curve.queries:
                    c = q.batch.components
                    def fmt(v):
                        return "" if v is None else repr(v)
                    w.writerow(
                        [q.strategy, q.trial, q.iteration,
                         "|".join(str(i) for i in q.batch.indices)]
                        + [fmt(v) for v in (
                            None if c is None else c.sum_entropy,
                            None if c is None else c.sigma_global,
                            None if c is None else c.sigma_labeled,
                            None if c is None else c.sigma_internal,
                            None if c is None else c.mu,
                        )]
                    )

    summary = {
        "metric": result.metric,
        "full_baseline": result.full_baseline,
        "variance": {k: v.final_variance for k, v in result.strategies.items()},
        "final_mean": {
            k: (v.mean_metric[-1] if v.mean_metric else None)
            for k, v in result.strategies.items()
        },
        "config": asdict(result.config),
    }
    paths["summary"].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return paths

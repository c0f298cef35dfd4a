"""Batch active learning for path classification on spatial sample graphs.

The package trains a boosted path classifier with a human (or simulated)
oracle in the loop.  Query batches of consecutive paths are chosen either
at random, by classifier uncertainty, by committee disagreement, or by
entropy of neighbourhood-propagated probabilities, optionally weighted by
a feature-space density measure.
"""

from alcurve.graph import (
    EmptyGraphError,
    LabelSet,
    Sample,
    SampleGraph,
    SpatialEdge,
    SpatialGraph,
    candidate_batches,
    from_spatial_graph,
    match_ground_truth,
)
from alcurve.propagation import (
    AffinityMatrix,
    ConvergenceError,
    PropagationConfig,
    PropagationSolver,
    build_affinity,
    clamp_labels,
    entropy,
    median_adjacent_distance,
    normalize_symmetric,
    propagate_closed_form,
    propagate_iterative,
    propagated_entropy,
)
from alcurve.classifier import (
    BoostConfig,
    BoostedModel,
    Committee,
    DegenerateModelError,
    predict_probabilities,
    predict_score,
    predict_scores,
    score_to_probability,
    train_boosted,
    train_committee,
    vote_disagreement,
    vote_disagreements,
)
from alcurve.strategies import (
    QueryBatch,
    ScoreComponents,
    StrategyConfig,
    density_measures,
    mu,
    select_dps,
    select_pps,
    select_qbc,
    select_rs,
    select_us,
)
from alcurve.synthetic import (
    GridSpec,
    HeatMap,
    SyntheticConfig,
    accumulate_heatmap,
    generate_synthetic,
)
from alcurve.reconstruction import Tree, edge_cost, extract_tree, tree_cost
from alcurve.harness import (
    AggregateResult,
    ExperimentConfig,
    LearningCurve,
    QueryRecord,
    SimulatedOracle,
    StrategySummary,
    accuracy,
    experiment_config_from_dict,
    export_results,
    run_experiment,
    run_trial,
    select_batch,
    simulated_oracle,
    voc_score,
)

__version__ = "0.1.0"

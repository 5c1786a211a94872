//! Selection strategies over an ensemble library, sample-size search and
//! outcome ranking.

mod ranking;
mod run;
mod sample_size;
mod select;

pub use ranking::{
    optimal_candidates, rank_strategies, select_metric_by_variance, OptimalCandidate, RankInput, Ranking, RankingRow,
    NO_MATCH_RANK, OPTIMAL_TOP,
};
pub use run::{run_strategies, Selection, Stage, StageRun, StrategyId, StrategyOutcome, StrategyParams, StrategyRun};
pub use sample_size::{
    sample_size_search, transformed_features, variance, SampleSearchParams, SampleSearchReport, SamplingStrategy, SizeAami,
};
pub use select::{
    anmi_select, decrease_ensemble, decrease_ensemble_with, decrease_indices, hyperparameter_match, member_aamis, Pruning,
    Selected, DEFAULT_KEEP, DEFAULT_KEEP_GRAPH,
};

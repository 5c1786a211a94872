//! Month-over-month interest drift and cluster stability.

mod drift;
mod profile;

pub use drift::{cohort_drift, interest_distribution, month_label, CohortRow, DriftParams, DriftReport, InterestDistribution, OVERALL};
pub use profile::{
    binned_ami, cluster_profile, pair_score, rank_category, recurrence_report, shared_features, stability_match, BinPlan,
    ClusterProfile, FeatureBinning, FeatureDistribution, MatchMode, RecurrenceRow, StabilityMatch, DEFAULT_THRESHOLD,
};

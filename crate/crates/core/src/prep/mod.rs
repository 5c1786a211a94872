//! Everything between a raw table and an embeddable matrix.

mod correlation;
mod encode;
mod hopkins;
mod sampling;
mod yeo_johnson;

pub use correlation::{correlation_screen, CorrelatedPair, ScreenReport};
pub use encode::{one_hot_encode, ColumnOrigin, EncodedMatrix};
pub use hopkins::{default_probes, hopkins};
pub use sampling::{
    random_indices, sample_random, sample_stratified, stratified_indices, stratified_quotas,
};
pub use yeo_johnson::{
    apply_transform, fit_transform, yeo_johnson_apply, yeo_johnson_fit, yeo_johnson_log_likelihood,
    NumericTransform, TransformParams, LAMBDA_RANGE,
};

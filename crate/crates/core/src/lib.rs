//! Ensemble clustering for mixed-type behavioural data.
//!
//! The crate covers the whole path from a raw visit table to a ranked set of
//! clusterings: encoding and power transformation ([`prep`]), a fuzzy-graph
//! embedding for mixed numeric/categorical features ([`embed`]), a library of
//! base clusterers ([`clusterers`]), consensus functions ([`consensus`]),
//! validity indices and partition comparisons ([`validity`]), the strategy and
//! ranking machinery built on top of them ([`strategy`]) and month-over-month
//! drift and stability analysis ([`temporal`]).

pub mod clusterers;
pub mod consensus;
pub mod data;
pub mod embed;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod partition;
pub mod pipeline;
pub mod prep;
pub mod rng;
pub mod strategy;
pub mod temporal;
pub mod validity;

pub use error::{Error, Result};
pub use matrix::{Distance, Matrix};
pub use partition::{Partition, NOISE};

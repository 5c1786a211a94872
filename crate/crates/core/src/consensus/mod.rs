//! Consensus functions over an ensemble library and max-AAMI selection.

mod coassoc;
mod cspa;
mod hbgf;
mod hgpa;
mod nmf;

pub use coassoc::{coassociation, CoassociationMatrix};
pub use cspa::{cspa, cspa_report};
pub use hbgf::hbgf;
pub use hgpa::{balance_bounds, hgpa, hgpa_parts, hyperedge_cut, hyperedges, BALANCE_TOLERANCE, RELAXED_TOLERANCE};
pub use nmf::{nmf_consensus, nmf_consensus_matrix, symmetric_nmf, SymNmf};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clusterers::EnsembleLibrary;
use crate::error::{invalid, Error, Result};
use crate::partition::Partition;
use crate::rng::derive_seed;
use crate::validity::aami;

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return invalid(format!("consensus k={k} outside [1, {n}]"));
    }
    Ok(())
}

/// Consensus function identifier; declaration order is the tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConsensusId {
    #[serde(rename = "CSPA")]
    Cspa,
    #[serde(rename = "HGPA")]
    Hgpa,
    #[serde(rename = "HBGF")]
    Hbgf,
    #[serde(rename = "NMF")]
    Nmf,
}

impl ConsensusId {
    pub const ALL: [ConsensusId; 4] = [ConsensusId::Cspa, ConsensusId::Hgpa, ConsensusId::Hbgf, ConsensusId::Nmf];

    pub fn name(self) -> &'static str {
        match self {
            ConsensusId::Cspa => "CSPA",
            ConsensusId::Hgpa => "HGPA",
            ConsensusId::Hbgf => "HBGF",
            ConsensusId::Nmf => "NMF",
        }
    }

    pub fn run(self, lib: &EnsembleLibrary, k: usize, seed: u64) -> Result<Partition> {
        let seed = derive_seed(seed, self.name());
        match self {
            ConsensusId::Cspa => cspa(lib, k, seed),
            ConsensusId::Hgpa => hgpa(lib, k, seed),
            ConsensusId::Hbgf => hbgf(lib, k, seed),
            ConsensusId::Nmf => nmf_consensus(lib, k, seed),
        }
    }
}

impl fmt::Display for ConsensusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsensusOutcome {
    pub function: ConsensusId,
    pub partition: Partition,
    pub aami_vs_set: f64,
}

impl ConsensusOutcome {
    pub fn new(function: ConsensusId, partition: Partition) -> Self {
        Self { function, partition, aami_vs_set: f64::NAN }
    }
}

/// What each outcome's AAMI is measured against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    Library,
    #[default]
    OutcomeSet,
}

/// How the consensus cluster count is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy", content = "k")]
pub enum KPolicy {
    #[default]
    Median,
    Fixed(usize),
}

/// Median member cluster count (lower median), clamped to `[2, n]`.
pub fn median_k(lib: &EnsembleLibrary) -> usize {
    let mut ks: Vec<usize> = lib.members().iter().map(|m| m.partition.k()).collect();
    ks.sort_unstable();
    ks[(ks.len() - 1) / 2].clamp(2, lib.n().max(2))
}

impl KPolicy {
    pub fn resolve(self, lib: &EnsembleLibrary) -> usize {
        match self {
            KPolicy::Median => median_k(lib),
            KPolicy::Fixed(k) => k,
        }
    }
}

const TIE_TOLERANCE: f64 = 1e-12;

/// Fills in each outcome's AAMI against the reference set.
pub fn score_consensus(lib: &EnsembleLibrary, outcomes: &[ConsensusOutcome], reference: Reference) -> Result<Vec<ConsensusOutcome>> {
    let set: Vec<&Partition> = match reference {
        Reference::Library => lib.partitions(),
        Reference::OutcomeSet => outcomes.iter().map(|o| &o.partition).collect(),
    };
    let mut scored = outcomes.to_vec();
    for o in &mut scored {
        o.aami_vs_set = aami(&o.partition, set.iter().copied())?;
    }
    Ok(scored)
}

/// Scores every outcome by AAMI against the reference and returns the best;
/// ties within 1e-12 go to the earlier function id.
pub fn select_consensus(lib: &EnsembleLibrary, outcomes: &[ConsensusOutcome], reference: Reference) -> Result<ConsensusOutcome> {
    if outcomes.is_empty() {
        return Err(Error::Empty("consensus outcomes"));
    }
    let mut scored = score_consensus(lib, outcomes, reference)?;
    let mut best = 0;
    for i in 1..scored.len() {
        let (a, b) = (&scored[i], &scored[best]);
        if a.aami_vs_set > b.aami_vs_set + TIE_TOLERANCE
            || ((a.aami_vs_set - b.aami_vs_set).abs() <= TIE_TOLERANCE && a.function < b.function)
        {
            best = i;
        }
    }
    Ok(scored.swap_remove(best))
}

/// Runs all four functions; failures are returned alongside the successes.
pub fn run_consensus(lib: &EnsembleLibrary, k: usize, seed: u64) -> (Vec<ConsensusOutcome>, Vec<(ConsensusId, Error)>) {
    let run = |id: ConsensusId| (id, id.run(lib, k, seed));
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        ConsensusId::ALL.par_iter().map(|&id| run(id)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = ConsensusId::ALL.iter().map(|&id| run(id)).collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (id, r) in results {
        match r {
            Ok(p) => ok.push(ConsensusOutcome::new(id, p)),
            Err(e) => failed.push((id, e)),
        }
    }
    (ok, failed)
}

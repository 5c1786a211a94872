use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::select::{anmi_select, decrease_ensemble_with, hyperparameter_match, Pruning};
use crate::clusterers::{ClustererConfig, EnsembleLibrary};
use crate::consensus::{run_consensus, score_consensus, select_consensus, ConsensusOutcome, KPolicy, Reference};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Selection {
    #[serde(rename = "CC")]
    Consensus,
    #[serde(rename = "HM")]
    HyperparameterMatch,
    #[serde(rename = "ANMI")]
    Anmi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "Stg1")]
    Full,
    #[serde(rename = "Stg2")]
    Decreased,
}

/// One of the six strategy variants. Ordering is the tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StrategyId {
    pub stage: Stage,
    pub selection: Selection,
}

impl StrategyId {
    pub const ALL: [StrategyId; 6] = [
        StrategyId { stage: Stage::Full, selection: Selection::Consensus },
        StrategyId { stage: Stage::Full, selection: Selection::HyperparameterMatch },
        StrategyId { stage: Stage::Full, selection: Selection::Anmi },
        StrategyId { stage: Stage::Decreased, selection: Selection::Consensus },
        StrategyId { stage: Stage::Decreased, selection: Selection::HyperparameterMatch },
        StrategyId { stage: Stage::Decreased, selection: Selection::Anmi },
    ];

    pub fn position(self) -> usize {
        Self::ALL.iter().position(|&s| s == self).expect("listed")
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sel = match self.selection {
            Selection::Consensus => "CC",
            Selection::HyperparameterMatch => "HM",
            Selection::Anmi => "ANMI",
        };
        let stage = match self.stage {
            Stage::Full => "Stg1",
            Stage::Decreased => "Stg2",
        };
        write!(f, "{sel}-{stage}")
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub id: StrategyId,
    pub partition: Partition,
    /// Library member behind the outcome; absent for consensus outcomes.
    pub config: Option<ClustererConfig>,
    pub consensus: ConsensusOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub pruning: Pruning,
    pub k: KPolicy,
    pub reference: Reference,
    pub seed: u64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self { pruning: Pruning::Keep(super::DEFAULT_KEEP), k: KPolicy::Median, reference: Reference::OutcomeSet, seed: 0 }
    }
}

/// Everything one stage produced.
#[derive(Clone, Debug)]
pub struct StageRun {
    pub stage: Stage,
    pub library_size: usize,
    pub k: usize,
    pub consensus: Vec<ConsensusOutcome>,
    pub failures: Vec<(String, String)>,
}

#[derive(Clone, Debug)]
pub struct StrategyRun {
    pub outcomes: Vec<StrategyOutcome>,
    pub stages: Vec<StageRun>,
}

fn run_stage(lib: &EnsembleLibrary, stage: Stage, params: &StrategyParams) -> Result<(Vec<StrategyOutcome>, StageRun)> {
    let k = params.k.resolve(lib);
    let seed = derive_seed(params.seed, &format!("{stage:?}"));
    let (outcomes, failed) = run_consensus(lib, k, seed);
    let failures: Vec<(String, String)> = failed.iter().map(|(id, e)| (id.to_string(), e.to_string())).collect();
    let chosen = select_consensus(lib, &outcomes, params.reference).map_err(|e| match e {
        Error::Empty(_) => Error::InvalidArgument(format!(
            "every consensus function failed: {}",
            failures.iter().map(|(a, b)| format!("{a}: {b}")).collect::<Vec<_>>().join("; ")
        )),
        other => other,
    })?;
    let hm = hyperparameter_match(lib, &chosen.partition)?;
    let an = anmi_select(lib)?;
    let mk = |selection, partition, config| StrategyOutcome {
        id: StrategyId { stage, selection },
        partition,
        config,
        consensus: chosen.clone(),
    };
    let out = vec![
        mk(Selection::Consensus, chosen.partition.clone(), None),
        mk(Selection::HyperparameterMatch, hm.partition, Some(hm.config)),
        mk(Selection::Anmi, an.partition, Some(an.config)),
    ];
    let consensus = score_consensus(lib, &outcomes, params.reference)?;
    let run = StageRun { stage, library_size: lib.len(), k, consensus, failures };
    Ok((out, run))
}

/// Runs CC, HM and ANMI on the full library and on its decreased version.
pub fn run_strategies(lib: &EnsembleLibrary, params: &StrategyParams) -> Result<StrategyRun> {
    let (mut outcomes, full) = run_stage(lib, Stage::Full, params)?;
    let small = decrease_ensemble_with(lib, params.pruning)?;
    let (second, dec) = run_stage(&small, Stage::Decreased, params)?;
    outcomes.extend(second);
    Ok(StrategyRun { outcomes, stages: vec![full, dec] })
}

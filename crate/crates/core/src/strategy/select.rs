use serde::{Deserialize, Serialize};

use crate::clusterers::{ClustererConfig, EnsembleLibrary};
use crate::error::{invalid, Error, Result};
use crate::partition::Partition;
use crate::validity::{ami, anmi, pairwise_ami};

/// A library member picked by one of the selection rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selected {
    pub index: usize,
    pub config: ClustererConfig,
    pub partition: Partition,
    pub score: f64,
}

fn argmax(lib: &EnsembleLibrary, score: impl Fn(&Partition) -> Result<f64>) -> Result<Selected> {
    if lib.is_empty() {
        return Err(Error::Empty("ensemble library"));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, m) in lib.members().iter().enumerate() {
        let s = score(&m.partition)?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    let (index, score) = best.expect("non-empty library");
    let m = &lib.members()[index];
    Ok(Selected { index, config: m.config.clone(), partition: m.partition.clone(), score })
}

/// Member with the highest AMI to the consensus partition; earliest wins ties.
pub fn hyperparameter_match(lib: &EnsembleLibrary, consensus: &Partition) -> Result<Selected> {
    argmax(lib, |p| ami(p, consensus))
}

/// Member with the highest average NMI against the whole library.
pub fn anmi_select(lib: &EnsembleLibrary) -> Result<Selected> {
    let parts = lib.partitions();
    argmax(lib, |p| anmi(p, parts.iter().copied()))
}

/// AAMI of every member against the full library (self included).
pub fn member_aamis(lib: &EnsembleLibrary) -> Result<Vec<f64>> {
    let pw = pairwise_ami(&lib.partitions())?;
    let m = pw.len() as f64;
    Ok(pw.iter().map(|row| row.iter().sum::<f64>() / m).collect())
}

/// How the decreased ensemble is cut.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "value")]
pub enum Pruning {
    /// Keep this many lowest-AAMI members.
    Keep(usize),
    /// Keep members whose AAMI is at most this value.
    AamiCut(f64),
}

pub const DEFAULT_KEEP_GRAPH: usize = 200;
pub const DEFAULT_KEEP: usize = 100;

/// Library positions of the `keep` least typical members, in library order.
pub fn decrease_indices(aamis: &[f64], keep: usize) -> Result<Vec<usize>> {
    if keep < 2 {
        return invalid(format!("keep must be at least 2, got {keep}"));
    }
    let mut order: Vec<usize> = (0..aamis.len()).collect();
    order.sort_by(|&a, &b| aamis[a].total_cmp(&aamis[b]).then(a.cmp(&b)));
    order.truncate(keep);
    order.sort_unstable();
    Ok(order)
}

/// Pruned library of the most diverse members. `keep >= m` is the identity.
pub fn decrease_ensemble(lib: &EnsembleLibrary, keep: usize) -> Result<EnsembleLibrary> {
    if keep < 2 {
        return invalid(format!("keep must be at least 2, got {keep}"));
    }
    if keep >= lib.len() {
        return Ok(lib.clone());
    }
    lib.select(&decrease_indices(&member_aamis(lib)?, keep)?)
}

pub fn decrease_ensemble_with(lib: &EnsembleLibrary, pruning: Pruning) -> Result<EnsembleLibrary> {
    match pruning {
        Pruning::Keep(keep) => decrease_ensemble(lib, keep),
        Pruning::AamiCut(cut) => {
            if !cut.is_finite() {
                return invalid("AAMI cut must be finite");
            }
            let aamis = member_aamis(lib)?;
            let idx: Vec<usize> = (0..lib.len()).filter(|&i| aamis[i] <= cut).collect();
            if idx.len() < 2 {
                return invalid(format!("AAMI cut {cut} keeps {} members, need at least 2", idx.len()));
            }
            lib.select(&idx)
        }
    }
}

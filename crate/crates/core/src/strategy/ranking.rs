use serde::{Deserialize, Serialize};

use super::run::StrategyId;
use crate::clusterers::ClustererConfig;
use crate::error::{invalid, Error, Result};
use crate::validity::MetricId;

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

const VARIANCE_TIE: f64 = 1e-12;

/// The metric whose unit-scaled scores vary most; ties go to the earlier metric id.
pub fn select_metric_by_variance(scaled: &[(MetricId, Vec<f64>)]) -> Result<MetricId> {
    if scaled.is_empty() {
        return Err(Error::Empty("metric score lists"));
    }
    let mut best: Option<(MetricId, f64)> = None;
    for (id, v) in scaled {
        if v.len() < 2 {
            return invalid(format!("{id} needs at least two scores"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return invalid(format!("{id} has non-finite scaled scores"));
        }
        let var = sample_variance(v);
        best = match best {
            None => Some((*id, var)),
            Some((bid, bv)) if var > bv + VARIANCE_TIE || ((var - bv).abs() <= VARIANCE_TIE && *id < bid) => Some((*id, var)),
            keep => keep,
        };
    }
    Ok(best.expect("non-empty").0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalCandidate {
    /// 1 is the best score.
    pub rank: usize,
    pub config: ClustererConfig,
    pub value: f64,
}

/// Best `top` configurations under `metric`; non-finite scores are skipped
/// and equal scores keep input order.
pub fn optimal_candidates(scores: &[(ClustererConfig, f64)], metric: MetricId, top: usize) -> Vec<OptimalCandidate> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].1.is_finite()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (scores[a].1, scores[b].1);
        let ord = if metric.better(x, y) {
            std::cmp::Ordering::Less
        } else if metric.better(y, x) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        };
        ord.then(a.cmp(&b))
    });
    idx.into_iter()
        .take(top)
        .enumerate()
        .map(|(r, i)| OptimalCandidate { rank: r + 1, config: scores[i].0.clone(), value: scores[i].1 })
        .collect()
}

/// A strategy outcome as seen by the ranking.
#[derive(Clone, Debug, PartialEq)]
pub struct RankInput {
    pub id: StrategyId,
    pub config: Option<ClustererConfig>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub id: StrategyId,
    pub value: f64,
    pub closeness: f64,
    pub exact_match: bool,
    pub rank_weighted: usize,
    pub weight: f64,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub rows: Vec<RankingRow>,
    pub notes: Vec<String>,
}

pub const OPTIMAL_TOP: usize = 5;
pub const NO_MATCH_RANK: usize = OPTIMAL_TOP + 1;

/// Closeness to the best optimal score, exact-match weighting and final rank.
///
/// Ranks are 1..=len, ordered by weight and then by strategy id.
pub fn rank_strategies(optimal: &[OptimalCandidate], outcomes: &[RankInput]) -> Result<Ranking> {
    let Some(best) = optimal.first() else {
        return Err(Error::Empty("optimal candidates"));
    };
    if outcomes.is_empty() {
        return Err(Error::Empty("strategy outcomes"));
    }
    let mut notes = Vec::new();
    if optimal.len() < OPTIMAL_TOP {
        notes.push(format!("only {} optimal candidates available", optimal.len()));
    }
    let gaps: Vec<f64> = outcomes.iter().map(|o| (best.value - o.value).abs()).collect();
    let finite: Vec<f64> = gaps.iter().copied().filter(|g| g.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut rows: Vec<RankingRow> = outcomes
        .iter()
        .zip(&gaps)
        .map(|(o, &g)| {
            let closeness = if !g.is_finite() {
                notes.push(format!("{} has no finite score; closeness set to 1", o.id));
                1.0
            } else if hi > lo {
                (g - lo) / (hi - lo)
            } else {
                0.0
            };
            let matched = o.config.as_ref().and_then(|c| {
                let h = c.hyperparameters();
                optimal.iter().find(|cand| cand.config.hyperparameters() == h)
            });
            let rank_weighted = matched.map_or(NO_MATCH_RANK, |c| c.rank);
            RankingRow {
                id: o.id,
                value: o.value,
                closeness,
                exact_match: matched.is_some(),
                rank_weighted,
                weight: rank_weighted as f64 * closeness,
                rank: 0,
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].weight.total_cmp(&rows[b].weight).then(rows[a].id.cmp(&rows[b].id)));
    for (r, &i) in order.iter().enumerate() {
        rows[i].rank = r + 1;
    }
    Ok(Ranking { rows, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clusterers::Algorithm;

    fn km(k: usize, seed: u64) -> ClustererConfig {
        ClustererConfig::new(Algorithm::KMeans { k }, seed)
    }

    #[test]
    fn variance_selection() {
        let v = vec![(MetricId::Si, vec![0.4, 0.6]), (MetricId::Chi, vec![0.0, 1.0])];
        assert_eq!(select_metric_by_variance(&v).unwrap(), MetricId::Chi);
        let flat = vec![(MetricId::Db, vec![0.5, 0.5]), (MetricId::Si, vec![0.5, 0.5])];
        assert_eq!(select_metric_by_variance(&flat).unwrap(), MetricId::Si);
        assert!(select_metric_by_variance(&[(MetricId::Si, vec![1.0])]).is_err());
    }

    #[test]
    fn candidates_respect_orientation() {
        let scores = vec![(km(2, 0), 0.3), (km(3, 0), f64::NAN), (km(4, 0), 0.1), (km(5, 0), 0.3)];
        let si = optimal_candidates(&scores, MetricId::Si, 5);
        assert_eq!(si.iter().map(|c| c.config.algorithm.k().unwrap()).collect::<Vec<_>>(), vec![2, 5, 4]);
        let db = optimal_candidates(&scores, MetricId::Db, 2);
        assert_eq!(db[0].config.algorithm.k(), Some(4));
        assert_eq!(db.len(), 2);
    }

    #[test]
    fn exact_match_at_zero_closeness_ranks_first() {
        let optimal: Vec<OptimalCandidate> =
            (0..5).map(|i| OptimalCandidate { rank: i + 1, config: km(10 + i, 0), value: 0.9 - 0.01 * i as f64 }).collect();
        let inputs: Vec<RankInput> = StrategyId::ALL
            .iter()
            .enumerate()
            .map(|(i, &id)| RankInput {
                id,
                config: (i > 0).then(|| km(if i == 4 { 10 } else { 2 + i }, 77)),
                value: if i == 4 { 0.9 } else { 0.5 + 0.05 * i as f64 },
            })
            .collect();
        let r = rank_strategies(&optimal, &inputs).unwrap();
        let hm2 = &r.rows[4];
        assert!(hm2.exact_match && hm2.rank_weighted == 1 && hm2.closeness == 0.0 && hm2.rank == 1);
        assert!(r.notes.is_empty());
    }

    #[test]
    fn no_matches_rank_by_closeness() {
        let optimal = vec![OptimalCandidate { rank: 1, config: km(9, 0), value: 1.0 }];
        let inputs: Vec<RankInput> = StrategyId::ALL
            .iter()
            .enumerate()
            .map(|(i, &id)| RankInput { id, config: None, value: 1.0 - 0.1 * i as f64 })
            .collect();
        let r = rank_strategies(&optimal, &inputs).unwrap();
        for (i, row) in r.rows.iter().enumerate() {
            assert_eq!(row.rank, i + 1);
            assert_eq!(row.rank_weighted, NO_MATCH_RANK);
            assert!((row.closeness - i as f64 / 5.0).abs() < 1e-12);
        }
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn constant_values_tie_break_by_id() {
        let optimal = vec![OptimalCandidate { rank: 1, config: km(9, 0), value: 0.2 }];
        let inputs: Vec<RankInput> =
            StrategyId::ALL.iter().rev().map(|&id| RankInput { id, config: None, value: 0.7 }).collect();
        let r = rank_strategies(&optimal, &inputs).unwrap();
        assert!(r.rows.iter().all(|row| row.closeness == 0.0 && row.weight == 0.0));
        assert_eq!(r.rows.iter().map(|row| row.rank).collect::<Vec<_>>(), vec![6, 5, 4, 3, 2, 1]);
    }
}

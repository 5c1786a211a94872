//! End-to-end acceptance checks. Each test writes one `PASS`/`FAIL` line to
//! stderr (bypassing output capture) before asserting.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use ensclust::clusterers::{kmeans_restarts, Algorithm, ClustererConfig, EnsembleLibrary, Member};
use ensclust::consensus::{balance_bounds, hgpa_parts, hyperedge_cut, hyperedges, ConsensusId, BALANCE_TOLERANCE};
use ensclust::data::{generate_monthly, generate_synthetic, DataTable, MonthlySpec, SyntheticSpec};
use ensclust::embed::{intersect_graphs, spectral_layout, FuzzyGraph, GraphEmbedding};
use ensclust::pipeline::{load_months, run_pipeline, write_synthetic, OutputDir, SynthRequest};
use ensclust::prep::{fit_transform, one_hot_encode};
use ensclust::rng::rng;
use ensclust::strategy::{
    decrease_ensemble, hyperparameter_match, rank_strategies, sample_size_search, transformed_features, variance,
    OptimalCandidate, RankInput, SampleSearchParams, SamplingStrategy, StrategyId, NO_MATCH_RANK,
};
use ensclust::temporal::{cluster_profile, stability_match, BinPlan, ClusterProfile, MatchMode};
use ensclust::validity::{ami, expected_mutual_information, MetricId};
use ensclust::{Matrix, Partition};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("[{}] criterion {id:>2}: {name} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn check(id: u32, name: &str, ok: bool, detail: String) {
    report(id, name, ok, &detail);
    assert!(ok, "criterion {id} failed: {detail}");
}

fn ms(d: Duration) -> String {
    format!("{:.0} ms", d.as_secs_f64() * 1e3)
}

// ---- independent oracles -------------------------------------------------

fn centroid(points: &[&[f64]]) -> Vec<f64> {
    let d = points[0].len();
    (0..d).map(|j| points.iter().map(|p| p[j]).sum::<f64>() / points.len() as f64).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// S-Dbw as scatter plus inter-cluster density, written directly from the
/// definitions. The density radius is the mean per-cluster standard
/// deviation norm.
fn sdbw_oracle(m: &Matrix, labels: &[i32]) -> f64 {
    let mut ks: Vec<i32> = labels.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let k = ks.len();
    let d = m.cols();
    let clusters: Vec<Vec<&[f64]>> =
        ks.iter().map(|&c| (0..m.rows()).filter(|&i| labels[i] == c).map(|i| m.row(i)).collect()).collect();
    let all: Vec<&[f64]> = (0..m.rows()).map(|i| m.row(i)).collect();
    let var_vec = |pts: &[&[f64]]| -> Vec<f64> {
        let c = centroid(pts);
        (0..d).map(|j| pts.iter().map(|p| (p[j] - c[j]).powi(2)).sum::<f64>() / pts.len() as f64).collect()
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scat = clusters.iter().map(|c| norm(&var_vec(c))).sum::<f64>() / k as f64 / norm(&var_vec(&all));
    let radius = clusters.iter().map(|c| var_vec(c).iter().sum::<f64>().sqrt()).sum::<f64>() / k as f64;
    let cents: Vec<Vec<f64>> = clusters.iter().map(|c| centroid(c)).collect();
    let density = |u: &[f64], pts: &[&[f64]]| pts.iter().filter(|p| dist(p, u) <= radius).count() as f64;
    let mut dens = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let mid: Vec<f64> = cents[i].iter().zip(&cents[j]).map(|(a, b)| (a + b) / 2.0).collect();
            let union: Vec<&[f64]> = clusters[i].iter().chain(&clusters[j]).copied().collect();
            let den = density(&cents[i], &clusters[i]).max(density(&cents[j], &clusters[j])).max(1.0);
            dens += density(&mid, &union) / den;
        }
    }
    scat + dens / (k * (k - 1)) as f64
}

fn contingency_mi(u: &[usize], v: &[usize]) -> f64 {
    let n = u.len() as f64;
    let mut joint: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut a: BTreeMap<usize, f64> = BTreeMap::new();
    let mut b: BTreeMap<usize, f64> = BTreeMap::new();
    for (&x, &y) in u.iter().zip(v) {
        *joint.entry((x, y)).or_default() += 1.0;
        *a.entry(x).or_default() += 1.0;
        *b.entry(y).or_default() += 1.0;
    }
    joint.iter().map(|(&(x, y), &c)| c / n * (n * c / (a[&x] * b[&y])).ln()).sum()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn noisy_copy(t: &Partition, k: usize, rate: f64, seed: u64) -> Partition {
    let mut r = rng(seed);
    Partition::new(t.labels().iter().map(|&l| if r.random_bool(rate) { r.random_range(0..k as i64) } else { i64::from(l) }))
}

// ---- criteria ---------------------------------------------------------------

#[test]
fn criterion_01_metric_oracles() {
    let t0 = Instant::now();
    let m = Matrix::from_rows(&[[0.0], [0.1], [10.0], [10.1]]).unwrap();
    let p = Partition::from_i32(&[0, 0, 1, 1]);
    let si_hand = (2.0 * (1.0 - 0.1 / 10.05) + 2.0 * (1.0 - 0.1 / 9.95)) / 4.0;
    let expected = [(MetricId::Si, si_hand), (MetricId::Chi, 20000.0), (MetricId::Db, 0.01), (MetricId::Di, 200.0)];
    let mut worst: f64 = 0.0;
    for (id, want) in expected {
        let got = id.evaluate(&m, &p).unwrap();
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
    }
    let toy_ok = worst <= 1e-9 && (si_hand - 0.990).abs() < 1e-3;
    let mut sdbw_gap: f64 = 0.0;
    for s in 0..20u64 {
        let mut r = rng(1000 + s);
        let n = r.random_range(12..40);
        let d = r.random_range(1..4);
        let k = r.random_range(2..5);
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..d).map(|_| r.random::<f64>() * 4.0 + (i % k) as f64 * 2.0).collect()).collect();
        let labels: Vec<i32> = (0..n).map(|i| (i % k) as i32).collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let got = MetricId::SdbwHalkidi.evaluate(&m, &Partition::from_i32(&labels)).unwrap();
        sdbw_gap = sdbw_gap.max((got - sdbw_oracle(&m, &labels)).abs());
    }
    let el = t0.elapsed();
    check(
        1,
        "metric oracle suite",
        toy_ok && sdbw_gap <= 1e-9 && el < Duration::from_secs(1),
        format!("toy rel err {worst:.1e}, S-Dbw max gap {sdbw_gap:.1e}, {}", ms(el)),
    );
}

#[test]
fn criterion_02_information_theory() {
    let t0 = Instant::now();
    let u = Partition::from_usize(&(0..300).map(|i| i % 7).collect::<Vec<_>>());
    let self_ami = ami(&u, &u).unwrap();
    let mut total = 0.0;
    for s in 0..50u64 {
        let mut r = rng(s);
        let a: Vec<usize> = (0..1000).map(|_| r.random_range(0..5)).collect();
        let b: Vec<usize> = (0..1000).map(|_| r.random_range(0..5)).collect();
        total += ami(&Partition::from_usize(&a), &Partition::from_usize(&b)).unwrap();
    }
    let mean = total / 50.0;
    let mut emi_gap: f64 = 0.0;
    let mut r = rng(77);
    for n in 3..=8usize {
        let perms = permutations(n);
        for _ in 0..3 {
            let a: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
            let b: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
            let brute = perms
                .iter()
                .map(|p| contingency_mi(&a, &p.iter().map(|&i| b[i]).collect::<Vec<_>>()))
                .sum::<f64>()
                / perms.len() as f64;
            let got = expected_mutual_information(&Partition::from_usize(&a), &Partition::from_usize(&b)).unwrap();
            emi_gap = emi_gap.max((got - brute).abs());
        }
    }
    let el = t0.elapsed();
    check(
        2,
        "information-theory suite",
        self_ami == 1.0 && mean.abs() <= 0.02 && emi_gap <= 1e-9 && el < Duration::from_secs(30),
        format!("AMI(u,u)={self_ami}, independent mean {mean:+.4}, E[MI] gap {emi_gap:.1e}, {}", ms(el)),
    );
}

#[test]
fn criterion_03_consensus_recovery() {
    let t0 = Instant::now();
    let (_, truth) = generate_synthetic(&SyntheticSpec::blobs(600, 3, 2, 8.0, 3)).unwrap();
    let noisy = EnsembleLibrary::from_partitions((0..20).map(|s| noisy_copy(&truth, 3, 0.1, 500 + s)).collect()).unwrap();
    let unanimous = EnsembleLibrary::from_partitions(vec![truth.clone(); 20]).unwrap();
    let mut detail = Vec::new();
    let mut ok = true;
    for id in ConsensusId::ALL {
        let a = ami(&id.run(&noisy, 3, 11).unwrap(), &truth).unwrap();
        let u = ami(&id.run(&unanimous, 3, 11).unwrap(), &truth).unwrap();
        ok &= a >= 0.9 && u == 1.0;
        detail.push(format!("{id} {a:.3}/{u}"));
    }
    let el = t0.elapsed();
    ok &= el < Duration::from_secs(60);
    check(3, "consensus recovery", ok, format!("noisy/unanimous AMI: {}, {}", detail.join(", "), ms(el)));
}

#[test]
fn criterion_04_hgpa_small_optimality() {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for s in 0..20u64 {
        let mut r = rng(4000 + s);
        let n = r.random_range(8..=12usize);
        let m = r.random_range(3..=6);
        let parts: Vec<Partition> = (0..m)
            .map(|_| {
                let k = r.random_range(2..=4usize);
                Partition::from_usize(&(0..n).map(|_| r.random_range(0..k)).collect::<Vec<_>>())
            })
            .collect();
        let refs: Vec<&Partition> = parts.iter().collect();
        let edges = hyperedges(&refs);
        let got = hgpa_parts(&refs, 2, s).unwrap();
        let (lo, hi) = balance_bounds(n, 1, 2, BALANCE_TOLERANCE).unwrap();
        let mut best = usize::MAX;
        for mask in 0u32..(1 << n) {
            let size = mask.count_ones() as usize;
            if size < lo || size > hi {
                continue;
            }
            let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            best = best.min(hyperedge_cut(&edges, &Partition::from_usize(&labels)));
        }
        let cut = hyperedge_cut(&edges, &got);
        ok &= (cut as f64) <= 1.2 * best as f64;
        if best > 0 {
            worst = worst.max(cut as f64 / best as f64);
        }
    }
    check(4, "HGPA small-instance optimality", ok, format!("worst cut ratio {worst:.3} over 20 ensembles"));
}

fn random_library(r: &mut ensclust::rng::Rng, n: usize) -> (EnsembleLibrary, Partition) {
    let m = r.random_range(3..12);
    let mut parts: Vec<Partition> = (0..m)
        .map(|_| {
            let k = r.random_range(1..5i64);
            Partition::new((0..n).map(|_| r.random_range(0..k)))
        })
        .collect();
    // repeat members to force exact ties
    for _ in 0..r.random_range(0..3) {
        let i = r.random_range(0..parts.len());
        parts.push(parts[i].clone());
    }
    parts.shuffle(r);
    let members = parts
        .into_iter()
        .enumerate()
        .map(|(i, partition)| Member { config: ClustererConfig { algorithm: Algorithm::KMeans { k: i + 2 }, seed: 0 }, partition })
        .collect();
    let consensus = if r.random_bool(0.5) {
        Partition::new((0..n).map(|_| r.random_range(0..3)))
    } else {
        Partition::new((0..n).map(|i| (i % 2) as i64))
    };
    (EnsembleLibrary::new(members).unwrap(), consensus)
}

#[test]
fn criterion_05_hyperparameter_match_scan() {
    let mut agree = 0;
    let mut ties = 0;
    for s in 0..50u64 {
        let mut r = rng(5000 + s);
        let (lib, c) = random_library(&mut r, 30);
        let scores: Vec<f64> = lib.members().iter().map(|m| ami(&c, &m.partition).unwrap()).collect();
        let mut best = 0;
        for i in 1..scores.len() {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        ties += usize::from(scores.iter().filter(|&&x| x == scores[best]).count() > 1);
        let got = hyperparameter_match(&lib, &c).unwrap();
        agree += usize::from(got.index == best && got.partition == lib.members()[best].partition);
    }
    check(5, "hyperparameter match equals exhaustive scan", agree == 50, format!("{agree}/50 agree, {ties} with ties"));
}

#[test]
fn criterion_06_sample_size_signature() {
    let t0 = Instant::now();
    let mut spec = SyntheticSpec::blobs(2000, 4, 3, 3.0, 5);
    spec.categorical_levels = vec![4];
    let (table, _) = generate_synthetic(&spec).unwrap();
    let metrics = [MetricId::Si, MetricId::Di, MetricId::Chi, MetricId::Db];
    let params = SampleSearchParams {
        sizes: (200..=1000).step_by(100).collect(),
        ks: (2..=30).collect(),
        metrics: metrics.to_vec(),
        strategies: vec![SamplingStrategy::Random],
        stratum: Some("c0".into()),
        seeds: (0..10).collect(),
        restarts: 2,
    };
    let rep = sample_size_search(&table, &params, &transformed_features).unwrap();
    let var: BTreeMap<MetricId, f64> =
        metrics.iter().map(|&m| (m, variance(&rep.series(SamplingStrategy::Random, m)))).collect();
    let chi = var[&MetricId::Chi];
    let min_ratio = metrics.iter().filter(|&&m| m != MetricId::Chi).map(|m| chi / var[m]).fold(f64::INFINITY, f64::min);
    check(
        6,
        "sample-size search CHI instability",
        min_ratio >= 2.0,
        format!(
            "AAMI variance {}; min CHI ratio {min_ratio:.1}, {}",
            var.iter().map(|(m, v)| format!("{m} {v:.2e}")).collect::<Vec<_>>().join(", "),
            ms(t0.elapsed())
        ),
    );
}

#[test]
fn criterion_07_pruning() {
    let mut ok = true;
    let mut cases = 0;
    for s in 0..10u64 {
        let mut r = rng(7000 + s);
        let (lib, _) = random_library(&mut r, 40);
        let parts = lib.partitions();
        let aami: Vec<f64> = parts
            .iter()
            .map(|p| parts.iter().map(|q| ami(p, q).unwrap()).sum::<f64>() / parts.len() as f64)
            .collect();
        for keep in 2..=lib.len() {
            let small = decrease_ensemble(&lib, keep).unwrap();
            let mut kept: Vec<f64> = small
                .members()
                .iter()
                .map(|m| aami[lib.members().iter().position(|x| x.config == m.config).unwrap()])
                .collect();
            kept.sort_by(f64::total_cmp);
            let mut all = aami.clone();
            all.sort_by(f64::total_cmp);
            ok &= kept == all[..keep];
            cases += 1;
        }
        ok &= decrease_ensemble(&lib, lib.len()).unwrap() == lib;
    }
    check(7, "decreased-ensemble pruning", ok, format!("{cases} keep values over 10 libraries"));
}

fn cfg(k: usize) -> ClustererConfig {
    ClustererConfig { algorithm: Algorithm::KMeans { k }, seed: 0 }
}

/// Rank vector by hand: closeness = min-max scaled |best - value|, weight =
/// matched rank (or 6) times closeness, ordinal ranks by (weight, position).
fn hand_ranks(best: f64, optimal: &[usize], outcomes: &[(Option<usize>, f64)]) -> Vec<usize> {
    let gaps: Vec<f64> = outcomes.iter().map(|o| (best - o.1).abs()).collect();
    let lo = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = outcomes
        .iter()
        .zip(&gaps)
        .map(|(o, g)| {
            let close = if hi > lo { (g - lo) / (hi - lo) } else { 0.0 };
            let rw = o.0.and_then(|k| optimal.iter().position(|&x| x == k)).map_or(NO_MATCH_RANK, |p| p + 1);
            rw as f64 * close
        })
        .collect();
    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
    let mut rank = vec![0; outcomes.len()];
    for (r, i) in order.into_iter().enumerate() {
        rank[i] = r + 1;
    }
    rank
}

#[test]
fn criterion_08_ranking_mechanics() {
    // literal case: HM-Stg1 is the rank-1 optimal config at closeness 0
    let optimal: Vec<OptimalCandidate> =
        [(30, 0.9), (10, 0.8), (12, 0.7), (14, 0.6), (16, 0.5)].iter().enumerate().map(|(i, &(k, v))| OptimalCandidate { rank: i + 1, config: cfg(k), value: v }).collect();
    let outs: Vec<(Option<usize>, f64)> = vec![(None, 0.5), (Some(30), 0.9), (Some(3), 0.7), (None, 0.3), (Some(12), 0.7), (Some(4), 0.1)];
    let to_inputs = |outs: &[(Option<usize>, f64)]| -> Vec<RankInput> {
        outs.iter().zip(StrategyId::ALL).map(|(o, id)| RankInput { id, config: o.0.map(cfg), value: o.1 }).collect()
    };
    let lit = rank_strategies(&optimal, &to_inputs(&outs)).unwrap();
    let lit_ranks: Vec<usize> = lit.rows.iter().map(|r| r.rank).collect();
    // gaps 0.4,0,0.2,0.6,0.2,0.8 -> closeness .5,0,.25,.75,.25,1 -> weights 3,0,1.5,4.5,.75,6
    let mut ok = lit.rows[1].rank == 1 && lit.rows[1].closeness == 0.0 && lit_ranks == vec![4, 1, 3, 5, 2, 6];
    let mut cases = 1;
    for s in 0..9u64 {
        let mut r = rng(8000 + s);
        let ks: Vec<usize> = {
            let mut v: Vec<usize> = (2..12).collect();
            v.shuffle(&mut r);
            v.truncate(5);
            v
        };
        let values: Vec<f64> = {
            let mut v: Vec<f64> = (0..5).map(|_| r.random::<f64>()).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        };
        let optimal: Vec<OptimalCandidate> =
            ks.iter().zip(&values).enumerate().map(|(i, (&k, &v))| OptimalCandidate { rank: i + 1, config: cfg(k), value: v }).collect();
        let exact = r.random_range(0..6);
        let outs: Vec<(Option<usize>, f64)> = (0..6)
            .map(|i| {
                if i == exact {
                    (Some(ks[0]), values[0])
                } else if r.random_bool(0.3) {
                    (None, r.random::<f64>() - 0.5)
                } else {
                    (Some(r.random_range(2..14)), r.random::<f64>() - 0.5)
                }
            })
            .collect();
        let got = rank_strategies(&optimal, &to_inputs(&outs)).unwrap();
        let ranks: Vec<usize> = got.rows.iter().map(|r| r.rank).collect();
        let want = hand_ranks(values[0], &ks, &outs);
        ok &= ranks == want && got.rows[exact].closeness == 0.0 && got.rows[exact].exact_match;
        ok &= got.rows[exact].rank == 1 || (0..exact).any(|i| got.rows[i].weight == 0.0);
        cases += 1;
    }
    check(8, "ranking mechanics", ok, format!("{cases} cases, literal ranks {lit_ranks:?}"));
}

#[test]
fn criterion_09_stability_detection() {
    let mut wrong = 0;
    let mut planted_min: f64 = 1.0;
    let mut other_max: f64 = 0.0;
    for seed in 0..10u64 {
        let mut base = SyntheticSpec::blobs(1000, 4, 2, 4.0, seed);
        base.categorical_levels = vec![8; 5];
        let spec = MonthlySpec { base, months: 3, preserved: 1, start: "2020-01".into() };
        let draws = generate_monthly(&spec).unwrap();
        let tables: Vec<&DataTable> = draws.iter().map(|d| &d.table).collect();
        let plan = BinPlan::fit(&tables, &[], &[]).unwrap();
        let profiles: Vec<Vec<ClusterProfile>> = draws
            .iter()
            .map(|d| cluster_profile(&d.truth, &d.table, &plan, d.table.period().unwrap()).unwrap())
            .collect();
        for a in 0..3 {
            for b in a + 1..3 {
                for m in stability_match(&profiles[a], &profiles[b], 0.5, &[], MatchMode::Averaged).unwrap() {
                    let planted = m.cluster_a == draws[a].preserved[0] && m.cluster_b == draws[b].preserved[0];
                    if planted {
                        planted_min = planted_min.min(m.mean_ami);
                    } else {
                        other_max = other_max.max(m.mean_ami);
                    }
                    wrong += usize::from(m.matched != planted);
                }
            }
        }
    }
    check(
        9,
        "stability detection",
        wrong == 0,
        format!("{wrong} misclassified pairs over 10 seeds; planted min {planted_min:.3}, others max {other_max:.3}"),
    );
}

#[test]
fn criterion_10_embedding_sanity() {
    let mut spec = SyntheticSpec::blobs(600, 3, 2, 6.0, 10);
    spec.categorical_levels = vec![3, 3];
    spec.category_bias = 0.9;
    let (table, truth) = generate_synthetic(&spec).unwrap();
    let (enc, _) = fit_transform(&one_hot_encode(&table).unwrap()).unwrap();
    let g = GraphEmbedding::default().graph(&enc).unwrap();
    let y = spectral_layout(&g, 2).unwrap();
    let fit = kmeans_restarts(&y, 3, 1, 10).unwrap();
    let score = ami(&Partition::from_usize(&fit.labels), &truth).unwrap();
    let mut r = rng(10);
    let mut identities = true;
    for _ in 0..20 {
        let n = 8;
        let mut edges = |p: f64| -> FuzzyGraph {
            let mut e = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if r.random_bool(p) {
                        e.push((i, j, r.random_range(0.01..1.0)));
                    }
                }
            }
            FuzzyGraph::from_edges(n, e).unwrap()
        };
        let (a, b) = (edges(0.5), edges(0.5));
        let g0 = intersect_graphs(&a, &b, 0.0).unwrap();
        let g1 = intersect_graphs(&a, &b, 1.0).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let one_sided = ensclust::embed::ONE_SIDED_WEIGHT;
                let (wa, wb) = (a.weight(i, j), b.weight(i, j));
                if wa.is_some() || wb.is_some() {
                    identities &= g0.weight(i, j) == Some(wa.unwrap_or(one_sided));
                    identities &= g1.weight(i, j) == Some(wb.unwrap_or(one_sided));
                } else {
                    identities &= g0.weight(i, j).is_none() && g1.weight(i, j).is_none();
                }
            }
        }
    }
    check(
        10,
        "embedding sanity",
        score >= 0.9 && identities,
        format!("k-means on spectral layout AMI {score:.3}; alpha boundary identities {}", if identities { "exact" } else { "broken" }),
    );
}

#[test]
fn criterion_11_end_to_end_determinism() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let req = SynthRequest::new(2, 3, 1000, 7);
    let data = OutputDir::create(dir.path().join("data"), req.hash()).unwrap();
    let mut cfg = write_synthetic(&req, &data).unwrap().config;
    cfg.resolve_paths(data.root());
    let months = load_months(&cfg).unwrap();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = OutputDir::create(dir.path().join(run), cfg.hash()).unwrap();
        let s = run_pipeline(&cfg, &months, &out).unwrap();
        assert!(s.failed().is_empty(), "{:?}", s.failed());
        let mut csvs: Vec<(String, Vec<u8>)> = std::fs::read_dir(out.root())
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        csvs.sort();
        outputs.push(csvs);
    }
    let el = t0.elapsed();
    let identical = outputs[0] == outputs[1] && outputs[0].len() >= 7;
    check(
        11,
        "end-to-end determinism",
        identical && el < Duration::from_secs(300),
        format!("{} CSVs byte-identical: {identical}; two runs of 2 x 1000 rows in {:.1} s", outputs[0].len(), el.as_secs_f64()),
    );
}

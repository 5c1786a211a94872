use rand::seq::SliceRandom;

use super::check_k;
use crate::clusterers::EnsembleLibrary;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::rng::{derive_seed, rng};

pub const BALANCE_TOLERANCE: f64 = 0.05;
pub const RELAXED_TOLERANCE: f64 = 0.20;
const MAX_PASSES: usize = 20;

/// Hyperedges of an ensemble: every cluster with at least two points.
pub fn hyperedges(parts: &[&Partition]) -> Vec<Vec<usize>> {
    parts
        .iter()
        .flat_map(|p| p.members())
        .filter(|c| c.len() >= 2)
        .collect()
}

/// Number of hyperedges whose points fall in more than one part.
pub fn hyperedge_cut(edges: &[Vec<usize>], labels: &Partition) -> usize {
    let l = labels.labels();
    edges.iter().filter(|e| e.iter().any(|&v| l[v] != l[e[0]])).count()
}

/// Admissible size range of the first side when `s` vertices are split for
/// `left` of `k` parts.
pub fn balance_bounds(s: usize, left: usize, k: usize, tol: f64) -> Option<(usize, usize)> {
    let target = s as f64 * left as f64 / k as f64;
    let lo = ((target * (1.0 - tol)).floor() as usize).max(left);
    let hi = ((target * (1.0 + tol)).ceil() as usize).min(s.saturating_sub(k - left));
    (lo <= hi).then_some((lo, hi))
}

/// Refinement cost: pin pairs split across sides, then cut hyperedges.
type Cost = (i64, i64);
const EXACT_LIMIT: usize = 16;

struct Bisection<'a> {
    inc: &'a [Vec<usize>],
    counts: Vec<[i64; 2]>,
    side: Vec<usize>,
    size0: usize,
}

impl Bisection<'_> {
    fn cost(&self) -> Cost {
        self.counts.iter().fold((0, 0), |(c, s), &[a, b]| (s + a * b, c + i64::from(a > 0 && b > 0)))
    }

    fn gain(&self, v: usize) -> Cost {
        let from = self.side[v];
        let mut g = (0, 0);
        for &e in &self.inc[v] {
            let (a, b) = (self.counts[e][from], self.counts[e][1 - from]);
            g.0 += a * b - (a - 1) * (b + 1);
            g.1 += i64::from(a > 0 && b > 0) - i64::from(a > 1);
        }
        g
    }

    fn flip(&mut self, v: usize) {
        let from = self.side[v];
        for &e in &self.inc[v] {
            self.counts[e][from] -= 1;
            self.counts[e][1 - from] += 1;
        }
        self.side[v] = 1 - from;
        if from == 0 {
            self.size0 -= 1;
        } else {
            self.size0 += 1;
        }
    }

    /// One Fiduccia–Mattheyses pass; returns whether the cost improved.
    fn pass(&mut self, lo: usize, hi: usize) -> bool {
        let s = self.side.len();
        let start = self.cost();
        let mut best = start;
        let mut moves: Vec<usize> = Vec::new();
        let mut best_len = 0;
        let mut locked = vec![false; s];
        let mut cur = start;
        let patience = s / 4 + 10;
        while moves.len() - best_len < patience {
            let mut pick: Option<(Cost, usize)> = None;
            for v in 0..s {
                if locked[v] {
                    continue;
                }
                let new0 = if self.side[v] == 0 { self.size0 - 1 } else { self.size0 + 1 };
                if new0 < lo || new0 > hi {
                    continue;
                }
                let g = self.gain(v);
                if pick.is_none_or(|(pg, _)| g > pg) {
                    pick = Some((g, v));
                }
            }
            let Some((g, v)) = pick else { break };
            self.flip(v);
            locked[v] = true;
            moves.push(v);
            cur = (cur.0 - g.0, cur.1 - g.1);
            if cur < best {
                best = cur;
                best_len = moves.len();
            }
        }
        for &v in moves[best_len..].iter().rev() {
            self.flip(v);
        }
        best < start
    }
}

fn bisect(edges: &[Vec<usize>], s: usize, lo: usize, hi: usize, seed: u64) -> Vec<usize> {
    let mut inc = vec![Vec::new(); s];
    for (e, pins) in edges.iter().enumerate() {
        for &v in pins {
            inc[v].push(e);
        }
    }
    if s <= EXACT_LIMIT {
        return exact_bisect(edges, s, lo, hi);
    }
    let starts = if s <= 64 { 8 } else { 4 };
    let mut best: Option<(Cost, Vec<usize>)> = None;
    for start in 0..starts {
        let mut order: Vec<usize> = (0..s).collect();
        order.shuffle(&mut rng(derive_seed(seed, &format!("start{start}"))));
        let size0 = ((lo + hi) / 2).max(lo);
        let side = grow(&inc, edges, &order, size0);
        let mut counts = vec![[0i64; 2]; edges.len()];
        for (e, pins) in edges.iter().enumerate() {
            for &v in pins {
                counts[e][side[v]] += 1;
            }
        }
        let mut b = Bisection { inc: &inc, counts, side, size0 };
        for _ in 0..MAX_PASSES {
            if !b.pass(lo, hi) {
                break;
            }
        }
        let (pairs, cut) = b.cost();
        let c = (cut, pairs);
        if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
            best = Some((c, b.side));
        }
    }
    best.expect("at least one start").1
}

fn exact_bisect(edges: &[Vec<usize>], s: usize, lo: usize, hi: usize) -> Vec<usize> {
    let mut best: Option<((usize, i64), u32)> = None;
    for mask in 0u32..(1 << s) {
        let size0 = s - mask.count_ones() as usize;
        if size0 < lo || size0 > hi {
            continue;
        }
        let (mut cut, mut pairs) = (0, 0i64);
        for e in edges {
            let b = e.iter().filter(|&&v| mask >> v & 1 == 1).count() as i64;
            let a = e.len() as i64 - b;
            cut += usize::from(a > 0 && b > 0);
            pairs += a * b;
        }
        if best.is_none_or(|(c, _)| (cut, pairs) < c) {
            best = Some(((cut, pairs), mask));
        }
    }
    let mask = best.expect("balance bounds admit a split").1;
    (0..s).map(|v| (mask >> v & 1) as usize).collect()
}

/// Greedy region growing: side 0 starts at `order[0]` and absorbs the vertex
/// sharing the most pins with it, ties broken by `order`.
fn grow(inc: &[Vec<usize>], edges: &[Vec<usize>], order: &[usize], size0: usize) -> Vec<usize> {
    let s = order.len();
    let mut rank = vec![0; s];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let mut side = vec![1; s];
    let mut conn = vec![0i64; s];
    let mut inside = vec![0usize; edges.len()];
    let mut next = order[0];
    for _ in 0..size0 {
        side[next] = 0;
        for &e in &inc[next] {
            inside[e] += 1;
            for &w in &edges[e] {
                conn[w] += 1;
            }
        }
        let mut pick: Option<usize> = None;
        for v in 0..s {
            if side[v] == 0 {
                continue;
            }
            if pick.is_none_or(|p| (conn[v], std::cmp::Reverse(rank[v])) > (conn[p], std::cmp::Reverse(rank[p]))) {
                pick = Some(v);
            }
        }
        match pick {
            Some(v) => next = v,
            None => break,
        }
    }
    side
}

fn recurse(
    vertices: &[usize],
    edges: &[Vec<usize>],
    k: usize,
    first_label: usize,
    seed: u64,
    labels: &mut [usize],
) -> Result<()> {
    let s = vertices.len();
    if k == 1 {
        vertices.iter().for_each(|&v| labels[v] = first_label);
        return Ok(());
    }
    let left = k / 2;
    let (lo, hi) = balance_bounds(s, left, k, BALANCE_TOLERANCE)
        .or_else(|| balance_bounds(s, left, k, RELAXED_TOLERANCE))
        .ok_or(Error::BalanceInfeasible { n: s, k })?;
    let mut local = std::collections::HashMap::with_capacity(s);
    for (p, &v) in vertices.iter().enumerate() {
        local.insert(v, p);
    }
    let sub: Vec<Vec<usize>> = edges
        .iter()
        .map(|e| e.iter().filter_map(|v| local.get(v).copied()).collect::<Vec<_>>())
        .filter(|e| e.len() >= 2)
        .collect();
    let side = bisect(&sub, s, lo, hi, seed);
    let (a, b): (Vec<usize>, Vec<usize>) = (0..s).partition(|&p| side[p] == 0);
    let a: Vec<usize> = a.into_iter().map(|p| vertices[p]).collect();
    let b: Vec<usize> = b.into_iter().map(|p| vertices[p]).collect();
    recurse(&a, &sub_global(&sub, vertices), left, first_label, derive_seed(seed, "left"), labels)?;
    recurse(&b, &sub_global(&sub, vertices), k - left, first_label + left, derive_seed(seed, "right"), labels)
}

fn sub_global(sub: &[Vec<usize>], vertices: &[usize]) -> Vec<Vec<usize>> {
    sub.iter().map(|e| e.iter().map(|&p| vertices[p]).collect()).collect()
}

/// Balanced k-way hypergraph partition by recursive bisection with
/// Fiduccia–Mattheyses refinement.
pub fn hgpa_parts(parts: &[&Partition], k: usize, seed: u64) -> Result<Partition> {
    let n = parts.first().map_or(0, |p| p.len());
    check_k(k, n)?;
    let edges = hyperedges(parts);
    let vertices: Vec<usize> = (0..n).collect();
    let mut labels = vec![0; n];
    recurse(&vertices, &edges, k, 0, seed, &mut labels)?;
    Ok(Partition::from_usize(&labels))
}

pub fn hgpa(lib: &EnsembleLibrary, k: usize, seed: u64) -> Result<Partition> {
    hgpa_parts(&lib.partitions(), k, seed)
}

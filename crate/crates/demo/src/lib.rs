//! Browser bindings: three small operations over the core crate, each
//! returning a JSON string for the page to draw.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use ensclust::clusterers::{kmeans_restarts, EnsembleLibrary};
use ensclust::consensus::ConsensusId;
use ensclust::data::{generate_synthetic, SyntheticSpec};
use ensclust::embed::{Embedder, GraphEmbedding};
use ensclust::prep::{fit_transform, one_hot_encode, yeo_johnson_apply, yeo_johnson_fit};
use ensclust::rng::rng;
use ensclust::validity::{ami, MetricId};
use ensclust::Partition;
use rand::Rng as _;

fn to_js(r: ensclust::Result<Value>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Mixed numeric/categorical blobs embedded in 2-D, then k-means on the layout.
pub fn embed_value(n: usize, k: usize, separation: f64, neighbors: usize, seed: u64) -> ensclust::Result<Value> {
    let mut spec = SyntheticSpec::blobs(n, k, 3, separation, seed);
    spec.categorical_levels = vec![4, 3];
    let (table, truth) = generate_synthetic(&spec)?;
    let (enc, _) = fit_transform(&one_hot_encode(&table)?)?;
    let emb = GraphEmbedding { neighbors, epochs: 100, ..GraphEmbedding::default() };
    let y = emb.embed(&enc, seed)?;
    let fit = Partition::from_usize(&kmeans_restarts(&y, k, seed, 5)?.labels);
    let scores: Vec<Value> = [MetricId::Si, MetricId::Db, MetricId::Chi]
        .iter()
        .map(|m| json!({ "metric": m.name(), "value": m.evaluate(&y, &fit).ok() }))
        .collect();
    Ok(json!({
        "points": y.iter_rows().map(|r| [r[0], r[1]]).collect::<Vec<_>>(),
        "truth": truth.labels(),
        "labels": fit.labels(),
        "ami": ami(&fit, &truth)?,
        "metrics": scores,
    }))
}

/// Consensus of an ensemble made of noisy copies of a planted partition.
pub fn consensus_value(n: usize, k: usize, members: usize, noise: f64, seed: u64) -> ensclust::Result<Value> {
    let truth = Partition::from_usize(&(0..n).map(|i| i % k).collect::<Vec<_>>());
    let parts = (0..members as u64)
        .map(|s| {
            let mut r = rng(seed.wrapping_mul(1_000_003).wrapping_add(s));
            Partition::new(truth.labels().iter().map(|&l| if r.random_bool(noise.clamp(0.0, 1.0)) { r.random_range(0..k as i64) } else { i64::from(l) }))
        })
        .collect::<Vec<_>>();
    let mean_member = parts.iter().map(|p| ami(p, &truth)).sum::<ensclust::Result<f64>>()? / members as f64;
    let lib = EnsembleLibrary::from_partitions(parts)?;
    let rows: Vec<Value> = ConsensusId::ALL
        .iter()
        .map(|id| match id.run(&lib, k, seed) {
            Ok(p) => json!({ "function": id.name(), "ami": ami(&p, &truth).ok(), "clusters": p.k() }),
            Err(e) => json!({ "function": id.name(), "error": e.to_string() }),
        })
        .collect();
    Ok(json!({ "member_ami": mean_member, "results": rows }))
}

/// Fitted Yeo-Johnson exponent and the transformed values.
pub fn yeo_johnson_value(values: &[f64]) -> ensclust::Result<Value> {
    let lambda = yeo_johnson_fit(values)?;
    let out: Vec<f64> = values.iter().map(|&x| yeo_johnson_apply(x, lambda)).collect();
    Ok(json!({ "lambda": lambda, "values": out }))
}

#[wasm_bindgen]
pub fn embed_demo(n: usize, k: usize, separation: f64, neighbors: usize, seed: u32) -> Result<String, JsValue> {
    to_js(embed_value(n, k, separation, neighbors, u64::from(seed)))
}

#[wasm_bindgen]
pub fn consensus_demo(n: usize, k: usize, members: usize, noise: f64, seed: u32) -> Result<String, JsValue> {
    to_js(consensus_value(n, k, members, noise, u64::from(seed)))
}

#[wasm_bindgen]
pub fn yeo_johnson_demo(values: &[f64]) -> Result<String, JsValue> {
    to_js(yeo_johnson_value(values))
}

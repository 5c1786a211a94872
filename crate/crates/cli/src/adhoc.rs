use std::fs::File;
use std::path::{Path, PathBuf};

use clap::Args;

use ensclust::pipeline::{config_hash, fmt_f64, OutputDir};
use ensclust::validity::{ami, MetricId};
use ensclust::{Matrix, Partition};

use crate::{compute, input, output_dir, CliError};

#[derive(Args, serde::Serialize)]
pub struct MetricsArgs {
    /// CSV of numeric feature columns, one row per point.
    #[arg(long)]
    data: PathBuf,
    /// Label files: CSV with a `label` column (or a single column).
    #[arg(long, required = true, num_args = 1..)]
    labels: Vec<PathBuf>,
    /// Comma-separated metric names; defaults to all.
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn reader(path: &Path) -> Result<csv::Reader<File>, CliError> {
    let f = File::open(path).map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(f))
}

fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let mut rdr = reader(path)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(input)?;
        let row: Vec<f64> = rec
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Input(format!("{}: row {i} is not all numeric", path.display())))?;
        rows.push(row);
    }
    Matrix::from_rows(&rows).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_labels(path: &Path) -> Result<Partition, CliError> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(input)?.clone();
    let col = header.iter().position(|h| h.trim() == "label").unwrap_or(header.len().saturating_sub(1));
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(input)?;
        let v = rec
            .get(col)
            .and_then(|s| s.trim().parse::<i64>().ok())
            .ok_or_else(|| CliError::Input(format!("{}: row {i} has no integer label", path.display())))?;
        labels.push(v);
    }
    Ok(Partition::new(labels))
}

pub fn metrics(a: &MetricsArgs) -> Result<(), CliError> {
    let ids: Vec<MetricId> = match &a.metrics {
        None => MetricId::ALL.to_vec(),
        Some(v) => v.iter().map(|m| m.trim().parse()).collect::<Result<_, _>>().map_err(input)?,
    };
    let m = read_matrix(&a.data)?;
    let parts: Vec<Partition> = a.labels.iter().map(|p| read_labels(p)).collect::<Result<_, _>>()?;
    for (p, path) in parts.iter().zip(&a.labels) {
        if p.len() != m.rows() {
            return Err(CliError::Input(format!("{}: {} labels for {} rows", path.display(), p.len(), m.rows())));
        }
    }
    let hash = config_hash(serde_json::to_string(a).map_err(compute)?.as_bytes());
    let out = OutputDir::create(output_dir(a.out.as_deref(), Path::new("metrics-out")), hash).map_err(input)?;
    let names: Vec<String> = a.labels.iter().map(|p| p.display().to_string()).collect();
    let mut rows = Vec::new();
    for (p, name) in parts.iter().zip(&names) {
        for &id in &ids {
            let (value, note) = match id.evaluate(&m, p) {
                Ok(v) => (fmt_f64(v), String::new()),
                Err(e) => (String::new(), e.to_string()),
            };
            println!("{name}\t{id}\t{}", if value.is_empty() { &note } else { &value });
            rows.push(vec![name.clone(), id.name().to_string(), value, note]);
        }
    }
    out.csv("metrics_adhoc.csv", &["labels", "metric", "value", "error"], &rows).map_err(compute)?;
    if parts.len() > 1 {
        let mut pairs = Vec::new();
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                let v = ami(&parts[i], &parts[j]).map_err(compute)?;
                pairs.push(vec![names[i].clone(), names[j].clone(), fmt_f64(v)]);
            }
        }
        out.csv("ami_adhoc.csv", &["labels_a", "labels_b", "ami"], &pairs).map_err(compute)?;
    }
    Ok(())
}

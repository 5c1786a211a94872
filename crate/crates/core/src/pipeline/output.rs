use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Writes report files into one directory, stamping each with the config hash.
#[derive(Clone, Debug)]
pub struct OutputDir {
    root: PathBuf,
    hash: String,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>, hash: impl Into<String>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root, hash: hash.into() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn open(&self, name: &str, stamp: &str) -> Result<BufWriter<File>> {
        let mut w = BufWriter::new(File::create(self.path(name))?);
        w.write_all(stamp.as_bytes())?;
        Ok(w)
    }

    /// CSV with a leading `# config-hash:` comment line.
    pub fn csv<S: AsRef<str>>(&self, name: &str, header: &[&str], rows: &[Vec<S>]) -> Result<PathBuf> {
        let w = self.open(name, &format!("# config-hash: {}\n", self.hash))?;
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(header)?;
        for r in rows {
            wtr.write_record(r.iter().map(|c| c.as_ref()))?;
        }
        wtr.flush()?;
        Ok(self.path(name))
    }

    /// CSV produced by a callback that receives the stamped writer.
    pub fn csv_with(&self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<PathBuf> {
        let mut w = self.open(name, &format!("# config-hash: {}\n", self.hash))?;
        body(&mut w)?;
        w.flush()?;
        Ok(self.path(name))
    }

    /// JSON lines; the first line is `{"config_hash": ...}`.
    pub fn jsonl<T: serde::Serialize>(&self, name: &str, items: impl IntoIterator<Item = T>) -> Result<PathBuf> {
        let stamp = format!("{}\n", serde_json::json!({ "config_hash": self.hash }));
        let mut w = self.open(name, &stamp)?;
        for it in items {
            serde_json::to_writer(&mut w, &it)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(self.path(name))
    }

    /// Pretty JSON object with a `config_hash` field added at the top level.
    pub fn json(&self, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
        let mut v = value.clone();
        if let Some(obj) = v.as_object_mut() {
            obj.insert("config_hash".into(), self.hash.clone().into());
        }
        let mut w = self.open(name, "")?;
        serde_json::to_writer_pretty(&mut w, &v)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(self.path(name))
    }

    /// SVG document; the hash is kept in a comment after the XML root opens.
    pub fn svg(&self, name: &str, doc: &str) -> Result<PathBuf> {
        let stamped = match doc.find('>') {
            Some(i) => format!("{}\n<!-- config-hash: {} -->{}", &doc[..=i], self.hash, &doc[i + 1..]),
            None => doc.to_string(),
        };
        let mut w = self.open(name, "")?;
        w.write_all(stamped.as_bytes())?;
        w.flush()?;
        Ok(self.path(name))
    }
}

/// Shortest round-trip float text; NaN and infinities as `NaN`, `inf`, `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        v.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Blue-to-red ramp for values in [0, 1].
fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}40{b:02x}")
}

const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f"];

/// Square heat map with the cell values in [0, 1]; NaN cells stay blank.
pub fn heatmap_svg(title: &str, labels: &[String], cells: &[Vec<f64>]) -> String {
    let n = labels.len();
    let cell = if n > 40 { 8.0 } else { 18.0 };
    let margin = 110.0;
    let size = margin + cell * n as f64 + 20.0;
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{}" font-family="sans-serif" font-size="10">"#,
        size + 20.0
    );
    let _ = write!(s, r#"<text x="10" y="16" font-size="13">{}</text>"#, escape(title));
    for (i, l) in labels.iter().enumerate() {
        let pos = margin + cell * (i as f64 + 0.5);
        let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, margin - 4.0, pos + 3.0 + 20.0, escape(l));
        let _ = write!(
            s,
            r#"<text transform="translate({pos},{}) rotate(-60)">{}</text>"#,
            margin + 16.0,
            escape(l)
        );
    }
    for (i, row) in cells.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v.is_nan() {
                continue;
            }
            let _ = write!(
                s,
                r#"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="{}"><title>{} / {}: {:.3}</title></rect>"#,
                margin + cell * j as f64,
                margin + 20.0 + cell * i as f64,
                ramp(v),
                escape(&labels[i]),
                escape(&labels[j]),
                v
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Grouped bar chart: one group per category, one bar per series.
pub fn bar_chart_svg(title: &str, y_label: &str, groups: &[String], series: &[(String, Vec<f64>)]) -> String {
    let (w, h, left, top, bottom) = (640.0, 360.0, 60.0, 30.0, 50.0);
    let max = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let plot_h = h - top - bottom;
    let plot_w = w - left - 140.0;
    let gw = plot_w / groups.len().max(1) as f64;
    let bw = gw * 0.8 / series.len().max(1) as f64;
    let mut s = String::new();
    let _ = write!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="10">"#);
    let _ = write!(s, r#"<text x="10" y="18" font-size="13">{}</text>"#, escape(title));
    let _ = write!(
        s,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        top + plot_h,
        left + plot_w,
        top + plot_h,
        top + plot_h
    );
    let _ = write!(s, r#"<text x="{left}" y="{}" text-anchor="end" dx="-4">{:.3}</text>"#, top + 4.0, max);
    let _ = write!(s, r#"<text x="{left}" y="{}" text-anchor="end" dx="-4">0</text>"#, top + plot_h);
    let _ = write!(
        s,
        r#"<text transform="translate(14,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
        top + plot_h / 2.0,
        escape(y_label)
    );
    for (g, name) in groups.iter().enumerate() {
        let gx = left + gw * g as f64 + gw * 0.1;
        let _ = write!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            left + gw * (g as f64 + 0.5),
            top + plot_h + 14.0,
            escape(name)
        );
        for (k, (label, vals)) in series.iter().enumerate() {
            let v = vals.get(g).copied().unwrap_or(f64::NAN);
            if !v.is_finite() {
                continue;
            }
            let bh = plot_h * v / max;
            let _ = write!(
                s,
                r#"<rect x="{}" y="{}" width="{bw}" height="{bh}" fill="{}"><title>{} / {}: {:.4}</title></rect>"#,
                gx + bw * k as f64,
                top + plot_h - bh,
                PALETTE[k % PALETTE.len()],
                escape(label),
                escape(name),
                v
            );
        }
    }
    for (k, (label, _)) in series.iter().enumerate() {
        let y = top + 14.0 * k as f64;
        let _ = write!(
            s,
            r#"<rect x="{}" y="{y}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            w - 130.0,
            PALETTE[k % PALETTE.len()],
            w - 115.0,
            y + 9.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

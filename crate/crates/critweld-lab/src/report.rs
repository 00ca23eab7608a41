//! Experiment reports: per-replica records, summary statistics and pass/fail
//! criteria, serialized as NDJSON plus a human-readable summary.
//!
//! A report is a pure function of (config, seed, code version) — no clocks,
//! no worker counts — so identical runs are byte-identical.

use crate::config::KvMap;
use crate::Result;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: String,
    /// Statement the experiment verifies (report header requirement).
    pub anchor: String,
    pub version: String,
    pub seed: u64,
    pub replicas: u64,
    pub config: Vec<(String, String)>,
    pub summary: Vec<(String, f64)>,
    pub criteria: Vec<Criterion>,
    pub series: Vec<Series>,
    pub rows: Vec<serde_json::Value>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(experiment: &str, anchor: &str, seed: u64, replicas: u64, params: &KvMap) -> Self {
        Report {
            experiment: experiment.to_string(),
            anchor: anchor.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            replicas,
            config: params.entries().map(|(k, v)| (k.clone(), v.clone())).collect(),
            summary: Vec::new(),
            criteria: Vec::new(),
            series: Vec::new(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn stat(&mut self, name: &str, value: f64) {
        self.summary.push((name.to_string(), value));
    }

    pub fn criterion(&mut self, name: &str, passed: bool, value: f64, threshold: &str) {
        self.criteria.push(Criterion {
            name: name.to_string(),
            passed,
            value,
            threshold: threshold.to_string(),
        });
    }

    pub fn note(&mut self, text: &str) {
        self.notes.push(text.to_string());
    }

    pub fn series(&mut self, name: &str, points: Vec<(f64, f64)>) {
        self.series.push(Series { name: name.to_string(), points });
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    /// NDJSON: one header object, then one object per replica row, then the
    /// summary/criteria records.
    pub fn to_ndjson(&self) -> Result<String> {
        let mut out = String::new();
        let header = serde_json::json!({
            "record": "header",
            "experiment": self.experiment,
            "anchor": self.anchor,
            "version": self.version,
            "seed": self.seed,
            "replicas": self.replicas,
            "config": self.config,
        });
        out.push_str(&serde_json::to_string(&header)?);
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let rec = serde_json::json!({"record": "row", "replica": i, "data": row});
            out.push_str(&serde_json::to_string(&rec)?);
            out.push('\n');
        }
        for (name, value) in &self.summary {
            let rec = serde_json::json!({"record": "stat", "name": name, "value": value});
            out.push_str(&serde_json::to_string(&rec)?);
            out.push('\n');
        }
        for s in &self.series {
            let rec = serde_json::json!({"record": "series", "name": s.name, "points": s.points});
            out.push_str(&serde_json::to_string(&rec)?);
            out.push('\n');
        }
        for c in &self.criteria {
            let rec = serde_json::json!({
                "record": "criterion", "name": c.name, "passed": c.passed,
                "value": c.value, "threshold": c.threshold,
            });
            out.push_str(&serde_json::to_string(&rec)?);
            out.push('\n');
        }
        for n in &self.notes {
            let rec = serde_json::json!({"record": "note", "text": n});
            out.push_str(&serde_json::to_string(&rec)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn summary_text(&self) -> String {
        let mut out = format!(
            "experiment: {}\nanchor: {}\nseed: {}  replicas: {}\n",
            self.experiment, self.anchor, self.seed, self.replicas
        );
        for (name, value) in &self.summary {
            out.push_str(&format!("  {name} = {value}\n"));
        }
        for n in &self.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
        for c in &self.criteria {
            out.push_str(&format!(
                "{} {} (value {}, requires {})\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold
            ));
        }
        out.push_str(if self.passed() { "RESULT: PASS\n" } else { "RESULT: FAIL\n" });
        out
    }

    /// Write `<exp>.ndjson` and `<exp>.summary.txt` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let nd = dir.join(format!("{}.ndjson", self.experiment));
        let su = dir.join(format!("{}.summary.txt", self.experiment));
        let mut f = std::fs::File::create(&nd)?;
        f.write_all(self.to_ndjson()?.as_bytes())?;
        let mut f = std::fs::File::create(&su)?;
        f.write_all(self.summary_text().as_bytes())?;
        Ok((nd, su))
    }
}

/// Extract gnuplot-compatible two-column data files from an NDJSON report.
pub fn plot_data(ndjson: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for line in ndjson.lines() {
        let val: serde_json::Value = serde_json::from_str(line)?;
        if val.get("record").and_then(|r| r.as_str()) == Some("series") {
            let name = val["name"].as_str().unwrap_or("series");
            let safe: String =
                name.chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect();
            let path = out_dir.join(format!("{safe}.dat"));
            let mut body = String::new();
            if let Some(points) = val["points"].as_array() {
                for p in points {
                    if let (Some(x), Some(y)) = (p[0].as_f64(), p[1].as_f64()) {
                        body.push_str(&format!("{x} {y}\n"));
                    }
                }
            }
            std::fs::write(&path, body)?;
            written.push(path);
        }
    }
    Ok(written)
}

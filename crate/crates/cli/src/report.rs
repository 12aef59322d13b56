//! Report records and their CSV / JSON writers.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use besovlab_core::limits::{ChainVerdict, EpsilonSweepResult, Extrapolation};
use serde::Serialize;

/// A named scalar entering a chain, with the raw quantity it was scaled from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermRecord {
    pub name: String,
    pub value: f64,
    pub uncertainty: f64,
    /// `value = factor * raw`
    pub factor: f64,
    pub raw: f64,
    pub operation: String,
    pub params: BTreeMap<String, String>,
}

/// A pass/fail comparison that is not one of the limit chains.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub error: f64,
    pub reference: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
    pub operation: String,
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured - reference| <= tolerance`
    Close,
    /// `measured <= reference + tolerance`
    AtMost,
    /// `measured >= reference - tolerance`
    AtLeast,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, error: f64, relation: Relation, reference: f64, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::Close => (measured - reference).abs() <= tolerance,
            Relation::AtMost => measured <= reference + tolerance,
            Relation::AtLeast => measured >= reference - tolerance,
        };
        Check {
            name: name.into(),
            measured,
            error,
            reference,
            relation,
            tolerance,
            pass,
            operation: String::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn from(mut self, operation: &str) -> Self {
        self.operation = operation.into();
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub functional: String,
    pub file: String,
    pub params: BTreeMap<String, String>,
    pub rows: usize,
    pub valid_rows: usize,
    pub tail_window: usize,
    pub tail_min: f64,
    pub tail_max: f64,
    pub extrapolated: Option<Extrapolation>,
    pub fit_error: Option<String>,
    pub row_errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    pub label: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub experiment: String,
    pub field: String,
    pub seed: u64,
    pub pass: bool,
    pub verdicts: Vec<ChainVerdict>,
    pub checks: Vec<Check>,
    pub terms: Vec<TermRecord>,
    pub sweeps: Vec<SweepSummary>,
    pub tables: BTreeMap<String, serde_json::Value>,
    #[serde(skip)]
    pub sweep_data: Vec<(String, EpsilonSweepResult)>,
    #[serde(skip)]
    pub plots: BTreeMap<String, Vec<PlotPoint>>,
    /// Further `(file name, contents)` outputs.
    #[serde(skip)]
    pub extra_files: Vec<(String, String)>,
}

impl Report {
    pub fn new(experiment: &str, field: &str, seed: u64) -> Self {
        Report { experiment: experiment.into(), field: field.into(), seed, ..Default::default() }
    }

    pub fn finish(&mut self) {
        self.pass = self.verdicts.iter().all(|v| v.pass) && self.checks.iter().all(|c| c.pass);
    }

    /// Keep a sweep for the report and its CSV; returns its file name.
    pub fn add_sweep(&mut self, name: &str, s: EpsilonSweepResult) -> String {
        let file = format!("sweep_{}.csv", sanitize(name));
        self.sweeps.push(SweepSummary {
            functional: s.functional.clone(),
            file: file.clone(),
            params: s.params.clone(),
            rows: s.rows.len(),
            valid_rows: s.valid_rows().count(),
            tail_window: s.tail_window,
            tail_min: s.tail_min,
            tail_max: s.tail_max,
            extrapolated: s.extrapolated,
            fit_error: s.fit_error.clone(),
            row_errors: s.rows.iter().filter_map(|r| r.flag.clone()).collect(),
        });
        self.sweep_data.push((file.clone(), s));
        file
    }

    pub fn plot(&mut self, figure: &str, x: f64, y: f64, label: &str) {
        self.plots.entry(figure.into()).or_default().push(PlotPoint { x, y, label: label.into() });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    /// Write `report.json`, one CSV per sweep and one plot-data CSV per figure.
    pub fn write(&self, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        for (file, s) in &self.sweep_data {
            let path = dir.join(file);
            fs::write(&path, sweep_csv(s)?).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        for (figure, pts) in &self.plots {
            let path = dir.join(format!("plot_{}.csv", sanitize(figure)));
            fs::write(&path, plot_csv(pts)?).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        for (file, text) in &self.extra_files {
            let path = dir.join(file);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        let path = dir.join("report.json");
        fs::File::create(&path)
            .and_then(|mut f| f.write_all(self.to_json().as_bytes()))
            .with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(written)
    }
}

/// Shortest round-trip scientific notation, so outputs are byte-stable.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> anyhow::Result<String> {
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?)
}

pub fn sweep_csv(s: &EpsilonSweepResult) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epsilon", "value", "error", "flag"])?;
    for r in &s.rows {
        let flag = match (&r.flag, r.low_confidence) {
            (Some(f), _) => f.clone(),
            (None, true) => "low_confidence".into(),
            (None, false) => "ok".into(),
        };
        w.write_record([num(r.epsilon), num(r.value), num(r.error), flag])?;
    }
    finish_csv(w)
}

pub fn plot_csv(pts: &[PlotPoint]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "label"])?;
    for p in pts {
        w.write_record([num(p.x), num(p.y), p.label.clone()])?;
    }
    finish_csv(w)
}

/// Header plus rows, everything already formatted.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    finish_csv(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use besovlab_core::limits::{Model, SweepRow};

    #[test]
    fn checks() {
        assert!(Check::new("a", 1.0, 0.0, Relation::Close, 1.05, 0.1).pass);
        assert!(!Check::new("a", 1.2, 0.0, Relation::AtMost, 1.0, 0.1).pass);
        assert!(Check::new("a", 0.95, 0.0, Relation::AtLeast, 1.0, 0.1).pass);
    }

    #[test]
    fn sweep_csv_layout() {
        let s = EpsilonSweepResult {
            functional: "f".into(),
            params: BTreeMap::new(),
            rows: vec![
                SweepRow { epsilon: 0.5, ln_epsilon: 0.5f64.ln(), value: 1.25, error: 1e-9, low_confidence: false, flag: None },
                SweepRow { epsilon: 0.25, ln_epsilon: 0.25f64.ln(), value: f64::NAN, error: f64::NAN, low_confidence: true, flag: Some("input error: x, y".into()) },
            ],
            tail_window: 1,
            tail_min: 1.25,
            tail_max: 1.25,
            extrapolated: Some(Extrapolation { model: Model::ConstantTail, limit: 1.25, uncertainty: 0.0 }),
            fit_error: None,
        };
        let csv = sweep_csv(&s).unwrap();
        assert_eq!(csv, "epsilon,value,error,flag\n5e-1,1.25e0,1e-9,ok\n2.5e-1,nan,nan,\"input error: x, y\"\n");
    }
}

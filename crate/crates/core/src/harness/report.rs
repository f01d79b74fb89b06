use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::figure::{render_figure, FigureGroup};
use super::{ExperimentConfig, Failure, ModelKind, RunReport};
use crate::error::{Error, Result};
use crate::metrics::MetricsRow;

pub const RESULTS_FILE: &str = "results.json";
pub const CURVES_FILE: &str = "curves.csv";

/// Dense-grid predictions: `x`, the true function, then one column per model.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub x: Vec<f64>,
    pub y_true: Vec<f64>,
    pub models: Vec<(ModelKind, Vec<f64>)>,
}

impl Curves {
    pub fn get(&self, kind: ModelKind) -> Option<&[f64]> {
        self.models.iter().find(|(k, _)| *k == kind).map(|(_, v)| v.as_slice())
    }
}

/// The persisted part of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedResults {
    pub config: ExperimentConfig,
    pub rows: Vec<MetricsRow>,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub curves: String,
    pub failures: Vec<Failure>,
}

impl SavedResults {
    pub fn from_report(report: &RunReport) -> Self {
        let params = report.outcomes.iter().map(|o| (o.kind.id().to_string(), o.params.to_json())).collect();
        Self {
            config: report.config.clone(),
            rows: report.rows.clone(),
            params,
            curves: CURVES_FILE.into(),
            failures: report.failures.clone(),
        }
    }
}

/// Two significant digits with a signed two-digit exponent, e.g. `4.3E-03`.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.1E}");
    let (mantissa, exp) = s.split_once('E').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

const HEADERS: [&str; 10] =
    ["Model", "L1 train", "L1 test", "|ΔL1|", "L2 train", "L2 test", "|ΔL2|", "L∞ train", "L∞ test", "|ΔL∞|"];

/// Aligned text table, one line per row, numbers via [`format_sci`].
pub fn render_table(rows: &[MetricsRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to render".into()));
    }
    let name_w = rows.iter().map(|r| r.model_name.chars().count()).chain([HEADERS[0].len()]).max().unwrap_or(0);
    let num_w = 9;
    let mut out = format!("{:<name_w$}", HEADERS[0]);
    for h in &HEADERS[1..] {
        out.push_str(&format!("  {h:>num_w$}"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{:<name_w$}", r.model_name));
        for v in r.values() {
            out.push_str(&format!("  {:>num_w$}", format_sci(v)));
        }
        out.push('\n');
    }
    Ok(out)
}

/// CSV with the row fields at full precision.
pub fn render_table_csv(rows: &[MetricsRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

pub fn write_curves(curves: &Curves, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["x".to_string(), "y_true".to_string()];
    header.extend(curves.models.iter().map(|(k, _)| k.id().to_string()));
    w.write_record(&header)?;
    for i in 0..curves.x.len() {
        let mut rec = vec![curves.x[i].to_string(), curves.y_true[i].to_string()];
        rec.extend(curves.models.iter().map(|(_, v)| v[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curves(path: &Path) -> Result<Curves> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 2 || &header[0] != "x" || &header[1] != "y_true" {
        return Err(Error::Malformed(format!("{}: expected x,y_true header", path.display())));
    }
    let kinds = header.iter().skip(2).map(str::parse).collect::<Result<Vec<ModelKind>>>()?;
    let mut curves = Curves { x: Vec::new(), y_true: Vec::new(), models: kinds.into_iter().map(|k| (k, Vec::new())).collect() };
    for rec in r.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Malformed(format!("{}: bad number {s}", path.display()))))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != header.len() {
            return Err(Error::Malformed(format!("{}: ragged row", path.display())));
        }
        curves.x.push(vals[0]);
        curves.y_true.push(vals[1]);
        for (col, v) in curves.models.iter_mut().zip(&vals[2..]) {
            col.1.push(*v);
        }
    }
    Ok(curves)
}

pub fn load_results(dir: &Path) -> Result<SavedResults> {
    let text = fs::read_to_string(dir.join(RESULTS_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

pub(crate) fn write_table_files(rows: &[MetricsRow], dir: &Path) -> Result<()> {
    fs::write(dir.join("table.txt"), render_table(rows)?)?;
    fs::write(dir.join("table.csv"), render_table_csv(rows)?)?;
    Ok(())
}

pub(crate) fn write_figure_files(curves: &Curves, boundary: f64, dir: &Path) -> Result<()> {
    fs::write(dir.join("figure_trees.svg"), render_figure(curves, boundary, FigureGroup::Trees))?;
    fs::write(dir.join("figure_linear.svg"), render_figure(curves, boundary, FigureGroup::Linear))?;
    Ok(())
}

/// Writes every artifact of `report` into `dir`. Wall-clock timings go to a
/// separate `timings.json` so `results.json` stays reproducible.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let saved = SavedResults::from_report(report);
    let mut json = serde_json::to_string_pretty(&saved)?;
    json.push('\n');
    fs::write(dir.join(RESULTS_FILE), json)?;
    fs::write(dir.join("timings.json"), serde_json::to_string_pretty(&report.timings)?)?;
    write_curves(&report.curves, &dir.join(CURVES_FILE))?;
    if !report.rows.is_empty() {
        write_table_files(&report.rows, dir)?;
    }
    write_figure_files(&report.curves, report.config.boundary, dir)
}

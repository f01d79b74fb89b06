//! Browser front end for the extrapolation benchmark.
//!
//! Three operations, each a plain Rust function with a JSON-returning
//! `wasm_bindgen` wrapper:
//!
//! - [`fit_model_curve`]: fit one model on `x < boundary` and return its
//!   prediction curve next to the true function, plus the gap row.
//! - [`gap_table`]: the aligned train/test table for a list of models.
//! - [`hyperband_table`]: the bracket schedule for a given `R` and `eta`.

use extrap_core::dataset::{generate_grid, SplitDataset, SplitSpec, TargetFunction};
use extrap_core::harness::{fit_model, render_table, ModelKind, ModelParams};
use extrap_core::metrics::{gap_row, MetricsRow};
use extrap_core::tuning::hyperband_brackets;
use extrap_core::{Error, Result};
use ndarray::Array2;
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const CURVE_POINTS: usize = 301;

/// Study knobs exposed on the page.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSettings {
    pub boundary: f64,
    pub n_points: usize,
    pub seed: u64,
    /// Epoch cap for the network; the full study budget is too slow for a page.
    pub mlp_epochs: usize,
    /// Hidden widths for the network; empty keeps the study default.
    pub mlp_widths: Vec<usize>,
}

impl Default for DemoSettings {
    fn default() -> Self {
        Self { boundary: 0.7, n_points: 1001, seed: 0, mlp_epochs: 150, mlp_widths: vec![64, 64] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveResult {
    pub model: String,
    pub boundary: f64,
    pub x: Vec<f64>,
    pub y_true: Vec<f64>,
    pub y_pred: Vec<f64>,
    pub row: MetricsRow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketRow {
    pub s: u32,
    pub n: usize,
    pub r: f64,
    pub rungs: Vec<(usize, f64)>,
    pub budget: f64,
}

fn study(s: &DemoSettings) -> Result<SplitDataset> {
    SplitSpec { boundary: s.boundary, n_points: s.n_points, seed: s.seed, ..SplitSpec::default() }
        .build(&TargetFunction::exp_growth())
}

fn params_for(kind: ModelKind, s: &DemoSettings) -> ModelParams {
    let mut params = ModelParams::defaults(kind, s.seed);
    if let ModelParams::Dnn(cfg) = &mut params {
        cfg.max_epochs = s.mlp_epochs.max(1);
        cfg.patience = cfg.patience.min(cfg.max_epochs);
        if !s.mlp_widths.is_empty() {
            cfg.hidden_widths = s.mlp_widths.clone();
        }
    }
    params
}

fn fit_and_score(kind: ModelKind, data: &SplitDataset, s: &DemoSettings, grid: &Array2<f64>) -> Result<(MetricsRow, Vec<f64>)> {
    let model = fit_model(&params_for(kind, s), &data.train)?;
    let row = gap_row(
        kind.display_name(),
        data.train.ys.as_slice().expect("contiguous"),
        &model.predict(data.train.xs.view())?,
        data.test.ys.as_slice().expect("contiguous"),
        &model.predict(data.test.xs.view())?,
    )?;
    Ok((row, model.predict(grid.view())?))
}

/// Fits `model` with its shipped defaults on the training side of the
/// split and evaluates it on a dense grid over `[0.4, 1.0]`.
pub fn fit_model_curve(model: &str, s: &DemoSettings) -> Result<CurveResult> {
    let kind: ModelKind = model.parse()?;
    let data = study(s)?;
    let x = generate_grid(CURVE_POINTS, 0.4, 1.0)?;
    let grid = Array2::from_shape_vec((x.len(), 1), x.clone()).expect("column");
    let f = TargetFunction::exp_growth();
    let (row, y_pred) = fit_and_score(kind, &data, s, &grid)?;
    Ok(CurveResult { model: kind.id().into(), boundary: s.boundary, y_true: x.iter().map(|&v| f.eval(v)).collect(), x, y_pred, row })
}

/// Aligned gap table for a comma-separated model list.
pub fn gap_table(models: &str, s: &DemoSettings) -> Result<String> {
    let data = study(s)?;
    let grid = Array2::zeros((0, 1));
    let rows = ModelKind::parse_list(models)?
        .into_iter()
        .map(|k| fit_and_score(k, &data, s, &grid).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    render_table(&rows)
}

pub fn hyperband_table(max_resource: u64, eta: u64) -> Result<Vec<BracketRow>> {
    Ok(hyperband_brackets(max_resource, eta)?
        .into_iter()
        .map(|b| BracketRow { s: b.s, n: b.n, r: b.r, rungs: b.rungs(), budget: b.budget() })
        .collect())
}

fn parse_widths(widths: &str) -> Result<Vec<usize>> {
    widths
        .split(',')
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(|w| w.parse().map_err(|_| Error::InvalidArgument(format!("bad layer width {w:?}"))))
        .collect()
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

fn settings(boundary: f64, n_points: usize, seed: u32, mlp_epochs: usize, mlp_widths: &str) -> Result<DemoSettings> {
    Ok(DemoSettings { boundary, n_points, seed: seed.into(), mlp_epochs, mlp_widths: parse_widths(mlp_widths)? })
}

#[wasm_bindgen(js_name = fitModelCurve)]
pub fn fit_model_curve_json(
    model: &str,
    boundary: f64,
    n_points: usize,
    seed: u32,
    mlp_epochs: usize,
    mlp_widths: &str,
) -> std::result::Result<String, JsError> {
    let s = settings(boundary, n_points, seed, mlp_epochs, mlp_widths).map_err(js)?;
    let out = fit_model_curve(model, &s).map_err(js)?;
    Ok(serde_json::to_string(&out).expect("serializable"))
}

#[wasm_bindgen(js_name = gapTable)]
pub fn gap_table_text(
    models: &str,
    boundary: f64,
    n_points: usize,
    seed: u32,
    mlp_epochs: usize,
    mlp_widths: &str,
) -> std::result::Result<String, JsError> {
    let s = settings(boundary, n_points, seed, mlp_epochs, mlp_widths).map_err(js)?;
    gap_table(models, &s).map_err(js)
}

#[wasm_bindgen(js_name = hyperbandTable)]
pub fn hyperband_table_json(max_resource: u32, eta: u32) -> std::result::Result<String, JsError> {
    let rows = hyperband_table(max_resource.into(), eta.into()).map_err(js)?;
    Ok(serde_json::to_string(&rows).expect("serializable"))
}

#[wasm_bindgen(js_name = modelIds)]
pub fn model_ids() -> String {
    ModelKind::ALL.iter().map(|k| k.id()).collect::<Vec<_>>().join(",")
}

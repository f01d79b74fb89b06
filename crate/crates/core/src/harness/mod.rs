//! End-to-end study: build the split, fit every model on the training
//! partition, score both partitions and collect the plotting curves.

mod figure;
mod models;
mod report;
mod search;

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{generate_grid, SamplingMode, SplitDataset, SplitSpec, TargetFunction};
use crate::error::{Error, Result};
use crate::metrics::{gap_row, MetricsRow};
use crate::neural::MlpConfig;
use crate::rng;
use crate::tuning::TuneResult;

pub use figure::{render_figure, FigureGroup};
pub use models::{fit_model, FittedModel, ModelGroup, ModelKind, ModelParams};
pub use report::{
    format_sci, load_results, read_curves, render_table, render_table_csv, write_curves, write_outputs, Curves,
    SavedResults,
};
pub use search::{tune, TuningBudget};

/// Plot window shared by both figures.
pub const PLOT_WINDOW: (f64, f64) = (0.4, 1.0);
pub const PLOT_POINTS: usize = 601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Every hyperparameter pinned to its shipped default.
    Defaults,
    /// Hyperparameters searched on the training partition.
    Tuned,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "defaults" => Ok(Mode::Defaults),
            "tuned" => Ok(Mode::Tuned),
            other => Err(Error::InvalidArgument(format!("unknown mode {other}, expected tuned or defaults"))),
        }
    }
}

/// Declarative description of one run. Mirrors the flat config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub function: String,
    pub n_points: usize,
    pub lo: f64,
    pub hi: f64,
    pub boundary: f64,
    pub sampling: SamplingMode,
    pub models: Vec<ModelKind>,
    pub mode: Mode,
    pub seed: u64,
    pub mlp_max_epochs: usize,
    pub mlp_patience: usize,
    pub n_initial: usize,
    pub eta: usize,
    pub cv_folds: usize,
    pub min_train_fraction: f64,
    pub max_boosting_rounds: usize,
    pub hyperband_max_epochs: u64,
    pub hyperband_eta: u64,
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mlp = MlpConfig::default();
        let b = TuningBudget::default();
        Self {
            function: "expgrowth".into(),
            n_points: 1001,
            lo: 0.0,
            hi: 1.0,
            boundary: 0.7,
            sampling: SamplingMode::Grid,
            models: ModelKind::ALL.to_vec(),
            mode: Mode::Defaults,
            seed: 0,
            mlp_max_epochs: mlp.max_epochs,
            mlp_patience: mlp.patience,
            n_initial: b.n_initial,
            eta: b.eta,
            cv_folds: b.cv_folds,
            min_train_fraction: b.min_train_fraction,
            max_boosting_rounds: b.max_boosting_rounds,
            hyperband_max_epochs: b.hyperband_max_epochs,
            hyperband_eta: b.hyperband_eta,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Malformed(format!("config: {e}")))?;
        if let Some(toml::Value::Array(models)) = table.get("models") {
            for m in models.iter().filter_map(toml::Value::as_str) {
                m.parse::<ModelKind>()?;
            }
        }
        table.try_into().map_err(|e| Error::Malformed(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            lo: self.lo,
            hi: self.hi,
            boundary: self.boundary,
            n_points: self.n_points,
            mode: self.sampling,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::InvalidArgument("model roster is empty".into()));
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].contains(m) {
                return Err(Error::InvalidArgument(format!("model {m} listed twice")));
            }
        }
        if self.mlp_max_epochs == 0 || self.mlp_patience == 0 {
            return Err(Error::InvalidArgument("mlp_max_epochs and mlp_patience must be positive".into()));
        }
        TargetFunction::by_name(&self.function)?;
        self.budget().validate()?;
        self.split_spec().validate()
    }

    pub fn budget(&self) -> TuningBudget {
        TuningBudget {
            n_initial: self.n_initial,
            eta: self.eta,
            cv_folds: self.cv_folds,
            min_train_fraction: self.min_train_fraction,
            max_boosting_rounds: self.max_boosting_rounds,
            hyperband_max_epochs: self.hyperband_max_epochs,
            hyperband_eta: self.hyperband_eta,
        }
    }

    /// Seed handed to `kind`'s stochastic components.
    pub fn model_seed(&self, kind: ModelKind) -> u64 {
        rng::mix(self.seed, kind.index() as u64 + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub model: ModelKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub model: ModelKind,
    pub phase: String,
    pub seconds: f64,
}

/// Predictions of one successfully fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub train_pred: Vec<f64>,
    pub test_pred: Vec<f64>,
    pub curve: Vec<f64>,
    pub tuning: Option<TuneResult>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub data: SplitDataset,
    /// One row per successful model, in roster order.
    pub rows: Vec<MetricsRow>,
    pub outcomes: Vec<ModelOutcome>,
    pub failures: Vec<Failure>,
    pub timings: Vec<PhaseTiming>,
    pub curves: Curves,
}

/// Builds the dataset described by `cfg` and runs the study on it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let f = TargetFunction::by_name(&cfg.function)?;
    let data = cfg.split_spec().build(&f)?;
    run_on_split(cfg, data)
}

/// Runs the roster on a prepared split. Tuning and fitting only ever see
/// `data.train`; test targets are read once every model is fitted.
pub fn run_on_split(cfg: &ExperimentConfig, data: SplitDataset) -> Result<RunReport> {
    cfg.validate()?;
    let f = TargetFunction::by_name(&cfg.function)?;
    let grid = generate_grid(PLOT_POINTS, PLOT_WINDOW.0, PLOT_WINDOW.1)?;
    let grid_xs = Array2::from_shape_vec((grid.len(), 1), grid.clone()).expect("column");
    let mut curves = Curves { x: grid.clone(), y_true: grid.iter().map(|&x| f.eval(x)).collect(), models: Vec::new() };

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    for &kind in &cfg.models {
        match fit_one(cfg, kind, &data, &grid_xs, &mut timings) {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push(Failure { model: kind, message: e.to_string() }),
        }
    }

    let mut rows = Vec::new();
    let train_ys = data.train.ys.as_slice().expect("contiguous");
    let test_ys = data.test.ys.as_slice().expect("contiguous");
    for o in &outcomes {
        rows.push(gap_row(o.kind.display_name(), train_ys, &o.train_pred, test_ys, &o.test_pred)?);
        curves.models.push((o.kind, o.curve.clone()));
    }
    Ok(RunReport { config: cfg.clone(), data, rows, outcomes, failures, timings, curves })
}

fn fit_one(
    cfg: &ExperimentConfig,
    kind: ModelKind,
    data: &SplitDataset,
    grid_xs: &Array2<f64>,
    timings: &mut Vec<PhaseTiming>,
) -> Result<ModelOutcome> {
    let seed = cfg.model_seed(kind);
    let mut base = ModelParams::defaults(kind, seed);
    if let ModelParams::Dnn(mlp) = &mut base {
        mlp.max_epochs = cfg.mlp_max_epochs;
        mlp.patience = cfg.mlp_patience;
    }
    let mut clock = Instant::now();
    let mut lap = |phase: &str, clock: &mut Instant| {
        timings.push(PhaseTiming { model: kind, phase: phase.into(), seconds: clock.elapsed().as_secs_f64() });
        *clock = Instant::now();
    };

    let (params, tuning) = match cfg.mode {
        Mode::Defaults => (base, None),
        Mode::Tuned => {
            let out = tune(kind, &base, &data.train, &cfg.budget(), rng::mix(seed, 0x7e57))?;
            lap("tune", &mut clock);
            out
        }
    };
    let model = fit_model(&params, &data.train)?;
    lap("fit", &mut clock);
    let train_pred = model.predict(data.train.xs.view())?;
    let test_pred = model.predict(data.test.xs.view())?;
    let curve = model.predict(grid_xs.view())?;
    lap("predict", &mut clock);
    Ok(ModelOutcome { kind, params, train_pred, test_pred, curve, tuning })
}

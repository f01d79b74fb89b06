//! Benchmark data: the target function, the sampling grid and the
//! train/test split at the extrapolation boundary.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// A named scalar function `R -> R`.
#[derive(Clone, Copy)]
pub struct TargetFunction {
    pub name: &'static str,
    eval: fn(f64) -> f64,
}

impl std::fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TargetFunction").field("name", &self.name).finish()
    }
}

fn exp_growth(x: f64) -> f64 {
    (x * x + x).exp()
}

impl TargetFunction {
    pub const fn new(name: &'static str, eval: fn(f64) -> f64) -> Self {
        Self { name, eval }
    }

    /// `exp(x^2 + x)`, registered as `"expgrowth"`.
    pub const fn exp_growth() -> Self {
        Self::new("expgrowth", exp_growth)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "expgrowth" => Ok(Self::exp_growth()),
            other => Err(Error::UnknownFunction(other.to_string())),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }
}

/// Feature matrix (`n x d`) and targets (`n`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub xs: Array2<f64>,
    pub ys: Array1<f64>,
}

impl SampleSet {
    pub fn new(xs: Array2<f64>, ys: Array1<f64>) -> Result<Self> {
        if xs.nrows() != ys.len() {
            return Err(invalid(format!(
                "{} feature rows but {} targets",
                xs.nrows(),
                ys.len()
            )));
        }
        if ys.is_empty() {
            return Err(invalid("sample set is empty"));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample set".into()));
        }
        Ok(Self { xs, ys })
    }

    /// Single-feature sample set from parallel slices.
    pub fn from_scalar(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let col = Array2::from_shape_vec((xs.len(), 1), xs.to_vec())
            .map_err(|e| invalid(e.to_string()))?;
        Self::new(col, Array1::from(ys.to_vec()))
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.xs.ncols()
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> SampleSet {
        SampleSet {
            xs: self.xs.select(Axis(0), idx),
            ys: self.ys.select(Axis(0), idx),
        }
    }

    /// First feature column; the study is one-dimensional.
    pub fn feature(&self, j: usize) -> ArrayView1<'_, f64> {
        self.xs.column(j)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: SampleSet,
    pub test: SampleSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    Grid,
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub lo: f64,
    pub hi: f64,
    pub boundary: f64,
    pub n_points: usize,
    pub mode: SamplingMode,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 1.0,
            boundary: 0.7,
            n_points: 1001,
            mode: SamplingMode::Grid,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.boundary && self.boundary < self.hi) {
            return Err(invalid(format!(
                "need lo < boundary < hi, got {} / {} / {}",
                self.lo, self.boundary, self.hi
            )));
        }
        if self.n_points < 2 {
            return Err(invalid("n_points must be at least 2"));
        }
        Ok(())
    }

    /// Sample inputs according to `mode`, sorted ascending.
    pub fn sample_xs(&self) -> Result<Vec<f64>> {
        self.validate()?;
        match self.mode {
            SamplingMode::Grid => generate_grid(self.n_points, self.lo, self.hi),
            SamplingMode::UniformRandom => {
                let mut rng = rng::stream(self.seed, 0);
                let mut xs: Vec<f64> = (0..self.n_points)
                    .map(|_| rng.gen_range(self.lo..=self.hi))
                    .collect();
                xs.sort_by(f64::total_cmp);
                Ok(xs)
            }
        }
    }

    /// Full pipeline: sample, evaluate, split.
    pub fn build(&self, f: &TargetFunction) -> Result<SplitDataset> {
        let xs = self.sample_xs()?;
        let ys = evaluate(f, &xs)?;
        split(&SampleSet::from_scalar(&xs, &ys)?, self.boundary)
    }
}

/// `n` evenly spaced points on `[lo, hi]`, both endpoints included.
pub fn generate_grid(n: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid(format!("grid needs at least 2 points, got {n}")));
    }
    if !(lo < hi) {
        return Err(invalid(format!("grid needs lo < hi, got [{lo}, {hi}]")));
    }
    let span = hi - lo;
    let denom = (n - 1) as f64;
    let mut xs: Vec<f64> = (0..n).map(|i| lo + i as f64 * span / denom).collect();
    xs[n - 1] = hi;
    Ok(xs)
}

pub fn evaluate(f: &TargetFunction, xs: &[f64]) -> Result<Vec<f64>> {
    xs.iter()
        .map(|&x| {
            if !x.is_finite() {
                return Err(Error::NonFinite(format!("input x = {x}")));
            }
            let y = f.eval(x);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::NumericOverflow { x })
            }
        })
        .collect()
}

/// Rows with first feature `< boundary` go to train, the rest to test.
pub fn split(full: &SampleSet, boundary: f64) -> Result<SplitDataset> {
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) =
        (0..full.len()).partition(|&i| full.xs[[i, 0]] < boundary);
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::DegenerateSplit(format!(
            "boundary {boundary} leaves {} train and {} test rows",
            train_idx.len(),
            test_idx.len()
        )));
    }
    Ok(SplitDataset {
        train: full.select(&train_idx),
        test: full.select(&test_idx),
    })
}

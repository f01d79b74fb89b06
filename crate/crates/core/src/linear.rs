//! Linear baselines: ordinary least squares, ridge, Bayesian ridge
//! (evidence maximization) and Huber regression (IRLS).
//!
//! Every solver centers features and targets first, so the intercept is
//! never penalized. Penalties are on the summed loss,
//! `sum_i loss(r_i) + alpha * |w|^2`.

use nalgebra::{DMatrix, DVector};
use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearFit {
    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.weights.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>() + self.intercept
    }

    pub fn predict(&self, xs: ArrayView2<'_, f64>) -> Vec<f64> {
        xs.rows().into_iter().map(|r| self.predict_one(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeConfig {
    pub alpha: f64,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self { alpha: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesRidgeConfig {
    pub max_iter: usize,
    /// Gamma prior over the noise precision (shape, rate).
    pub alpha_1: f64,
    pub alpha_2: f64,
    /// Gamma prior over the weight precision (shape, rate).
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub tol: f64,
    /// Starting noise precision; `None` means `1 / var(y)`.
    pub init_noise_precision: Option<f64>,
    /// Starting weight precision; `None` means 1.
    pub init_weight_precision: Option<f64>,
}

impl Default for BayesRidgeConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            alpha_1: 1e-7,
            alpha_2: 1e-5,
            lambda_1: 1e-5,
            lambda_2: 1e-7,
            tol: 1e-3,
            init_noise_precision: None,
            init_weight_precision: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesRidgeFit {
    pub fit: LinearFit,
    pub noise_precision: f64,
    pub weight_precision: f64,
    pub n_iter_run: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuberConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for HuberConfig {
    fn default() -> Self {
        Self { epsilon: 1.35, alpha: 0.1, max_iter: 100, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuberFit {
    pub fit: LinearFit,
    pub converged: bool,
    pub n_iter: usize,
}

fn check_shapes(xs: ArrayView2<'_, f64>, ys: ArrayView1<'_, f64>, min_rows: usize) -> Result<()> {
    if xs.nrows() != ys.len() {
        return Err(invalid(format!("{} rows vs {} targets", xs.nrows(), ys.len())));
    }
    if xs.nrows() < min_rows {
        return Err(invalid(format!("need at least {min_rows} samples, got {}", xs.nrows())));
    }
    Ok(())
}

/// Weighted means of the columns and of the targets.
fn weighted_centers(xs: ArrayView2<'_, f64>, ys: ArrayView1<'_, f64>, w: &[f64]) -> (Vec<f64>, f64) {
    let total: f64 = w.iter().sum();
    let d = xs.ncols();
    let mut x_mean = vec![0.0; d];
    let mut y_mean = 0.0;
    for (i, row) in xs.rows().into_iter().enumerate() {
        for (m, v) in x_mean.iter_mut().zip(row.iter()) {
            *m += w[i] * v;
        }
        y_mean += w[i] * ys[i];
    }
    x_mean.iter_mut().for_each(|m| *m /= total);
    (x_mean, y_mean / total)
}

/// Minimizes `sum_i w_i (y_i - x_i.b - c)^2 + alpha |b|^2` by Householder QR
/// of the centered, row-scaled design stacked on `sqrt(alpha) I`.
fn penalized_lstsq(
    xs: ArrayView2<'_, f64>,
    ys: ArrayView1<'_, f64>,
    sample_weights: Option<&[f64]>,
    alpha: f64,
) -> Result<LinearFit> {
    let (n, d) = xs.dim();
    let ones;
    let w = match sample_weights {
        Some(w) => w,
        None => {
            ones = vec![1.0; n];
            &ones
        }
    };
    let (x_mean, y_mean) = weighted_centers(xs, ys, w);
    if d == 0 {
        return Ok(LinearFit { weights: vec![], intercept: y_mean });
    }
    let penalty_rows = if alpha > 0.0 { d } else { 0 };
    let mut a = DMatrix::<f64>::zeros(n + penalty_rows, d);
    let mut b = DVector::<f64>::zeros(n + penalty_rows);
    for i in 0..n {
        let s = w[i].sqrt();
        for j in 0..d {
            a[(i, j)] = s * (xs[[i, j]] - x_mean[j]);
        }
        b[i] = s * (ys[i] - y_mean);
    }
    let root_alpha = alpha.sqrt();
    for j in 0..penalty_rows {
        a[(n + j, j)] = root_alpha;
    }
    if a.nrows() < d {
        return Err(Error::SingularSystem(format!("{} equations for {d} unknowns", a.nrows())));
    }

    let qr = a.qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rank_tol = scale * 1e-12 * (n.max(d) as f64);
    if scale == 0.0 || r.diagonal().iter().any(|v| v.abs() <= rank_tol) {
        return Err(Error::SingularSystem("design matrix is rank deficient".into()));
    }
    let qtb = qr.q().transpose() * b;
    let coef = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::SingularSystem("triangular solve failed".into()))?;
    let weights: Vec<f64> = coef.iter().copied().collect();
    let intercept = y_mean - weights.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    if !intercept.is_finite() || weights.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear coefficients".into()));
    }
    Ok(LinearFit { weights, intercept })
}

/// Ordinary least squares.
pub fn fit_ols(xs: ArrayView2<'_, f64>, ys: ArrayView1<'_, f64>) -> Result<LinearFit> {
    check_shapes(xs, ys, xs.ncols() + 1)?;
    penalized_lstsq(xs, ys, None, 0.0)
}

pub fn fit_ridge(xs: ArrayView2<'_, f64>, ys: ArrayView1<'_, f64>, cfg: &RidgeConfig) -> Result<LinearFit> {
    if !(cfg.alpha >= 0.0) {
        return Err(invalid(format!("ridge alpha must be >= 0, got {}", cfg.alpha)));
    }
    check_shapes(xs, ys, 1)?;
    penalized_lstsq(xs, ys, None, cfg.alpha)
}

/// Spectral view of the centered design used by the evidence iterations.
struct CenteredSvd {
    x_mean: Vec<f64>,
    y_mean: f64,
    /// Squared singular values (eigenvalues of `Xc^T Xc`).
    eig: Vec<f64>,
    /// `V` columns paired with `s_k * (U^T y)_k`.
    v: DMatrix<f64>,
    s_uty: Vec<f64>,
    xc: DMatrix<f64>,
    yc: DVector<f64>,
}

impl CenteredSvd {
    fn new(xs: ArrayView2<'_, f64>, ys: ArrayView1<'_, f64>) -> Result<Self> {
        let (n, d) = xs.dim();
        let ones = vec![1.0; n];
        let (x_mean, y_mean) = weighted_centers(xs, ys, &ones);
        let xc = DMatrix::from_fn(n, d, |i, j| xs[[i, j]] - x_mean[j]);
        let yc = DVector::from_fn(n, |i, _| ys[i] - y_mean);
        let svd = xc.clone().svd(true, true);
        let u = svd.u.as_ref().ok_or_else(|| Error::SingularSystem("svd failed".into()))?;
        let v_t = svd.v_t.as_ref().ok_or_else(|| Error::SingularSystem("svd failed".into()))?;
        let uty = u.transpose() * &yc;
        let s = &svd.singular_values;
        Ok(Self {
            x_mean,
            y_mean,
            eig: s.iter().map(|v| v * v).collect(),
            v: v_t.transpose(),
            s_uty: s.iter().zip(uty.iter()).map(|(s, u)| s * u).collect(),
            xc,
            yc,
        })
    }

    /// Posterior mean weights for fixed precisions:
    /// `(Xc^T Xc + (lambda/alpha) I)^-1 Xc^T yc`.
    fn coef(&self, noise_precision: f64, weight_precision: f64) -> DVector<f64> {
        let ratio = weight_precision / noise_precision;
        let scaled = DVector::from_iterator(
            self.eig.len(),
            self.eig.iter().zip(&self.s_uty).map(|(e, su)| su / (e + ratio)),
        );
        &self.v * scaled
    }

    fn to_fit(&self, coef: &DVector<f64>) -> LinearFit {
        let weights: Vec<f64> = coef.iter().copied().collect();
        let intercept = self.y_mean - weights.iter().zip(&self.x_mean).map(|(b, m)| b * m).sum::<f64>();
        LinearFit { weights, intercept }
    }
}

/// Posterior mean of the Gaussian linear model for fixed noise and weight
/// precisions. Equal to ridge with `alpha = weight_precision / noise_precision`.
pub fn posterior_mean(
    xs: ArrayView2<'_, f64>,
    ys: ArrayView1<'_, f64>,
    noise_precision: f64,
    weight_precision: f64,
) -> Result<LinearFit> {
    check_shapes(xs, ys, 1)?;
    if !(noise_precision > 0.0 && weight_precision > 0.0) {
        return Err(invalid("precisions must be positive"));
    }
    let svd = CenteredSvd::new(xs, ys)?;
    Ok(svd.to_fit(&svd.coef(noise_precision, weight_precision)))
}

/// Bayesian ridge regression by evidence maximization. Each iteration solves
/// for the posterior mean, then re-estimates the noise precision and the
/// weight precision from the effective number of parameters.
pub fn fit_bayesian_ridge(
    xs: ArrayView2<'_, f64>,
    ys: ArrayView1<'_, f64>,
    cfg: &BayesRidgeConfig,
) -> Result<BayesRidgeFit> {
    check_shapes(xs, ys, 2)?;
    let priors = [cfg.alpha_1, cfg.alpha_2, cfg.lambda_1, cfg.lambda_2];
    if priors.iter().any(|p| !(*p > 0.0)) {
        return Err(invalid("Gamma hyperprior parameters must be positive"));
    }
    if cfg.max_iter == 0 {
        return Err(invalid("max_iter must be positive"));
    }
    let n = ys.len() as f64;
    let svd = CenteredSvd::new(xs, ys)?;
    let var_y = svd.yc.norm_squared() / n;

    let mut noise = cfg.init_noise_precision.unwrap_or(1.0 / (var_y + f64::EPSILON));
    let mut lambda = cfg.init_weight_precision.unwrap_or(1.0);
    let mut prev: Option<DVector<f64>> = None;
    let mut n_iter_run = 0;
    for iter in 0..cfg.max_iter {
        n_iter_run = iter + 1;
        let coef = svd.coef(noise, lambda);
        let sse = (&svd.yc - &svd.xc * &coef).norm_squared();
        let gamma: f64 = svd.eig.iter().map(|e| noise * e / (lambda + noise * e)).sum();
        noise = (n - gamma + 2.0 * cfg.alpha_1) / (sse + 2.0 * cfg.alpha_2);
        lambda = (gamma + 2.0 * cfg.lambda_1) / (coef.norm_squared() + 2.0 * cfg.lambda_2);
        let converged = prev
            .as_ref()
            .is_some_and(|p| (p - &coef).iter().map(|v| v.abs()).sum::<f64>() < cfg.tol);
        prev = Some(coef);
        if converged {
            break;
        }
    }
    let fit = svd.to_fit(&svd.coef(noise, lambda));
    if !(noise.is_finite() && lambda.is_finite()) || fit.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("Bayesian ridge precisions".into()));
    }
    Ok(BayesRidgeFit { fit, noise_precision: noise, weight_precision: lambda, n_iter_run })
}

/// Huber loss with unit scale: `r^2` inside `epsilon`, `2 epsilon |r| - epsilon^2` beyond.
pub fn huber_loss(r: f64, epsilon: f64) -> f64 {
    let a = r.abs();
    if a <= epsilon {
        r * r
    } else {
        2.0 * epsilon * a - epsilon * epsilon
    }
}

/// Huber regression by iteratively reweighted least squares. The residual
/// scale is fixed at 1.
pub fn fit_huber(xs: ArrayView2<'_, f64>, ys: ArrayView1<'_, f64>, cfg: &HuberConfig) -> Result<HuberFit> {
    check_shapes(xs, ys, 2)?;
    if !(cfg.epsilon > 1.0) {
        return Err(invalid(format!("huber epsilon must exceed 1, got {}", cfg.epsilon)));
    }
    if !(cfg.alpha >= 0.0) {
        return Err(invalid("huber alpha must be >= 0"));
    }
    let mut fit = penalized_lstsq(xs, ys, None, cfg.alpha)?;
    let mut weights = vec![1.0; ys.len()];
    for iter in 0..cfg.max_iter {
        for ((w, row), y) in weights.iter_mut().zip(xs.rows()).zip(ys.iter()) {
            let r = (y - fit.predict_one(row)).abs();
            *w = if r <= cfg.epsilon { 1.0 } else { cfg.epsilon / r };
        }
        let next = penalized_lstsq(xs, ys, Some(&weights), cfg.alpha)?;
        let change = next
            .weights
            .iter()
            .zip(&fit.weights)
            .map(|(a, b)| (a - b).abs())
            .fold((next.intercept - fit.intercept).abs(), f64::max);
        fit = next;
        if change < cfg.tol {
            return Ok(HuberFit { fit, converged: true, n_iter: iter + 1 });
        }
    }
    Ok(HuberFit { fit, converged: false, n_iter: cfg.max_iter })
}

//! Fully connected ReLU regression network trained with Adam on the mean
//! squared error, with a held-out validation split, early stopping and
//! best-epoch checkpoint restore.
//!
//! Weights are stored `fan_in x fan_out`, so a batch forward pass is
//! `X W + b` with `X` laid out one sample per row. Parameters are `f64`
//! throughout; a run is bit-reproducible for a fixed seed.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::SampleSet;
use crate::error::{invalid, Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_widths: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_widths: vec![512, 448],
            learning_rate: 0.01,
            batch_size: 32,
            max_epochs: 2000,
            patience: 100,
            val_fraction: 0.2,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_widths.contains(&0) {
            return Err(invalid("hidden layer widths must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(invalid("learning_rate must be positive"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(invalid("batch_size, max_epochs and patience must be positive"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(invalid(format!("val_fraction must be in (0, 1), got {}", self.val_fraction)));
        }
        Ok(())
    }
}

/// One affine map. Also used as the gradient and Adam-moment container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weights: Array2::zeros((fan_in, fan_out)), bias: Array1::zeros(fan_out) }
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.weights.nrows(), self.weights.ncols())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
}

/// Per-layer gradients of the batch MSE, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
    pub loss: f64,
}

struct ForwardCache {
    /// `activations[0]` is the input; `activations[l + 1]` is layer `l`'s output.
    activations: Vec<Array2<f64>>,
    /// Pre-activations of the hidden layers.
    pre: Vec<Array2<f64>>,
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| if v > 0.0 { v } else { 0.0 })
}

fn ensure_finite(a: &Array2<f64>, what: &str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// He-normal weights (`N(0, 2 / fan_in)`), zero biases.
pub fn init_mlp(cfg: &MlpConfig, input_dim: usize) -> Result<MlpModel> {
    cfg.validate()?;
    if input_dim == 0 {
        return Err(invalid("input dimension must be positive"));
    }
    let mut r = rng::stream(cfg.seed, 0);
    let mut sizes = vec![input_dim];
    sizes.extend(&cfg.hidden_widths);
    sizes.push(1);
    let layers = sizes
        .windows(2)
        .map(|w| {
            let std = (2.0 / w[0] as f64).sqrt();
            let weights = Array2::from_shape_simple_fn((w[0], w[1]), || std * r.sample::<f64, _>(StandardNormal));
            DenseLayer { weights, bias: Array1::zeros(w[1]) }
        })
        .collect();
    Ok(MlpModel { layers })
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn forward_cached(&self, xs: ArrayView2<'_, f64>) -> Result<ForwardCache> {
        if xs.ncols() != self.input_dim() {
            return Err(invalid(format!("expected {} input features, got {}", self.input_dim(), xs.ncols())));
        }
        let last = self.layers.len() - 1;
        let mut activations = vec![xs.to_owned()];
        let mut pre = Vec::with_capacity(last);
        for (l, layer) in self.layers.iter().enumerate() {
            let z = activations[l].dot(&layer.weights) + &layer.bias;
            ensure_finite(&z, &format!("layer {l} pre-activation"))?;
            if l == last {
                activations.push(z);
            } else {
                activations.push(relu(&z));
                pre.push(z);
            }
        }
        Ok(ForwardCache { activations, pre })
    }

    /// Network output for each row of `xs`.
    pub fn forward(&self, xs: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let mut cache = self.forward_cached(xs)?;
        let out = cache.activations.pop().expect("at least one layer");
        Ok(out.column(0).to_owned())
    }

    /// Gradients of `mean((f(x) - y)^2)` over the batch. The ReLU derivative
    /// at exactly zero is taken as 0.
    pub fn backward(&self, xs: ArrayView2<'_, f64>, ys: ArrayView1<'_, f64>) -> Result<Gradients> {
        if xs.nrows() != ys.len() || ys.is_empty() {
            return Err(invalid("batch must be non-empty with matching targets"));
        }
        let cache = self.forward_cached(xs)?;
        let n = ys.len() as f64;
        let out = cache.activations.last().expect("output layer");
        let mut delta = Array2::zeros((ys.len(), 1));
        let mut loss = 0.0;
        for (i, (&p, &y)) in out.column(0).iter().zip(ys.iter()).enumerate() {
            let r = p - y;
            loss += r * r;
            delta[[i, 0]] = 2.0 * r / n;
        }
        loss /= n;

        let mut grads: Vec<DenseLayer> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let input = &cache.activations[l];
            let weights = input.t().dot(&delta).as_standard_layout().into_owned();
            let bias = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].weights.t());
                Zip::from(&mut back).and(&cache.pre[l - 1]).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
            grads.push(DenseLayer { weights, bias });
        }
        grads.reverse();
        Ok(Gradients { layers: grads, loss })
    }

    pub fn predict(&self, xs: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(self.forward(xs)?.to_vec())
    }

    pub fn mse(&self, data: &SampleSet) -> Result<f64> {
        let out = self.forward(data.xs.view())?;
        Ok(out.iter().zip(data.ys.iter()).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / data.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<DenseLayer>,
    pub v: Vec<DenseLayer>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        let zeros: Vec<DenseLayer> = model.layers.iter().map(DenseLayer::zeros_like).collect();
        Self { m: zeros.clone(), v: zeros, t: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

fn adam_update(param: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, state: (f64, f64, f64, f64, f64)) {
    let (b1, b2, eps, c1, c2) = state;
    for (((p, &g), m), v) in param.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step(state: &mut AdamState, model: &mut MlpModel, grads: &Gradients, learning_rate: f64) {
    state.t += 1;
    let t = state.t as i32;
    let coeffs = (state.beta1, state.beta2, state.eps, 1.0 - state.beta1.powi(t), 1.0 - state.beta2.powi(t));
    for (((layer, g), m), v) in model.layers.iter_mut().zip(&grads.layers).zip(&mut state.m).zip(&mut state.v) {
        adam_update(
            layer.weights.as_slice_mut().expect("standard layout"),
            g.weights.as_slice().expect("standard layout"),
            m.weights.as_slice_mut().expect("standard layout"),
            v.weights.as_slice_mut().expect("standard layout"),
            learning_rate,
            coeffs,
        );
        adam_update(
            layer.bias.as_slice_mut().expect("standard layout"),
            g.bias.as_slice().expect("standard layout"),
            m.bias.as_slice_mut().expect("standard layout"),
            v.bias.as_slice_mut().expect("standard layout"),
            learning_rate,
            coeffs,
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainTrace {
    pub fn best_val_loss(&self) -> f64 {
        self.val_loss[self.best_epoch]
    }
}

/// Shuffled train/validation index split: the last `ceil(val_fraction * n)`
/// positions of a seeded permutation are held out.
pub fn validation_split(n: usize, val_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_val = (val_fraction * n as f64).ceil() as usize;
    if n_val == 0 || n_val >= n {
        return Err(invalid(format!("{n} samples cannot be split with validation fraction {val_fraction}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, 1));
    let val = order.split_off(n - n_val);
    Ok((order, val))
}

/// Trains with minibatch Adam and returns the parameters from the epoch
/// with the lowest validation loss.
pub fn train_mlp(train: &SampleSet, cfg: &MlpConfig) -> Result<(MlpModel, TrainTrace)> {
    cfg.validate()?;
    let (fit_idx, val_idx) = validation_split(train.len(), cfg.val_fraction, cfg.seed)?;
    let val = train.select(&val_idx);
    let mut model = init_mlp(cfg, train.n_features())?;
    let mut adam = AdamState::new(&model);

    let mut best = model.clone();
    let mut trace = TrainTrace { train_loss: Vec::new(), val_loss: Vec::new(), best_epoch: 0, stopped_early: false };
    let mut best_val = f64::INFINITY;
    let mut since_best = 0;
    let mut order = fit_idx;
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng::stream(cfg.seed, 2 + epoch as u64));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = train.xs.select(Axis(0), batch);
            let yb = train.ys.select(Axis(0), batch);
            let grads = model.backward(xb.view(), yb.view())?;
            epoch_loss += grads.loss * batch.len() as f64;
            adam_step(&mut adam, &mut model, &grads, cfg.learning_rate);
        }
        let val_loss = model.mse(&val)?;
        trace.train_loss.push(epoch_loss / order.len() as f64);
        trace.val_loss.push(val_loss);
        if val_loss < best_val {
            best_val = val_loss;
            best.clone_from(&model);
            trace.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                trace.stopped_early = true;
                break;
            }
        }
    }
    Ok((best, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(xs: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).unwrap()
    }

    fn small(widths: &[usize], d: usize, seed: u64) -> MlpModel {
        let cfg = MlpConfig { hidden_widths: widths.to_vec(), seed, ..Default::default() };
        let mut m = init_mlp(&cfg, d).unwrap();
        // Non-zero biases so the gradient check also covers them.
        let mut r = rng::stream(seed, 99);
        for l in &mut m.layers {
            l.bias.mapv_inplace(|_| r.gen_range(-0.5..0.5));
        }
        m
    }

    /// Plain-loop dense forward pass, independent of ndarray's `dot`.
    fn oracle_forward(m: &MlpModel, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let last = m.layers.len() - 1;
        for (l, layer) in m.layers.iter().enumerate() {
            let (fi, fo) = layer.weights.dim();
            let mut z = vec![0.0; fo];
            for j in 0..fo {
                let mut s = layer.bias[j];
                for i in 0..fi {
                    s += a[i] * layer.weights[[i, j]];
                }
                z[j] = if l == last { s } else { s.max(0.0) };
            }
            a = z;
        }
        a[0]
    }

    fn batch_loss(m: &MlpModel, xs: &Array2<f64>, ys: &Array1<f64>) -> f64 {
        let out = m.forward(xs.view()).unwrap();
        out.iter().zip(ys).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / ys.len() as f64
    }

    #[test]
    fn init_is_seeded_with_zero_bias() {
        let cfg = MlpConfig { seed: 5, ..Default::default() };
        let a = init_mlp(&cfg, 1).unwrap();
        assert_eq!(a, init_mlp(&cfg, 1).unwrap());
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        let shapes: Vec<_> = a.layers.iter().map(|l| l.weights.dim()).collect();
        assert_eq!(shapes, vec![(1, 512), (512, 448), (448, 1)]);
    }

    #[test]
    fn init_variance_matches_fan_in() {
        let m = init_mlp(&MlpConfig::default(), 1).unwrap();
        let w = &m.layers[1].weights;
        let n = w.len() as f64;
        let mean = w.sum() / n;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let expected = 2.0 / 512.0;
        assert!((var / expected - 1.0).abs() < 0.2, "variance {var} vs {expected}");
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut m = small(&[4, 3], 2, 0);
        for l in &mut m.layers {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        let out = m.forward(Array2::from_shape_fn((5, 2), |(i, j)| (i + j) as f64).view()).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn relu_clips_negative_inputs() {
        let m = MlpModel {
            layers: vec![
                DenseLayer { weights: Array2::from_elem((1, 1), 1.0), bias: Array1::zeros(1) },
                DenseLayer { weights: Array2::from_elem((1, 1), 3.0), bias: Array1::from_elem(1, 0.25) },
            ],
        };
        assert_eq!(m.forward(col(&[-1.0, 2.0]).view()).unwrap().to_vec(), vec![0.25, 6.25]);
    }

    #[test]
    fn forward_matches_loop_oracle() {
        for (widths, d, seed) in [(vec![5, 4], 1, 1), (vec![7], 3, 2), (vec![6, 5, 3], 2, 3)] {
            let m = small(&widths, d, seed);
            let xs = Array2::from_shape_fn((9, d), |(i, j)| (i as f64 * 0.7 - j as f64).sin());
            let out = m.forward(xs.view()).unwrap();
            for (i, row) in xs.rows().into_iter().enumerate() {
                let o = oracle_forward(&m, row.as_slice().unwrap());
                assert!((out[i] - o).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_reports_overflow() {
        let mut m = small(&[3], 1, 0);
        m.layers[0].weights.fill(f64::MAX);
        assert!(matches!(m.forward(col(&[10.0]).view()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn zero_residual_zero_gradient() {
        let m = small(&[4, 3], 1, 7);
        let xs = col(&[0.1, 0.5, 0.9]);
        let ys = m.forward(xs.view()).unwrap();
        let g = m.backward(xs.view(), ys.view()).unwrap();
        assert!(g.layers.iter().all(|l| l.weights.iter().chain(l.bias.iter()).all(|&v| v == 0.0)));
    }

    #[test]
    fn linear_net_gradient_is_closed_form() {
        let m = MlpModel {
            layers: vec![DenseLayer { weights: Array2::from_elem((1, 1), 1.5), bias: Array1::from_elem(1, -0.5) }],
        };
        let xs = [0.0, 1.0, 2.0, 4.0];
        let ys = [1.0, 0.0, 3.0, 2.0];
        let g = m.backward(col(&xs).view(), Array1::from(ys.to_vec()).view()).unwrap();
        let resid: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| 1.5 * x - 0.5 - y).collect();
        let dw = 2.0 * resid.iter().zip(&xs).map(|(r, x)| r * x).sum::<f64>() / 4.0;
        let db = 2.0 * resid.iter().sum::<f64>() / 4.0;
        assert!((g.layers[0].weights[[0, 0]] - dw).abs() < 1e-14);
        assert!((g.layers[0].bias[0] - db).abs() < 1e-14);
    }

    #[test]
    fn gradients_match_central_differences() {
        let h = 1e-6;
        for (widths, d, seed) in [(vec![4, 3], 1, 11), (vec![5], 2, 12), (vec![6, 4], 3, 13)] {
            let m = small(&widths, d, seed);
            let xs = Array2::from_shape_fn((7, d), |(i, j)| ((i * 3 + j) as f64 * 0.61).cos());
            let ys = Array1::from_shape_fn(7, |i| (i as f64 * 0.4).sin() * 2.0);
            let g = m.backward(xs.view(), ys.view()).unwrap();
            for l in 0..m.layers.len() {
                let n_w = m.layers[l].weights.len();
                for k in 0..n_w + m.layers[l].bias.len() {
                    let bump = |delta: f64| {
                        let mut p = m.clone();
                        if k < n_w {
                            p.layers[l].weights.as_slice_mut().unwrap()[k] += delta;
                        } else {
                            p.layers[l].bias[k - n_w] += delta;
                        }
                        batch_loss(&p, &xs, &ys)
                    };
                    let fd = (bump(h) - bump(-h)) / (2.0 * h);
                    let an = if k < n_w { g.layers[l].weights.as_slice().unwrap()[k] } else { g.layers[l].bias[k - n_w] };
                    let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-2);
                    assert!(rel < 1e-5, "layer {l} param {k}: fd {fd} vs analytic {an}");
                }
            }
        }
    }

    fn scalar_model(p: f64) -> MlpModel {
        MlpModel { layers: vec![DenseLayer { weights: Array2::from_elem((1, 1), p), bias: Array1::zeros(1) }] }
    }

    fn scalar_grads(g: f64) -> Gradients {
        Gradients {
            layers: vec![DenseLayer { weights: Array2::from_elem((1, 1), g), bias: Array1::zeros(1) }],
            loss: 0.0,
        }
    }

    #[test]
    fn adam_first_step_is_signed_lr() {
        for g in [3.0, -0.02] {
            let mut m = scalar_model(1.0);
            let mut s = AdamState::new(&m);
            adam_step(&mut s, &mut m, &scalar_grads(g), 0.01);
            assert!((m.layers[0].weights[[0, 0]] - (1.0 - 0.01 * g.signum())).abs() < 1e-6);
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut m = scalar_model(2.0);
        let mut s = AdamState::new(&m);
        adam_step(&mut s, &mut m, &scalar_grads(0.0), 0.1);
        assert_eq!(m.layers[0].weights[[0, 0]], 2.0);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        // Oracle: the scalar Adam recursion written out directly.
        let (mut p, mut mo, mut ve) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=200 {
            let g = 2.0 * (p - 3.0);
            mo = 0.9 * mo + 0.1 * g;
            ve = 0.999 * ve + 0.001 * g * g;
            let mh = mo / (1.0 - 0.9f64.powi(t));
            let vh = ve / (1.0 - 0.999f64.powi(t));
            p -= 0.1 * mh / (vh.sqrt() + 1e-8);
        }
        let mut m = scalar_model(0.0);
        let mut s = AdamState::new(&m);
        for _ in 0..200 {
            let w = m.layers[0].weights[[0, 0]];
            adam_step(&mut s, &mut m, &scalar_grads(2.0 * (w - 3.0)), 0.1);
        }
        let w = m.layers[0].weights[[0, 0]];
        assert!((w - p).abs() < 1e-12);
        assert!((w - 3.0).abs() < 0.05, "ended at {w}");
    }

    #[test]
    fn validation_split_shapes() {
        let (fit, val) = validation_split(10, 0.2, 0).unwrap();
        assert_eq!((fit.len(), val.len()), (8, 2));
        let mut all: Vec<usize> = fit.iter().chain(&val).copied().collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(validation_split(1, 0.2, 0).is_err());
    }

    #[test]
    fn training_descends_and_is_deterministic() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        let data = SampleSet::from_scalar(&xs, &vec![0.0; 40]).unwrap();
        let cfg = MlpConfig { hidden_widths: vec![16, 8], max_epochs: 5, batch_size: 8, seed: 3, ..Default::default() };
        let init = init_mlp(&cfg, 1).unwrap();
        let (fit_idx, _) = validation_split(40, 0.2, 3).unwrap();
        let init_loss = init.mse(&data.select(&fit_idx)).unwrap();
        let (model, trace) = train_mlp(&data, &cfg).unwrap();
        assert!(model.mse(&data.select(&fit_idx)).unwrap() <= init_loss);
        let (_, again) = train_mlp(&data, &cfg).unwrap();
        assert_eq!(trace, again);
    }

    #[test]
    fn checkpoint_is_best_validation_epoch() {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 / 60.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * x + x).exp()).collect();
        let data = SampleSet::from_scalar(&xs, &ys).unwrap();
        let cfg = MlpConfig { hidden_widths: vec![16, 16], max_epochs: 60, patience: 10, seed: 1, ..Default::default() };
        let (model, trace) = train_mlp(&data, &cfg).unwrap();
        let (_, val_idx) = validation_split(60, cfg.val_fraction, cfg.seed).unwrap();
        let min = trace.val_loss.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(trace.best_val_loss(), min);
        assert_eq!(model.mse(&data.select(&val_idx)).unwrap(), min);
    }
}

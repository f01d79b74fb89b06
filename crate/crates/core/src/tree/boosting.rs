//! Gradient boosting with the squared loss.
//!
//! One core covers three variants: first-order (plain CART on residuals),
//! second-order level-wise (gradient/hessian gain with L2 leaf penalty) and
//! second-order leaf-wise (best-gain leaf expanded first, capped leaf count).

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{grow, Criterion, GrowParams, NodeData, RegressionTree};
use crate::error::{invalid, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Growth {
    LevelWise,
    LeafWise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveOrder {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmConfig {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub subsample: f64,
    pub colsample: f64,
    pub min_child_weight: f64,
    pub reg_lambda: f64,
    /// Leaf budget for leaf-wise growth.
    pub max_leaves: Option<usize>,
    pub growth: Growth,
    pub objective_order: ObjectiveOrder,
    pub seed: u64,
}

impl GbmConfig {
    /// Level-wise second-order boosting with the XGBoost-style settings.
    pub fn xgboost() -> Self {
        Self {
            n_estimators: 157,
            learning_rate: 0.20,
            max_depth: Some(3),
            min_samples_split: 2,
            min_samples_leaf: 1,
            subsample: 0.73,
            colsample: 0.88,
            min_child_weight: 0.1,
            reg_lambda: 1.0,
            max_leaves: None,
            growth: Growth::LevelWise,
            objective_order: ObjectiveOrder::Second,
            seed: 0,
        }
    }

    /// Leaf-wise second-order boosting with the LightGBM-style settings.
    pub fn lightgbm() -> Self {
        Self {
            n_estimators: 279,
            learning_rate: 0.17,
            max_depth: Some(8),
            min_samples_split: 2,
            min_samples_leaf: 1,
            subsample: 0.83,
            colsample: 0.75,
            min_child_weight: 0.01,
            reg_lambda: 0.0,
            max_leaves: Some(31),
            growth: Growth::LeafWise,
            objective_order: ObjectiveOrder::Second,
            seed: 0,
        }
    }

    /// Classic first-order gradient boosting.
    pub fn classic() -> Self {
        Self {
            n_estimators: 259,
            learning_rate: 0.10,
            max_depth: Some(3),
            min_samples_split: 8,
            min_samples_leaf: 1,
            subsample: 1.0,
            colsample: 1.0,
            min_child_weight: 0.0,
            reg_lambda: 0.0,
            max_leaves: None,
            growth: Growth::LevelWise,
            objective_order: ObjectiveOrder::First,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(invalid("n_estimators must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(invalid(format!("learning_rate must be in (0, 1], got {}", self.learning_rate)));
        }
        for (name, v) in [("subsample", self.subsample), ("colsample", self.colsample)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        if !(self.min_child_weight >= 0.0 && self.reg_lambda >= 0.0) {
            return Err(invalid("min_child_weight and reg_lambda must be >= 0"));
        }
        if self.min_samples_split < 2 || self.min_samples_leaf < 1 {
            return Err(invalid("min_samples_split >= 2 and min_samples_leaf >= 1 required"));
        }
        if self.max_leaves == Some(0) || self.max_leaves == Some(1) && self.growth == Growth::LeafWise {
            return Err(invalid("max_leaves must allow at least one split"));
        }
        Ok(())
    }

    fn criterion(&self) -> Criterion {
        match self.objective_order {
            ObjectiveOrder::First => Criterion::Variance,
            ObjectiveOrder::Second => {
                Criterion::Newton { lambda: self.reg_lambda, min_child_weight: self.min_child_weight }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub base_prediction: f64,
    pub trees: Vec<RegressionTree>,
    pub learning_rate: f64,
}

impl GbmModel {
    /// A model with no trees: the base value everywhere.
    pub fn constant(base_prediction: f64, learning_rate: f64) -> Self {
        Self { base_prediction, trees: Vec::new(), learning_rate }
    }

    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.base_prediction + self.learning_rate * self.trees.iter().map(|t| t.predict_one(x)).sum::<f64>()
    }

    pub fn predict(&self, xs: ArrayView2<'_, f64>) -> Vec<f64> {
        xs.rows().into_iter().map(|r| self.predict_one(r)).collect()
    }
}

/// Count of `fraction * n` rounded to nearest, at least 1.
fn fraction_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n)
}

fn sorted_sample(rng: &mut impl rand::Rng, n: usize, k: usize) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut v = index::sample(rng, n, k).into_vec();
    v.sort_unstable();
    v
}

pub fn fit_gbm(xs: ArrayView2<'_, f64>, ys: ArrayView1<'_, f64>, cfg: &GbmConfig) -> Result<GbmModel> {
    cfg.validate()?;
    if ys.is_empty() || xs.nrows() != ys.len() {
        return Err(invalid("boosting needs a non-empty, shape-consistent training set"));
    }
    let (n, d) = xs.dim();
    let base = ys.sum() / n as f64;
    let mut model = GbmModel::constant(base, cfg.learning_rate);
    let mut current = vec![base; n];
    let mut residuals = vec![0.0; n];

    let criterion = cfg.criterion();
    let n_rows = fraction_count(cfg.subsample, n);
    let n_cols = fraction_count(cfg.colsample, d);
    for iter in 0..cfg.n_estimators {
        for ((r, y), f) in residuals.iter_mut().zip(ys.iter()).zip(&current) {
            *r = y - f;
        }
        let mut r = rng::stream(cfg.seed, iter as u64);
        let rows = sorted_sample(&mut r, n, n_rows);
        let features = sorted_sample(&mut r, d, n_cols);
        let params = GrowParams {
            max_depth: cfg.max_depth,
            min_samples_split: cfg.min_samples_split,
            min_samples_leaf: cfg.min_samples_leaf,
            max_leaves: match cfg.growth {
                Growth::LeafWise => Some(cfg.max_leaves.unwrap_or(31)),
                Growth::LevelWise => None,
            },
            criterion,
            features,
        };
        let data = NodeData { xs, targets: &residuals, weights: None };
        let mut tree = grow(&data, rows, &params);
        if tree.is_stump() {
            tree = RegressionTree::leaf(0.0, n_rows);
        }
        for (f, row) in current.iter_mut().zip(xs.rows()) {
            *f += cfg.learning_rate * tree.predict_one(row);
        }
        model.trees.push(tree);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{fit_tree, TreeConfig, TreeNode};
    use ndarray::{Array1, Array2};
    use proptest::prelude::*;

    fn col(xs: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).unwrap()
    }

    fn exact(n: usize) -> GbmConfig {
        GbmConfig {
            n_estimators: n,
            learning_rate: 1.0,
            max_depth: None,
            subsample: 1.0,
            colsample: 1.0,
            ..GbmConfig::classic()
        }
        .with_split(2)
    }

    impl GbmConfig {
        fn with_split(mut self, s: usize) -> Self {
            self.min_samples_split = s;
            self
        }
    }

    fn eight() -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (0..8).map(|i| i as f64 / 7.0).collect();
        let ys = xs.iter().map(|x| (x * x + x).exp()).collect();
        (xs, ys)
    }

    fn mse(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
    }

    #[test]
    fn one_full_tree_fits_exactly() {
        let (xs, ys) = eight();
        let m = fit_gbm(col(&xs).view(), Array1::from(ys.clone()).view(), &exact(1)).unwrap();
        let pred = m.predict(col(&xs).view());
        for (p, y) in pred.iter().zip(&ys) {
            assert!((p - y).abs() < 1e-12);
        }
        // Oracle: a plain CART tree on the centered targets.
        let base = ys.iter().sum::<f64>() / 8.0;
        let centered: Vec<f64> = ys.iter().map(|y| y - base).collect();
        let t = fit_tree(col(&xs).view(), Array1::from(centered).view(), &TreeConfig::default(), None);
        assert_eq!(m.trees[0], t);
    }

    #[test]
    fn zero_estimators_rejected_and_constant_model() {
        let (xs, ys) = eight();
        assert!(fit_gbm(col(&xs).view(), Array1::from(ys).view(), &exact(0)).is_err());
        let m = GbmModel::constant(2.5, 0.1);
        assert_eq!(m.predict(col(&[-3.0, 0.0, 9.0]).view()), vec![2.5; 3]);
    }

    #[test]
    fn second_order_with_zero_lambda_matches_first_order() {
        let (xs, ys) = eight();
        let datasets = [
            (xs.clone(), ys.clone()),
            (vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], vec![3.0, -1.0, 4.0, 1.0, -5.0, 9.0]),
            (vec![0.1, 0.1, 0.4, 0.9, 0.9, 1.3, 2.0], vec![1.0, 2.0, 0.5, 0.25, 7.0, 3.0, 3.0]),
        ];
        for (xs, ys) in datasets {
            let first = GbmConfig { n_estimators: 5, learning_rate: 0.5, max_depth: Some(2), ..exact(5) };
            let second = GbmConfig {
                objective_order: ObjectiveOrder::Second,
                reg_lambda: 0.0,
                min_child_weight: 0.0,
                ..first
            };
            let (x, y) = (col(&xs), Array1::from(ys));
            let a = fit_gbm(x.view(), y.view(), &first).unwrap();
            let b = fit_gbm(x.view(), y.view(), &second).unwrap();
            assert_eq!(a.trees.len(), b.trees.len());
            for (ta, tb) in a.trees.iter().zip(&b.trees) {
                assert_eq!(ta.nodes.len(), tb.nodes.len());
                for (na, nb) in ta.nodes.iter().zip(&tb.nodes) {
                    match (na, nb) {
                        (TreeNode::Leaf { value: va, .. }, TreeNode::Leaf { value: vb, .. }) => {
                            assert!((va - vb).abs() < 1e-12)
                        }
                        (TreeNode::Split { threshold: ta, .. }, TreeNode::Split { threshold: tb, .. }) => {
                            assert_eq!(ta, tb)
                        }
                        _ => panic!("tree shapes differ"),
                    }
                }
            }
        }
    }

    #[test]
    fn min_child_weight_blocks_small_children() {
        let (xs, ys) = eight();
        let cfg = GbmConfig {
            objective_order: ObjectiveOrder::Second,
            min_child_weight: 5.0,
            ..exact(1)
        };
        let m = fit_gbm(col(&xs).view(), Array1::from(ys).view(), &cfg).unwrap();
        // 8 samples with hessian 1 each cannot split into two children of weight >= 5.
        assert_eq!(m.trees[0], RegressionTree::leaf(0.0, 8));
    }

    #[test]
    fn leaf_wise_caps_leaves() {
        let xs: Vec<f64> = (0..300).map(|i| i as f64 / 300.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * x + x).exp()).collect();
        let cfg = GbmConfig { n_estimators: 3, max_leaves: Some(7), max_depth: Some(8), ..GbmConfig::lightgbm() };
        let m = fit_gbm(col(&xs).view(), Array1::from(ys).view(), &cfg).unwrap();
        assert!(m.trees.iter().all(|t| t.n_leaves() <= 7 && t.depth() <= 8));
        assert_eq!(m.trees[0].n_leaves(), 7);
    }

    #[test]
    fn presets_are_valid() {
        for cfg in [GbmConfig::xgboost(), GbmConfig::lightgbm(), GbmConfig::classic()] {
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn seeded_determinism() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 / 143.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * x + x).exp()).collect();
        let (x, y) = (col(&xs), Array1::from(ys));
        for cfg in [GbmConfig::xgboost(), GbmConfig::lightgbm()] {
            let cfg = GbmConfig { n_estimators: 20, seed: 11, ..cfg };
            assert_eq!(fit_gbm(x.view(), y.view(), &cfg).unwrap(), fit_gbm(x.view(), y.view(), &cfg).unwrap());
        }
    }

    #[test]
    fn plateau_beyond_training_range() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 / 143.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * x + x).exp()).collect();
        let (x, y) = (col(&xs), Array1::from(ys));
        for cfg in [GbmConfig::xgboost(), GbmConfig::lightgbm(), GbmConfig::classic()] {
            let m = fit_gbm(x.view(), y.view(), &GbmConfig { n_estimators: 30, ..cfg }).unwrap();
            let p = m.predict(col(&[0.7, 0.9, 1.0, 100.0]).view());
            assert!(p.iter().all(|v| *v == p[0]));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn training_mse_is_non_increasing(
            ys in prop::collection::vec(-5.0f64..5.0, 4..30),
            depth in 1usize..4,
            lr in 0.05f64..1.0,
            second in any::<bool>(),
        ) {
            let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
            let (x, y) = (col(&xs), Array1::from(ys.clone()));
            let mut cfg = GbmConfig { max_depth: Some(depth), learning_rate: lr, ..exact(1) };
            if second {
                cfg.objective_order = ObjectiveOrder::Second;
                cfg.reg_lambda = 1.0;
                cfg.min_child_weight = 0.0;
            }
            let mut last = f64::INFINITY;
            for n in 1..8 {
                let m = fit_gbm(x.view(), y.view(), &GbmConfig { n_estimators: n, ..cfg }).unwrap();
                let e = mse(&m.predict(x.view()), &ys);
                prop_assert!(e <= last + 1e-12);
                last = e;
            }
        }
    }
}

use ndarray::{ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{grow, Criterion, GrowParams, NodeData, RegressionTree, TreeConfig};
use crate::error::{invalid, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub tree: TreeConfig,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_estimators: 195,
            tree: TreeConfig { max_depth: Some(9), min_samples_split: 2, min_samples_leaf: 1 },
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<RegressionTree>,
}

impl RandomForest {
    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.trees.iter().map(|t| t.predict_one(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, xs: ArrayView2<'_, f64>) -> Vec<f64> {
        xs.rows().into_iter().map(|r| self.predict_one(r)).collect()
    }
}

/// Bagged CART ensemble. Tree `i` draws its bootstrap sample from stream
/// `i` of the forest seed, so the result does not depend on fitting order.
pub fn fit_random_forest(xs: ArrayView2<'_, f64>, ys: ArrayView1<'_, f64>, cfg: &ForestConfig) -> Result<RandomForest> {
    if cfg.n_estimators == 0 {
        return Err(invalid("forest needs at least one tree"));
    }
    if ys.is_empty() || xs.nrows() != ys.len() {
        return Err(invalid("forest needs a non-empty, shape-consistent training set"));
    }
    let n = ys.len();
    let targets = ys.to_vec();
    let data = NodeData { xs, targets: &targets, weights: None };
    let params = GrowParams {
        max_depth: cfg.tree.max_depth,
        min_samples_split: cfg.tree.min_samples_split,
        min_samples_leaf: cfg.tree.min_samples_leaf,
        max_leaves: None,
        criterion: Criterion::Variance,
        features: (0..xs.ncols()).collect(),
    };
    let trees = (0..cfg.n_estimators)
        .map(|i| {
            let rows = if cfg.bootstrap {
                let mut r = rng::stream(cfg.seed, i as u64);
                (0..n).map(|_| r.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(&data, rows, &params)
        })
        .collect();
    Ok(RandomForest { trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::fit_tree;
    use ndarray::{Array1, Array2};

    fn study() -> (Array2<f64>, Array1<f64>) {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 / 285.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * x + x).exp()).collect();
        (Array2::from_shape_vec((200, 1), xs).unwrap(), Array1::from(ys))
    }

    #[test]
    fn constant_target() {
        let (x, _) = study();
        let y = Array1::from_elem(200, 2.5);
        let f = fit_random_forest(x.view(), y.view(), &ForestConfig { n_estimators: 10, ..Default::default() }).unwrap();
        assert!(f.predict(x.view()).iter().all(|&p| p == 2.5));
    }

    #[test]
    fn single_unbootstrapped_tree_is_cart() {
        let (x, y) = study();
        let cfg = ForestConfig { n_estimators: 1, bootstrap: false, ..Default::default() };
        let f = fit_random_forest(x.view(), y.view(), &cfg).unwrap();
        let t = fit_tree(x.view(), y.view(), &cfg.tree, None);
        assert_eq!(f.trees[0], t);
    }

    #[test]
    fn seeded_determinism() {
        let (x, y) = study();
        let cfg = ForestConfig { n_estimators: 12, seed: 42, ..Default::default() };
        assert_eq!(fit_random_forest(x.view(), y.view(), &cfg).unwrap(), fit_random_forest(x.view(), y.view(), &cfg).unwrap());
    }

    #[test]
    fn average_lies_between_trees() {
        let (x, y) = study();
        let f = fit_random_forest(x.view(), y.view(), &ForestConfig { n_estimators: 15, seed: 3, ..Default::default() }).unwrap();
        let grid = Array2::from_shape_fn((50, 1), |(i, _)| i as f64 / 40.0);
        for row in grid.rows() {
            let per: Vec<f64> = f.trees.iter().map(|t| t.predict_one(row)).collect();
            let lo = per.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = per.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let p = f.predict_one(row);
            assert!(lo - 1e-12 <= p && p <= hi + 1e-12);
        }
    }

    #[test]
    fn rejects_zero_trees() {
        let (x, y) = study();
        assert!(fit_random_forest(x.view(), y.view(), &ForestConfig { n_estimators: 0, ..Default::default() }).is_err());
    }
}

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataset::SampleSet;
use crate::error::{Error, Result};
use crate::knn::{fit_knn, KnnConfig, KnnModel, SearchMode, Weighting};
use crate::linear::{
    fit_bayesian_ridge, fit_huber, fit_ols, fit_ridge, BayesRidgeConfig, HuberConfig, LinearFit, RidgeConfig,
};
use crate::neural::{train_mlp, MlpConfig, MlpModel};
use crate::tree::{fit_gbm, fit_random_forest, ForestConfig, GbmConfig, GbmModel, RandomForest, TreeConfig};
use crate::tuning::{presets, CandidateConfig, ParamSpace};

/// The ten models of the study, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dnn,
    Xgboost,
    Lightgbm,
    Gbm,
    RandomForest,
    Knn,
    Linear,
    Huber,
    Ridge,
    BayesianRidge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelGroup {
    Neural,
    TreeOrKnn,
    Linear,
}

impl ModelKind {
    pub const ALL: [ModelKind; 10] = [
        ModelKind::Dnn,
        ModelKind::Xgboost,
        ModelKind::Lightgbm,
        ModelKind::Gbm,
        ModelKind::RandomForest,
        ModelKind::Knn,
        ModelKind::Linear,
        ModelKind::Huber,
        ModelKind::Ridge,
        ModelKind::BayesianRidge,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Dnn => "dnn",
            ModelKind::Xgboost => "xgboost",
            ModelKind::Lightgbm => "lightgbm",
            ModelKind::Gbm => "gbm",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Knn => "knn",
            ModelKind::Linear => "linear",
            ModelKind::Huber => "huber",
            ModelKind::Ridge => "ridge",
            ModelKind::BayesianRidge => "bayesian_ridge",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Dnn => "Deep Neural Network",
            ModelKind::Xgboost => "XGBoost",
            ModelKind::Lightgbm => "LightGBM",
            ModelKind::Gbm => "Gradient Boosting",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::Knn => "KNN Regression",
            ModelKind::Linear => "Linear Regression",
            ModelKind::Huber => "Huber Regression",
            ModelKind::Ridge => "Ridge Regression",
            ModelKind::BayesianRidge => "Bayesian Ridge Regression",
        }
    }

    pub fn group(self) -> ModelGroup {
        match self {
            ModelKind::Dnn => ModelGroup::Neural,
            ModelKind::Linear | ModelKind::Huber | ModelKind::Ridge | ModelKind::BayesianRidge => ModelGroup::Linear,
            _ => ModelGroup::TreeOrKnn,
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|k| *k == self).expect("listed")
    }

    pub fn search_space(self) -> ParamSpace {
        presets::for_model(self.id()).expect("every model has a preset")
    }

    /// Parses a comma-separated list of ids, rejecting unknown names and
    /// duplicates.
    pub fn parse_list(list: &str) -> Result<Vec<ModelKind>> {
        let mut out = Vec::new();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let kind: ModelKind = name.parse()?;
            if out.contains(&kind) {
                return Err(Error::InvalidArgument(format!("model {name} listed twice")));
            }
            out.push(kind);
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument("model list is empty".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.id() == s).ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

/// Hyperparameters for one model, ready to fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelParams {
    Dnn(MlpConfig),
    Boosted(GbmConfig),
    Forest(ForestConfig),
    Knn(KnnConfig),
    Huber(HuberConfig),
    Ridge(RidgeConfig),
    BayesianRidge(BayesRidgeConfig),
    Linear {},
}

impl ModelParams {
    /// Shipped defaults for `kind`, with every stochastic component seeded
    /// from `seed`.
    pub fn defaults(kind: ModelKind, seed: u64) -> Self {
        match kind {
            ModelKind::Dnn => ModelParams::Dnn(MlpConfig { seed, ..MlpConfig::default() }),
            ModelKind::Xgboost => ModelParams::Boosted(GbmConfig { seed, ..GbmConfig::xgboost() }),
            ModelKind::Lightgbm => ModelParams::Boosted(GbmConfig { seed, ..GbmConfig::lightgbm() }),
            ModelKind::Gbm => ModelParams::Boosted(GbmConfig { seed, ..GbmConfig::classic() }),
            ModelKind::RandomForest => ModelParams::Forest(ForestConfig { seed, ..ForestConfig::default() }),
            ModelKind::Knn => ModelParams::Knn(KnnConfig::default()),
            ModelKind::Linear => ModelParams::Linear {},
            ModelKind::Huber => ModelParams::Huber(HuberConfig::default()),
            ModelKind::Ridge => ModelParams::Ridge(RidgeConfig::default()),
            ModelKind::BayesianRidge => ModelParams::BayesianRidge(BayesRidgeConfig::default()),
        }
    }

    /// Overrides the fields named in `c` on top of `self`.
    pub fn with_candidate(&self, c: &CandidateConfig) -> Result<Self> {
        let int = |name: &str| -> Result<usize> {
            c.int(name)
                .and_then(|v| usize::try_from(v).ok())
                .ok_or_else(|| Error::InvalidArgument(format!("candidate lacks integer {name}")))
        };
        let real =
            |name: &str| c.real(name).ok_or_else(|| Error::InvalidArgument(format!("candidate lacks real {name}")));
        let cat = |name: &str| c.cat(name).ok_or_else(|| Error::InvalidArgument(format!("candidate lacks {name}")));
        Ok(match self {
            ModelParams::Dnn(cfg) => ModelParams::Dnn(MlpConfig {
                hidden_widths: vec![int("units_1")?, int("units_2")?],
                learning_rate: real("learning_rate")?,
                ..cfg.clone()
            }),
            ModelParams::Boosted(cfg) => {
                let mut next = GbmConfig {
                    n_estimators: int("n_estimators")?,
                    max_depth: Some(int("max_depth")?),
                    learning_rate: real("learning_rate")?,
                    ..*cfg
                };
                if c.values.contains_key("subsample") {
                    next.subsample = real("subsample")?;
                    next.colsample = real("colsample")?;
                    next.min_child_weight = real("min_child_weight")?;
                }
                if c.values.contains_key("min_samples_split") {
                    next.min_samples_split = int("min_samples_split")?;
                }
                ModelParams::Boosted(next)
            }
            ModelParams::Forest(cfg) => ModelParams::Forest(ForestConfig {
                n_estimators: int("n_estimators")?,
                tree: TreeConfig {
                    max_depth: Some(int("max_depth")?),
                    min_samples_split: int("min_samples_split")?,
                    min_samples_leaf: int("min_samples_leaf")?,
                },
                ..*cfg
            }),
            ModelParams::Knn(_) => ModelParams::Knn(KnnConfig {
                k: int("n_neighbors")?,
                weighting: match cat("weights")? {
                    "uniform" => Weighting::Uniform,
                    _ => Weighting::InverseDistance,
                },
                search: match cat("algorithm")? {
                    "sorted" => SearchMode::Sorted1d,
                    "brute" => SearchMode::Linear,
                    _ => SearchMode::BallTree,
                },
            }),
            ModelParams::Huber(cfg) => {
                ModelParams::Huber(HuberConfig { epsilon: real("epsilon")?, alpha: real("alpha")?, ..*cfg })
            }
            ModelParams::Ridge(_) => ModelParams::Ridge(RidgeConfig { alpha: real("alpha")? }),
            ModelParams::BayesianRidge(cfg) => ModelParams::BayesianRidge(BayesRidgeConfig {
                max_iter: int("max_iter")?,
                alpha_1: real("alpha_1")?,
                alpha_2: real("alpha_2")?,
                lambda_1: real("lambda_1")?,
                lambda_2: real("lambda_2")?,
                ..*cfg
            }),
            ModelParams::Linear {} => ModelParams::Linear {},
        })
    }

    /// Replaces the seed of every stochastic component.
    pub fn reseeded(&self, seed: u64) -> Self {
        match self {
            ModelParams::Dnn(cfg) => ModelParams::Dnn(MlpConfig { seed, ..cfg.clone() }),
            ModelParams::Boosted(cfg) => ModelParams::Boosted(GbmConfig { seed, ..*cfg }),
            ModelParams::Forest(cfg) => ModelParams::Forest(ForestConfig { seed, ..*cfg }),
            other => other.clone(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("params serialize")
    }
}

/// A trained model of any family.
#[derive(Debug, Clone)]
pub enum FittedModel {
    Dnn(MlpModel),
    Boosted(GbmModel),
    Forest(RandomForest),
    Knn(KnnModel),
    Linear(LinearFit),
}

impl FittedModel {
    pub fn predict(&self, xs: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(match self {
            FittedModel::Dnn(m) => m.predict(xs)?,
            FittedModel::Boosted(m) => m.predict(xs),
            FittedModel::Forest(m) => m.predict(xs),
            FittedModel::Knn(m) => m.predict(xs),
            FittedModel::Linear(m) => m.predict(xs),
        })
    }
}

/// Fits `params` on `train`. Nothing else is visible to the model.
pub fn fit_model(params: &ModelParams, train: &SampleSet) -> Result<FittedModel> {
    let (xs, ys) = (train.xs.view(), train.ys.view());
    Ok(match params {
        ModelParams::Dnn(cfg) => FittedModel::Dnn(train_mlp(train, cfg)?.0),
        ModelParams::Boosted(cfg) => FittedModel::Boosted(fit_gbm(xs, ys, cfg)?),
        ModelParams::Forest(cfg) => FittedModel::Forest(fit_random_forest(xs, ys, cfg)?),
        ModelParams::Knn(cfg) => FittedModel::Knn(fit_knn(xs, ys, cfg)?),
        ModelParams::Huber(cfg) => FittedModel::Linear(fit_huber(xs, ys, cfg)?.fit),
        ModelParams::Ridge(cfg) => FittedModel::Linear(fit_ridge(xs, ys, cfg)?),
        ModelParams::BayesianRidge(cfg) => FittedModel::Linear(fit_bayesian_ridge(xs, ys, cfg)?.fit),
        ModelParams::Linear {} => FittedModel::Linear(fit_ols(xs, ys)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuning::draw_config;

    #[test]
    fn ids_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.id().parse::<ModelKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.id()));
        }
        assert!(matches!("svm".parse::<ModelKind>(), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn list_parsing() {
        assert_eq!(ModelKind::parse_list("linear, knn").unwrap(), vec![ModelKind::Linear, ModelKind::Knn]);
        assert!(ModelKind::parse_list("linear,linear").is_err());
        assert!(ModelKind::parse_list("").is_err());
        assert!(matches!(ModelKind::parse_list("linear,bogus"), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn every_candidate_maps_onto_params() {
        for k in ModelKind::ALL {
            let base = ModelParams::defaults(k, 3);
            for i in 0..20 {
                let c = draw_config(&k.search_space(), 11, i);
                let p = base.with_candidate(&c).unwrap();
                assert_eq!(std::mem::discriminant(&p), std::mem::discriminant(&base));
            }
        }
    }

    #[test]
    fn params_serialize_as_flat_maps() {
        for k in ModelKind::ALL {
            assert!(ModelParams::defaults(k, 0).to_json().is_object(), "{k}");
        }
        let v = ModelParams::defaults(ModelKind::Ridge, 0).to_json();
        assert_eq!(v["alpha"], 0.1);
    }
}

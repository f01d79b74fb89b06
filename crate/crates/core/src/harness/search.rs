use serde::{Deserialize, Serialize};

use super::models::{fit_model, ModelKind, ModelParams};
use crate::dataset::SampleSet;
use crate::error::{invalid, Result};
use crate::metrics::rmse;
use crate::neural::train_mlp;
use crate::rng;
use crate::tuning::{
    cross_val_score, hyperband, kfold_split, successive_halving, CandidateConfig, HalvingSpec, HyperbandSpec,
    ResourceKind, TuneResult,
};
use rand::seq::SliceRandom;

/// Search budgets for the tuned mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningBudget {
    pub n_initial: usize,
    pub eta: usize,
    pub cv_folds: usize,
    /// Smallest training fraction a first-round candidate sees.
    pub min_train_fraction: f64,
    /// Boosting-round cap used as the halving resource for boosted models.
    pub max_boosting_rounds: usize,
    pub hyperband_max_epochs: u64,
    pub hyperband_eta: u64,
}

impl Default for TuningBudget {
    fn default() -> Self {
        Self {
            n_initial: 81,
            eta: 3,
            cv_folds: 5,
            min_train_fraction: 1.0 / 27.0,
            max_boosting_rounds: 300,
            hyperband_max_epochs: 243,
            hyperband_eta: 3,
        }
    }
}

impl TuningBudget {
    pub fn validate(&self) -> Result<()> {
        if self.n_initial == 0 || self.eta < 2 || self.cv_folds < 2 {
            return Err(invalid("tuning needs n_initial >= 1, eta >= 2 and cv_folds >= 2"));
        }
        if !(self.min_train_fraction > 0.0 && self.min_train_fraction <= 1.0) {
            return Err(invalid("min_train_fraction must be in (0, 1]"));
        }
        if self.max_boosting_rounds == 0 {
            return Err(invalid("max_boosting_rounds must be positive"));
        }
        if self.hyperband_eta < 2 || self.hyperband_max_epochs < self.hyperband_eta {
            return Err(invalid("hyperband needs eta >= 2 and max epochs >= eta"));
        }
        Ok(())
    }

    /// Number of halvings until a single candidate is left.
    fn rounds(&self) -> i32 {
        let (mut n, mut k) = (self.n_initial, 0);
        while n > 1 {
            n = n.div_ceil(self.eta);
            k += 1;
        }
        k
    }
}

fn mse(truth: &[f64], pred: &[f64]) -> Result<f64> {
    Ok(rmse(truth, pred)?.powi(2))
}

/// Validation MSE of `params` fitted on `fit_rows` of `train`.
fn holdout_mse(params: &ModelParams, train: &SampleSet, fit_rows: &[usize], val_rows: &[usize]) -> Result<f64> {
    let model = fit_model(params, &train.select(fit_rows))?;
    let val = train.select(val_rows);
    mse(val.ys.as_slice().expect("contiguous"), &model.predict(val.xs.view())?)
}

/// Searches the preset space of `kind` using only `train` and returns the
/// winning parameters, or the base parameters for an empty space.
pub fn tune(
    kind: ModelKind,
    base: &ModelParams,
    train: &SampleSet,
    budget: &TuningBudget,
    seed: u64,
) -> Result<(ModelParams, Option<TuneResult>)> {
    budget.validate()?;
    let space = kind.search_space();
    if space.is_empty() {
        return Ok((base.clone(), None));
    }
    let candidate_params = |c: &CandidateConfig| -> Result<ModelParams> {
        Ok(base.with_candidate(c)?.reseeded(rng::mix(seed, c.draw_index as u64)))
    };

    let result = if kind == ModelKind::Dnn {
        let spec = HyperbandSpec { max_resource: budget.hyperband_max_epochs, eta: budget.hyperband_eta, seed };
        hyperband(
            |c, epochs| match candidate_params(c)? {
                ModelParams::Dnn(cfg) => {
                    let cfg = crate::neural::MlpConfig { max_epochs: epochs as usize, ..cfg };
                    Ok(train_mlp(train, &cfg)?.1.best_val_loss())
                }
                _ => unreachable!("dnn params"),
            },
            &space,
            &spec,
        )?
    } else {
        let folds = kfold_split(train.len(), budget.cv_folds, seed)?;
        let shrink = (budget.eta as f64).powi(budget.rounds());
        if matches!(base, ModelParams::Boosted(_)) {
            let max = budget.max_boosting_rounds as f64;
            let spec = HalvingSpec {
                n_initial: budget.n_initial,
                eta: budget.eta,
                resource: ResourceKind::BoostingRounds,
                min_resource: max / shrink,
                max_resource: max,
                cv_folds: budget.cv_folds,
                seed,
            };
            successive_halving(
                |c, rounds| {
                    let params = match candidate_params(c)? {
                        ModelParams::Boosted(cfg) => {
                            let cap = (rounds.round() as usize).max(1);
                            ModelParams::Boosted(crate::tree::GbmConfig {
                                n_estimators: cfg.n_estimators.min(cap),
                                ..cfg
                            })
                        }
                        _ => unreachable!("boosted params"),
                    };
                    cross_val_score(&folds, |fit, val| holdout_mse(&params, train, fit, val))
                },
                &space,
                &spec,
            )?
        } else {
            let spec = HalvingSpec {
                n_initial: budget.n_initial,
                eta: budget.eta,
                resource: ResourceKind::TrainingFraction,
                min_resource: (1.0 / shrink).max(budget.min_train_fraction),
                max_resource: 1.0,
                cv_folds: budget.cv_folds,
                seed,
            };
            successive_halving(
                |c, fraction| {
                    let params = candidate_params(c)?;
                    let mut fold = 0u64;
                    cross_val_score(&folds, |fit, val| {
                        let rows = subsample(fit, fraction, rng::mix(seed, 0xf01d), fold);
                        fold += 1;
                        holdout_mse(&params, train, &rows, val)
                    })
                },
                &space,
                &spec,
            )?
        }
    };
    Ok((base.with_candidate(&result.best)?, Some(result)))
}

/// Sorted seeded subsample of `rows` with `ceil(fraction * len)` entries.
/// For a fixed `(seed, fold)` smaller fractions are prefixes of larger ones.
fn subsample(rows: &[usize], fraction: f64, seed: u64, fold: u64) -> Vec<usize> {
    if fraction >= 1.0 {
        return rows.to_vec();
    }
    let mut order = rows.to_vec();
    order.shuffle(&mut rng::stream(seed, fold));
    let take = ((fraction * rows.len() as f64).ceil() as usize).clamp(1, rows.len());
    order.truncate(take);
    order.sort_unstable();
    order
}

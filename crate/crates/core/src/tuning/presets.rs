//! Search spaces used by the tuned experiment mode, keyed by model id.

use super::space::ParamSpace;

pub fn xgboost() -> ParamSpace {
    boosted()
}

pub fn lightgbm() -> ParamSpace {
    boosted()
}

fn boosted() -> ParamSpace {
    ParamSpace::new()
        .int("n_estimators", 50, 300)
        .int("max_depth", 2, 10)
        .log_real("learning_rate", 0.01, 0.3)
        .real("subsample", 0.5, 1.0)
        .real("colsample", 0.5, 1.0)
        .log_real("min_child_weight", 1e-3, 10.0)
}

pub fn gbm() -> ParamSpace {
    ParamSpace::new()
        .int("n_estimators", 50, 300)
        .int("max_depth", 2, 10)
        .log_real("learning_rate", 0.01, 0.3)
        .int("min_samples_split", 2, 20)
}

pub fn random_forest() -> ParamSpace {
    ParamSpace::new()
        .int("n_estimators", 50, 300)
        .int("max_depth", 2, 15)
        .int("min_samples_split", 2, 20)
        .int("min_samples_leaf", 1, 10)
}

pub fn knn() -> ParamSpace {
    ParamSpace::new()
        .int("n_neighbors", 1, 20)
        .categorical("weights", &["uniform", "distance"])
        .categorical("algorithm", &["ball_tree", "sorted", "brute"])
}

pub fn linear() -> ParamSpace {
    ParamSpace::new()
}

pub fn huber() -> ParamSpace {
    ParamSpace::new().real("epsilon", 1.1, 2.0).log_real("alpha", 1e-5, 1.0)
}

pub fn ridge() -> ParamSpace {
    ParamSpace::new().log_real("alpha", 1e-5, 10.0)
}

pub fn bayesian_ridge() -> ParamSpace {
    ParamSpace::new()
        .int("max_iter", 100, 500)
        .log_real("alpha_1", 1e-8, 1e-4)
        .log_real("alpha_2", 1e-8, 1e-4)
        .log_real("lambda_1", 1e-8, 1e-4)
        .log_real("lambda_2", 1e-8, 1e-4)
}

pub fn dnn() -> ParamSpace {
    ParamSpace::new()
        .int("units_1", 32, 512)
        .int("units_2", 32, 512)
        .log_real("learning_rate", 1e-4, 1e-1)
}

/// Space for a model id, or `None` for an unknown id.
pub fn for_model(id: &str) -> Option<ParamSpace> {
    Some(match id {
        "xgboost" => xgboost(),
        "lightgbm" => lightgbm(),
        "gbm" => gbm(),
        "random_forest" => random_forest(),
        "knn" => knn(),
        "linear" => linear(),
        "huber" => huber(),
        "ridge" => ridge(),
        "bayesian_ridge" => bayesian_ridge(),
        "dnn" => dnn(),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuning::sample_configs;

    #[test]
    fn all_spaces_valid_and_sampled_inside() {
        for id in ["xgboost", "lightgbm", "gbm", "random_forest", "knn", "linear", "huber", "ridge", "bayesian_ridge", "dnn"] {
            let space = for_model(id).unwrap();
            space.validate().unwrap();
            for c in sample_configs(&space, 50, 9).unwrap() {
                assert!(space.contains(&c), "{id}");
            }
        }
        assert!(for_model("svm").is_none());
        assert!(linear().is_empty());
    }
}

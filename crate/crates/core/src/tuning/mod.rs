//! Hyperparameter search: random sampling over a typed space, seeded
//! k-fold splits, successive halving and Hyperband.

mod cv;
mod halving;
pub mod presets;
mod space;

pub use cv::{cross_val_score, kfold_split};
pub use halving::{
    halving_schedule, hyperband, hyperband_brackets, successive_halving, Bracket, HalvingSpec, HistoryEntry,
    HyperbandSpec, ResourceKind, TuneResult,
};
pub use space::{draw_config, sample_configs, CandidateConfig, Dimension, ParamSpace, ParamValue};

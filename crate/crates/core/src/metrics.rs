//! L1 / L2 / L-infinity error norms and the train-vs-test gap row.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

fn residuals<'a>(y_true: &'a [f64], y_pred: &'a [f64]) -> Result<impl Iterator<Item = f64> + 'a> {
    if y_true.len() != y_pred.len() {
        return Err(invalid(format!(
            "length mismatch: {} targets vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(invalid("cannot score an empty vector"));
    }
    Ok(y_true.iter().zip(y_pred).map(|(t, p)| t - p))
}

/// Mean absolute error.
pub fn mae(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    let n = y_true.len() as f64;
    Ok(residuals(y_true, y_pred)?.map(f64::abs).sum::<f64>() / n)
}

/// Root mean squared error.
pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    let n = y_true.len() as f64;
    Ok((residuals(y_true, y_pred)?.map(|r| r * r).sum::<f64>() / n).sqrt())
}

/// Maximum absolute error.
pub fn max_abs_err(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    Ok(residuals(y_true, y_pred)?.map(f64::abs).fold(0.0, f64::max))
}

/// One model's row of the gap table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model_name: String,
    pub l1_train: f64,
    pub l1_test: f64,
    pub d_l1: f64,
    pub l2_train: f64,
    pub l2_test: f64,
    pub d_l2: f64,
    pub linf_train: f64,
    pub linf_test: f64,
    pub d_linf: f64,
}

impl MetricsRow {
    /// Builds a row from already-computed norms; deltas are derived.
    pub fn from_norms(model_name: impl Into<String>, train: [f64; 3], test: [f64; 3]) -> Self {
        Self {
            model_name: model_name.into(),
            l1_train: train[0],
            l1_test: test[0],
            d_l1: (test[0] - train[0]).abs(),
            l2_train: train[1],
            l2_test: test[1],
            d_l2: (test[1] - train[1]).abs(),
            linf_train: train[2],
            linf_test: test[2],
            d_linf: (test[2] - train[2]).abs(),
        }
    }

    /// The nine numeric columns in table order.
    pub fn values(&self) -> [f64; 9] {
        [
            self.l1_train,
            self.l1_test,
            self.d_l1,
            self.l2_train,
            self.l2_test,
            self.d_l2,
            self.linf_train,
            self.linf_test,
            self.d_linf,
        ]
    }
}

fn norms(y_true: &[f64], y_pred: &[f64]) -> Result<[f64; 3]> {
    Ok([mae(y_true, y_pred)?, rmse(y_true, y_pred)?, max_abs_err(y_true, y_pred)?])
}

pub fn gap_row(
    model_name: &str,
    train_true: &[f64],
    train_pred: &[f64],
    test_true: &[f64],
    test_pred: &[f64],
) -> Result<MetricsRow> {
    Ok(MetricsRow::from_norms(
        model_name,
        norms(train_true, train_pred)?,
        norms(test_true, test_pred)?,
    ))
}

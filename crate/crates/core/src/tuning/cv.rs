use rand::seq::SliceRandom;

use crate::error::{invalid, Result};
use crate::rng;

/// Seeded shuffle followed by contiguous chunking; the first `n % k` folds
/// get one extra index.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(invalid(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(invalid(format!("{k} folds requested for {n} samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, 0));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// Mean of `score(train_idx, val_idx)` over the folds.
pub fn cross_val_score<F>(folds: &[Vec<usize>], mut score: F) -> Result<f64>
where
    F: FnMut(&[usize], &[usize]) -> Result<f64>,
{
    let mut total = 0.0;
    for (i, val) in folds.iter().enumerate() {
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        total += score(&train, val)?;
    }
    Ok(total / folds.len() as f64)
}

//! Successive halving and Hyperband over sampled candidates.
//!
//! Rungs rank candidates by `(score, draw index)`; failed or NaN
//! evaluations score `+inf` and stay in the history.

use serde::{Deserialize, Serialize};

use super::space::{draw_config, CandidateConfig, ParamSpace};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourceKind {
    /// Fraction of each fold's training split used for fitting.
    TrainingFraction,
    /// Cap on boosting iterations.
    BoostingRounds,
    /// Training epochs.
    Epochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalvingSpec {
    pub n_initial: usize,
    pub eta: usize,
    pub resource: ResourceKind,
    pub min_resource: f64,
    pub max_resource: f64,
    pub cv_folds: usize,
    pub seed: u64,
}

impl HalvingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_initial == 0 {
            return Err(invalid("n_initial must be positive"));
        }
        if self.eta < 2 {
            return Err(invalid("eta must be at least 2"));
        }
        if !(self.min_resource > 0.0 && self.min_resource <= self.max_resource) {
            return Err(invalid("need 0 < min_resource <= max_resource"));
        }
        if self.cv_folds < 2 {
            return Err(invalid("cv_folds must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbandSpec {
    pub max_resource: u64,
    pub eta: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub candidate: CandidateConfig,
    pub resource: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: CandidateConfig,
    pub best_score: f64,
    pub history: Vec<HistoryEntry>,
}

/// `(candidates, resource)` per rung: `ceil(n / eta)` survivors, resource
/// multiplied by `eta` and capped; stops once one candidate is left or the
/// cap has been evaluated.
pub fn halving_schedule(n_initial: usize, eta: usize, min_resource: f64, max_resource: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let (mut n, mut r) = (n_initial, min_resource);
    loop {
        out.push((n, r));
        if n <= 1 || r >= max_resource {
            break;
        }
        n = n.div_ceil(eta);
        r *= eta as f64;
        if r >= max_resource * (1.0 - 1e-12) {
            r = max_resource;
        }
    }
    out
}

fn rank(scored: &mut [(CandidateConfig, f64)]) {
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.draw_index.cmp(&b.0.draw_index)));
}

/// Runs rungs over `pool` and returns the final rung ranked best-first.
fn run_rungs<F>(
    mut pool: Vec<CandidateConfig>,
    schedule: &[(usize, f64)],
    history: &mut Vec<HistoryEntry>,
    evaluate: &mut F,
) -> Vec<(CandidateConfig, f64)>
where
    F: FnMut(&CandidateConfig, f64) -> Result<f64>,
{
    let mut ranked = Vec::new();
    for (i, &(_, resource)) in schedule.iter().enumerate() {
        ranked = pool
            .drain(..)
            .map(|c| {
                let score = match evaluate(&c, resource) {
                    Ok(s) if !s.is_nan() => s,
                    _ => f64::INFINITY,
                };
                history.push(HistoryEntry { candidate: c.clone(), resource, score });
                (c, score)
            })
            .collect();
        rank(&mut ranked);
        if let Some(&(keep, _)) = schedule.get(i + 1) {
            pool = ranked.iter().take(keep).map(|(c, _)| c.clone()).collect();
        }
    }
    ranked
}

pub fn successive_halving<F>(mut evaluate: F, space: &ParamSpace, spec: &HalvingSpec) -> Result<TuneResult>
where
    F: FnMut(&CandidateConfig, f64) -> Result<f64>,
{
    spec.validate()?;
    space.validate()?;
    let pool: Vec<CandidateConfig> = (0..spec.n_initial).map(|i| draw_config(space, spec.seed, i)).collect();
    let schedule = halving_schedule(spec.n_initial, spec.eta, spec.min_resource, spec.max_resource);
    let mut history = Vec::new();
    let ranked = run_rungs(pool, &schedule, &mut history, &mut evaluate);
    let (best, best_score) = ranked.into_iter().next().expect("at least one candidate");
    Ok(TuneResult { best, best_score, history })
}

/// One Hyperband bracket: `n` fresh candidates starting at resource `r`,
/// halved `s` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub s: u32,
    pub n: usize,
    pub r: f64,
    pub eta: u64,
}

impl Bracket {
    /// Rung `i` keeps `floor(n / eta^i)` candidates at resource `r eta^i`.
    pub fn rungs(&self) -> Vec<(usize, f64)> {
        (0..=self.s)
            .map(|i| {
                let div = self.eta.pow(i) as usize;
                ((self.n / div).max(1), self.r * div as f64)
            })
            .collect()
    }

    /// Resource units consumed by the bracket.
    pub fn budget(&self) -> f64 {
        self.rungs().iter().map(|(n, r)| *n as f64 * r).sum()
    }
}

/// Bracket table for maximum resource `R`: `s_max = floor(log_eta R)`,
/// `n = ceil((s_max + 1) eta^s / (s + 1))`, `r = R eta^-s`.
pub fn hyperband_brackets(max_resource: u64, eta: u64) -> Result<Vec<Bracket>> {
    if eta < 2 {
        return Err(invalid("eta must be at least 2"));
    }
    if max_resource < eta {
        return Err(invalid(format!("max resource {max_resource} must be at least eta = {eta}")));
    }
    let mut s_max = 0u32;
    while eta.pow(s_max + 1) <= max_resource {
        s_max += 1;
    }
    Ok((0..=s_max)
        .rev()
        .map(|s| {
            let num = (s_max as u64 + 1) * eta.pow(s);
            let n = num.div_ceil(s as u64 + 1) as usize;
            Bracket { s, n, r: max_resource as f64 / eta.pow(s) as f64, eta }
        })
        .collect())
}

pub fn hyperband<F>(mut evaluate: F, space: &ParamSpace, spec: &HyperbandSpec) -> Result<TuneResult>
where
    F: FnMut(&CandidateConfig, f64) -> Result<f64>,
{
    space.validate()?;
    let brackets = hyperband_brackets(spec.max_resource, spec.eta)?;
    let mut history = Vec::new();
    let mut finalists: Vec<(CandidateConfig, f64)> = Vec::new();
    let mut next_draw = 0;
    for b in &brackets {
        let pool: Vec<CandidateConfig> = (next_draw..next_draw + b.n).map(|i| draw_config(space, spec.seed, i)).collect();
        next_draw += b.n;
        let ranked = run_rungs(pool, &b.rungs(), &mut history, &mut evaluate);
        finalists.extend(ranked);
    }
    rank(&mut finalists);
    let (best, best_score) = finalists.into_iter().next().expect("at least one bracket");
    Ok(TuneResult { best, best_score, history })
}

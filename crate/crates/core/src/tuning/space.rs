use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Int { lo: i64, hi: i64 },
    Real { lo: f64, hi: f64, log: bool },
    Categorical(Vec<String>),
}

impl Dimension {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            Dimension::Int { lo, hi } => lo <= hi,
            Dimension::Real { lo, hi, log } => lo <= hi && lo.is_finite() && hi.is_finite() && (!log || *lo > 0.0),
            Dimension::Categorical(values) => !values.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("dimension `{name}` has an empty or malformed range")))
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> ParamValue {
        match self {
            Dimension::Int { lo, hi } => ParamValue::Int(rng.gen_range(*lo..=*hi)),
            Dimension::Real { lo, hi, log: false } => ParamValue::Real(rng.gen_range(*lo..=*hi)),
            Dimension::Real { lo, hi, log: true } => {
                ParamValue::Real(rng.gen_range(lo.ln()..=hi.ln()).exp().clamp(*lo, *hi))
            }
            Dimension::Categorical(values) => ParamValue::Cat(values[rng.gen_range(0..values.len())].clone()),
        }
    }

    pub fn contains(&self, value: &ParamValue) -> bool {
        match (self, value) {
            (Dimension::Int { lo, hi }, ParamValue::Int(v)) => lo <= v && v <= hi,
            (Dimension::Real { lo, hi, .. }, ParamValue::Real(v)) => lo <= v && v <= hi,
            (Dimension::Categorical(values), ParamValue::Cat(v)) => values.contains(v),
            _ => false,
        }
    }
}

/// Ordered list of named dimensions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    dims: Vec<(String, Dimension)>,
}

impl ParamSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, dim: Dimension) -> Self {
        self.dims.push((name.to_string(), dim));
        self
    }

    pub fn int(self, name: &str, lo: i64, hi: i64) -> Self {
        self.with(name, Dimension::Int { lo, hi })
    }

    pub fn real(self, name: &str, lo: f64, hi: f64) -> Self {
        self.with(name, Dimension::Real { lo, hi, log: false })
    }

    pub fn log_real(self, name: &str, lo: f64, hi: f64) -> Self {
        self.with(name, Dimension::Real { lo, hi, log: true })
    }

    pub fn categorical(self, name: &str, values: &[&str]) -> Self {
        self.with(name, Dimension::Categorical(values.iter().map(|v| v.to_string()).collect()))
    }

    pub fn dims(&self) -> &[(String, Dimension)] {
        &self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.iter().try_for_each(|(name, dim)| dim.validate(name))
    }

    pub fn contains(&self, c: &CandidateConfig) -> bool {
        c.values.len() == self.dims.len()
            && self.dims.iter().all(|(name, dim)| c.values.get(name).is_some_and(|v| dim.contains(v)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

/// One sampled assignment plus the `(seed, draw index)` that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateConfig {
    pub values: BTreeMap<String, ParamValue>,
    pub seed: u64,
    pub draw_index: usize,
}

impl CandidateConfig {
    pub fn int(&self, name: &str) -> Option<i64> {
        match self.values.get(name)? {
            ParamValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Real-valued lookup; integer dimensions widen.
    pub fn real(&self, name: &str) -> Option<f64> {
        match self.values.get(name)? {
            ParamValue::Real(v) => Some(*v),
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Cat(_) => None,
        }
    }

    pub fn cat(&self, name: &str) -> Option<&str> {
        match self.values.get(name)? {
            ParamValue::Cat(v) => Some(v),
            _ => None,
        }
    }
}

/// Draw number `index` of the sampler seeded with `seed`. Each draw uses its
/// own stream, so a candidate depends only on `(seed, index)`.
pub fn draw_config(space: &ParamSpace, seed: u64, index: usize) -> CandidateConfig {
    let mut r = rng::stream(seed, index as u64);
    let values = space.dims.iter().map(|(name, dim)| (name.clone(), dim.sample(&mut r))).collect();
    CandidateConfig { values, seed, draw_index: index }
}

pub fn sample_configs(space: &ParamSpace, n: usize, seed: u64) -> Result<Vec<CandidateConfig>> {
    if n == 0 {
        return Err(invalid("must sample at least one configuration"));
    }
    space.validate()?;
    Ok((0..n).map(|i| draw_config(space, seed, i)).collect())
}

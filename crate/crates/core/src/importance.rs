//! Permutation variable importance. A variable is permuted as a whole
//! one-hot block, so every permuted row remains a valid encoding.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::EncodedMatrix;
use crate::ensembles::TrainedModel;
use crate::error::{Error, Result};
use crate::rashomon::RashomonSet;
use crate::search::ModelSpace;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PviConfig {
    /// Repetitions per variable.
    pub repeats: usize,
    pub seed: u64,
}

impl Default for PviConfig {
    fn default() -> Self {
        Self {
            repeats: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PviRecord {
    pub model_id: usize,
    pub variable: String,
    pub baseline: f64,
    /// `baseline - permuted accuracy`, one per repeat; may be negative.
    pub drops: Vec<f64>,
    pub mean_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PviReport {
    /// Member-major, variables in schema order within each member.
    pub records: Vec<PviRecord>,
    pub variables: Vec<String>,
    pub config: PviConfig,
    pub course: String,
    pub setup: String,
}

impl PviReport {
    pub fn for_model(&self, model_id: usize) -> Vec<&PviRecord> {
        self.records.iter().filter(|r| r.model_id == model_id).collect()
    }

    pub fn model_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.records.iter().map(|r| r.model_id).collect();
        ids.dedup();
        ids
    }
}

/// Uniform random permutation of `0..n` determined by `seed`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut seed::rng(seed));
    p
}

/// Apply one row permutation to every column of `variable`'s group.
pub fn permute_variable(matrix: &EncodedMatrix, variable: &str, seed: u64) -> Result<EncodedMatrix> {
    let group = matrix
        .group(variable)
        .ok_or_else(|| Error::Argument(format!("unknown variable `{variable}`")))?;
    let perm = permutation(matrix.n_rows(), seed);
    Ok(matrix.with_permuted_block(group.columns.clone(), &perm))
}

fn repeat_seed(cfg: &PviConfig, variable: &str, repeat: usize) -> u64 {
    seed::derive(cfg.seed, &[seed::tag(variable), repeat as u64])
}

/// Importance of every variable for one model on the validation matrix.
/// Permutation seeds depend only on the config seed, variable and repeat,
/// so all models see the same shuffles.
pub fn pvi_for_model(model: &TrainedModel, valid: &EncodedMatrix, cfg: &PviConfig) -> Result<Vec<PviRecord>> {
    if cfg.repeats == 0 {
        return Err(Error::Argument("PVI needs at least one repeat".into()));
    }
    let baseline = model.payload.accuracy(valid)?;
    valid
        .groups()
        .iter()
        .map(|g| {
            let drops = (0..cfg.repeats)
                .map(|i| {
                    let permuted = permute_variable(valid, &g.name, repeat_seed(cfg, &g.name, i))?;
                    Ok(baseline - model.payload.accuracy(&permuted)?)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean_drop = drops.iter().sum::<f64>() / drops.len() as f64;
            Ok(PviRecord {
                model_id: model.model_id,
                variable: g.name.clone(),
                baseline,
                drops,
                mean_drop,
            })
        })
        .collect()
}

/// Importance for every Rashomon-set member, in ascending model id order.
pub fn pvi_over_set(
    set: &RashomonSet,
    space: &ModelSpace,
    valid: &EncodedMatrix,
    cfg: &PviConfig,
    course: &str,
    setup: &str,
) -> Result<PviReport> {
    if set.is_empty() {
        return Err(Error::Argument("Rashomon set is empty".into()));
    }
    let per_model: Vec<Vec<PviRecord>> = set
        .member_ids
        .par_iter()
        .map(|&id| {
            let model = space
                .get(id)
                .ok_or_else(|| Error::Argument(format!("model {id} not in the space")))?;
            pvi_for_model(model, valid, cfg)
        })
        .collect::<Result<_>>()?;
    Ok(PviReport {
        records: per_model.into_iter().flatten().collect(),
        variables: valid.groups().iter().map(|g| g.name.clone()).collect(),
        config: *cfg,
        course: course.to_string(),
        setup: setup.to_string(),
    })
}

/// Across-model distribution of `mean_drop` for one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSummary {
    pub variable: String,
    pub n_models: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(report: &PviReport) -> Vec<VariableSummary> {
    report
        .variables
        .iter()
        .filter_map(|v| {
            let mut xs: Vec<f64> = report
                .records
                .iter()
                .filter(|r| &r.variable == v)
                .map(|r| r.mean_drop)
                .collect();
            if xs.is_empty() {
                return None;
            }
            xs.sort_by(f64::total_cmp);
            Some(VariableSummary {
                variable: v.clone(),
                n_models: xs.len(),
                min: xs[0],
                q1: quantile(&xs, 0.25),
                median: quantile(&xs, 0.5),
                q3: quantile(&xs, 0.75),
                max: xs[xs.len() - 1],
                mean: xs.iter().sum::<f64>() / xs.len() as f64,
            })
        })
        .collect()
}

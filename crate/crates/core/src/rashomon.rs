//! Reference model, empirical Rashomon set and its summary statistics.
//!
//! Loss is `1 - validation accuracy`. A model belongs to the set when its
//! loss is at most the reference loss plus `epsilon`; the comparison is exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::ModelSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RashomonSet {
    pub reference_id: usize,
    /// Ascending model ids, reference included.
    pub member_ids: Vec<usize>,
    pub epsilon: f64,
    pub loss_metric: String,
}

impl RashomonSet {
    pub fn len(&self) -> usize {
        self.member_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.member_ids.binary_search(&id).is_ok()
    }
}

pub const LOSS_METRIC: &str = "1-accuracy";

fn losses(accuracies: &[f64]) -> Vec<f64> {
    accuracies.iter().map(|a| 1.0 - a).collect()
}

/// Index of the minimal loss, lowest index on ties.
pub fn select_reference_from(accuracies: &[f64]) -> Result<usize> {
    let l = losses(accuracies);
    let mut best: Option<usize> = None;
    for (i, &x) in l.iter().enumerate() {
        if best.is_none_or(|b| x < l[b]) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| Error::Argument("cannot select a reference from an empty model space".into()))
}

/// Membership computed on a bare accuracy vector indexed by model id.
pub fn extract_from(accuracies: &[f64], epsilon: f64) -> Result<RashomonSet> {
    if !(epsilon >= 0.0) {
        return Err(Error::Argument(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let reference_id = select_reference_from(accuracies)?;
    let l = losses(accuracies);
    let bound = l[reference_id] + epsilon;
    let member_ids = l
        .iter()
        .enumerate()
        .filter(|(_, &x)| x <= bound)
        .map(|(i, _)| i)
        .collect();
    Ok(RashomonSet {
        reference_id,
        member_ids,
        epsilon,
        loss_metric: LOSS_METRIC.to_string(),
    })
}

pub fn select_reference(space: &ModelSpace) -> Result<usize> {
    select_reference_from(&space.accuracies())
}

pub fn extract_rashomon(space: &ModelSpace, epsilon: f64) -> Result<RashomonSet> {
    extract_from(&space.accuracies(), epsilon)
}

/// Model-space and Rashomon-set accuracy summaries, mean and sample sd.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RashomonSummary {
    pub space_mean: f64,
    pub space_sd: f64,
    pub space_size: usize,
    pub set_mean: f64,
    pub set_sd: f64,
    pub set_size: usize,
    pub reference_id: usize,
    pub reference_accuracy: f64,
    pub epsilon: f64,
}

/// Mean and sample standard deviation (n - 1 denominator, 0 for n = 1).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

pub fn summary_from(accuracies: &[f64], set: &RashomonSet) -> Result<RashomonSummary> {
    if let Some(&bad) = set.member_ids.iter().find(|&&id| id >= accuracies.len()) {
        return Err(Error::Argument(format!("member {bad} not in the model space")));
    }
    let (space_mean, space_sd) = mean_sd(accuracies);
    let members: Vec<f64> = set.member_ids.iter().map(|&i| accuracies[i]).collect();
    let (set_mean, set_sd) = mean_sd(&members);
    Ok(RashomonSummary {
        space_mean,
        space_sd,
        space_size: accuracies.len(),
        set_mean,
        set_sd,
        set_size: members.len(),
        reference_id: set.reference_id,
        reference_accuracy: accuracies[set.reference_id],
        epsilon: set.epsilon,
    })
}

pub fn rashomon_summary(space: &ModelSpace, set: &RashomonSet) -> Result<RashomonSummary> {
    summary_from(&space.accuracies(), set)
}

/// Set size at each epsilon, computed independently per value.
pub fn sweep_from(accuracies: &[f64], epsilons: &[f64]) -> Result<Vec<(f64, usize)>> {
    if epsilons.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Argument("epsilons must be sorted ascending".into()));
    }
    epsilons
        .iter()
        .map(|&e| extract_from(accuracies, e).map(|s| (e, s.len())))
        .collect()
}

pub fn epsilon_sweep(space: &ModelSpace, epsilons: &[f64]) -> Result<Vec<(f64, usize)>> {
    if epsilons.is_empty() {
        return Ok(Vec::new());
    }
    sweep_from(&space.accuracies(), epsilons)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_argmin_loss() {
        assert_eq!(select_reference_from(&[0.80, 0.86, 0.84]).unwrap(), 1);
        assert_eq!(select_reference_from(&[0.80, 0.86, 0.86]).unwrap(), 1);
        assert_eq!(select_reference_from(&[0.5]).unwrap(), 0);
        assert!(select_reference_from(&[]).is_err());
    }

    #[test]
    fn threshold_membership() {
        let s = extract_from(&[0.86, 0.84, 0.80], 0.05).unwrap();
        assert_eq!(s.member_ids, vec![0, 1]);
        assert_eq!(s.reference_id, 0);
        let tied = extract_from(&[0.86, 0.84, 0.86], 0.0).unwrap();
        assert_eq!(tied.member_ids, vec![0, 2]);
        assert!(extract_from(&[0.8], -0.1).is_err());
        assert!(extract_from(&[0.8], f64::NAN).is_err());
    }

    #[test]
    fn summary_examples() {
        let acc = [0.5, 0.7];
        let set = extract_from(&acc, 1.0).unwrap();
        let s = summary_from(&acc, &set).unwrap();
        assert!((s.space_mean - 0.6).abs() < 1e-15 && (s.set_mean - 0.6).abs() < 1e-15);
        assert_eq!((s.space_size, s.set_size), (2, 2));
        let single = extract_from(&acc, 0.0).unwrap();
        let s = summary_from(&acc, &single).unwrap();
        assert_eq!(s.set_sd, 0.0);
        assert_eq!(format!("{:.3}", s.set_sd), "0.000");
    }

    #[test]
    fn sweep_rejects_unsorted() {
        assert!(sweep_from(&[0.5, 0.6], &[0.1, 0.05]).is_err());
        let s = sweep_from(&[0.5, 0.6, 0.9], &[0.0, 0.05, 1.0]).unwrap();
        assert_eq!(s.iter().map(|x| x.1).collect::<Vec<_>>(), [1, 1, 3]);
    }
}

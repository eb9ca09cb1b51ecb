//! Variable-importance orderings and their agreement with the reference
//! model, measured by Kendall's tau-a.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::importance::{PviRecord, PviReport};
use crate::rashomon::RashomonSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    /// Most important first.
    pub order: Vec<String>,
    pub model_id: usize,
    /// Set when two or more variables share a mean drop.
    pub tie_note: bool,
}

/// Sort variables by decreasing mean drop; equal drops keep `variable_order`.
pub fn rank_variables(records: &[&PviRecord], variable_order: &[String]) -> Result<Ranking> {
    let model_id = records
        .first()
        .map(|r| r.model_id)
        .ok_or_else(|| Error::Argument("no importance records to rank".into()))?;
    if records.iter().any(|r| r.model_id != model_id) {
        return Err(Error::Argument("records span more than one model".into()));
    }
    let mut scored = Vec::with_capacity(variable_order.len());
    for (pos, v) in variable_order.iter().enumerate() {
        let mut matching = records.iter().filter(|r| &r.variable == v);
        let rec = matching
            .next()
            .ok_or_else(|| Error::Argument(format!("model {model_id}: no record for `{v}`")))?;
        if matching.next().is_some() {
            return Err(Error::Argument(format!("model {model_id}: duplicate record for `{v}`")));
        }
        scored.push((rec.mean_drop, pos, v.clone()));
    }
    if records.len() != variable_order.len() {
        return Err(Error::Argument(format!(
            "model {model_id}: records name variables outside the schema"
        )));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let tie_note = scored.windows(2).any(|w| w[0].0 == w[1].0);
    Ok(Ranking {
        order: scored.into_iter().map(|(_, _, v)| v).collect(),
        model_id,
        tie_note,
    })
}

/// Concordant and discordant pair counts between two complete rankings.
pub fn kendall_counts(r1: &Ranking, r2: &Ranking) -> Result<(usize, usize)> {
    let n = r1.order.len();
    let pos2: BTreeMap<&str, usize> = r2.order.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    if n != r2.order.len() || pos2.len() != n {
        return Err(Error::Argument("rankings cover different variable sets".into()));
    }
    let mapped = r1
        .order
        .iter()
        .map(|v| {
            pos2.get(v.as_str())
                .copied()
                .ok_or_else(|| Error::Argument(format!("variable `{v}` missing from second ranking")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let (mut conc, mut disc) = (0, 0);
    for i in 0..n {
        for j in i + 1..n {
            if mapped[i] < mapped[j] {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    Ok((conc, disc))
}

/// Tau-a: `(concordant - discordant) / C(n, 2)`.
pub fn kendall_tau(r1: &Ranking, r2: &Ranking) -> Result<f64> {
    let (c, d) = kendall_counts(r1, r2)?;
    let pairs = c + d;
    if pairs == 0 {
        return Err(Error::Argument("Kendall's tau needs at least two variables".into()));
    }
    Ok((c as f64 - d as f64) / pairs as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViodMode {
    /// Most dissimilar member.
    #[default]
    Min,
    /// Most similar member.
    Max,
}

impl fmt::Display for ViodMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViodMode::Min => "min",
            ViodMode::Max => "max",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViodReport {
    pub course: String,
    pub setup: String,
    pub reference_id: usize,
    /// Tau of each non-reference member against the reference.
    pub taus: BTreeMap<usize, f64>,
    pub viod_min: f64,
    pub viod_max: f64,
    pub argmin_id: usize,
    pub argmax_id: usize,
    pub reported_mode: ViodMode,
    pub n_members: usize,
    /// Members (reference included) whose ranking had tied mean drops.
    pub n_tied_rankings: usize,
}

impl ViodReport {
    pub fn reported(&self) -> f64 {
        match self.reported_mode {
            ViodMode::Min => self.viod_min,
            ViodMode::Max => self.viod_max,
        }
    }
}

fn rankings(report: &PviReport, set: &RashomonSet) -> Result<BTreeMap<usize, Ranking>> {
    set.member_ids
        .iter()
        .map(|&id| {
            let recs = report.for_model(id);
            if recs.is_empty() {
                return Err(Error::Argument(format!("importance report lacks member {id}")));
            }
            rank_variables(&recs, &report.variables).map(|r| (id, r))
        })
        .collect()
}

/// Tau of every non-reference member against the reference, by model id.
pub fn tau_distribution(report: &PviReport, set: &RashomonSet) -> Result<Vec<(usize, f64)>> {
    let ranks = rankings(report, set)?;
    let reference = ranks
        .get(&set.reference_id)
        .ok_or_else(|| Error::Argument("reference is not a member".into()))?;
    ranks
        .iter()
        .filter(|(&id, _)| id != set.reference_id)
        .map(|(&id, r)| kendall_tau(reference, r).map(|t| (id, t)))
        .collect()
}

/// Extremal tau against the reference over the other members. Both extremes
/// are recorded; `mode` picks the headline value.
pub fn viod(report: &PviReport, set: &RashomonSet, mode: ViodMode) -> Result<ViodReport> {
    if set.len() < 2 {
        return Err(Error::Undefined("VIOD undefined for singleton set".into()));
    }
    let ranks = rankings(report, set)?;
    let taus: BTreeMap<usize, f64> = tau_distribution(report, set)?.into_iter().collect();
    let mut it = taus.iter();
    let (&first_id, &first) = it.next().expect("at least one non-reference member");
    let (mut min, mut max) = ((first_id, first), (first_id, first));
    for (&id, &t) in it {
        if t < min.1 {
            min = (id, t);
        }
        if t > max.1 {
            max = (id, t);
        }
    }
    Ok(ViodReport {
        course: report.course.clone(),
        setup: report.setup.clone(),
        reference_id: set.reference_id,
        viod_min: min.1,
        viod_max: max.1,
        argmin_id: min.0,
        argmax_id: max.0,
        reported_mode: mode,
        n_members: set.len(),
        n_tied_rankings: ranks.values().filter(|r| r.tie_note).count(),
        taus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: usize, v: &str, d: f64) -> PviRecord {
        PviRecord {
            model_id: id,
            variable: v.into(),
            baseline: 0.8,
            drops: vec![d],
            mean_drop: d,
        }
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn ranking(v: &[&str]) -> Ranking {
        Ranking {
            order: names(v),
            model_id: 0,
            tie_note: false,
        }
    }

    #[test]
    fn rank_examples() {
        let order = names(&["a", "b", "c"]);
        let recs = [rec(0, "a", 0.3), rec(0, "b", 0.1), rec(0, "c", 0.2)];
        let r = rank_variables(&recs.iter().collect::<Vec<_>>(), &order).unwrap();
        assert_eq!(r.order, ["a", "c", "b"]);
        assert!(!r.tie_note);

        let tied = [rec(0, "c", 0.0), rec(0, "a", 0.0), rec(0, "b", 0.0)];
        let r = rank_variables(&tied.iter().collect::<Vec<_>>(), &order).unwrap();
        assert_eq!(r.order, ["a", "b", "c"]);
        assert!(r.tie_note);

        let one = [rec(3, "x", 0.1)];
        let r = rank_variables(&one.iter().collect::<Vec<_>>(), &names(&["x"])).unwrap();
        assert_eq!(r.order, ["x"]);
    }

    #[test]
    fn rank_rejects_missing_variable() {
        let order = names(&["a", "b"]);
        let recs = [rec(0, "a", 0.3)];
        assert!(rank_variables(&recs.iter().collect::<Vec<_>>(), &order).is_err());
    }

    #[test]
    fn tau_examples() {
        let a = ranking(&["a", "b", "c", "d", "e", "f"]);
        let rev = ranking(&["f", "e", "d", "c", "b", "a"]);
        let swap = ranking(&["a", "b", "d", "c", "e", "f"]);
        assert_eq!(kendall_tau(&a, &a).unwrap(), 1.0);
        assert_eq!(kendall_tau(&a, &rev).unwrap(), -1.0);
        assert_eq!(kendall_tau(&a, &swap).unwrap(), 13.0 / 15.0);
        assert!(kendall_tau(&a, &ranking(&["a", "b"])).is_err());
        assert!(kendall_tau(&ranking(&["a", "b"]), &ranking(&["a", "z"])).is_err());
    }
}

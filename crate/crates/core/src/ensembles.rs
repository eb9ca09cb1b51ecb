//! Random forests and gradient-boosted trees built on the one-hot tree
//! kernels, plus the family-dispatched model wrapper and accuracy metric.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::EncodedMatrix;
use crate::error::{Error, Result};
use crate::seed;
use crate::trees::{self, DecisionTree, Impurity, TreeParams, SPLIT_TOLERANCE};

/// Model family tag. `GbdtLeafwise` and `GbdtDepthwise` stand in for the
/// LightGBM-style and XGBoost-style boosters respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Dtree,
    Rforest,
    GbdtDepthwise,
    GbdtLeafwise,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Dtree,
        Family::Rforest,
        Family::GbdtDepthwise,
        Family::GbdtLeafwise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Dtree => "dtree",
            Family::Rforest => "rforest",
            Family::GbdtDepthwise => "gbdt_depthwise",
            Family::GbdtLeafwise => "gbdt_leafwise",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown model family `{s}`")))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub feature_fraction: f64,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestParams {
    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            min_samples_split: 2,
            impurity: Impurity::Gini,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Argument("forest needs at least one tree".into()));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(Error::Argument(format!(
                "feature_fraction {} not in (0, 1]",
                self.feature_fraction
            )));
        }
        self.tree_params().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub n_classes: usize,
}

/// Bagged trees with per-node column subsampling of
/// `ceil(feature_fraction * width)` columns.
pub fn fit_forest(train: &EncodedMatrix, p: &ForestParams) -> Result<Forest> {
    p.validate()?;
    let n = train.n_rows();
    if n == 0 {
        return Err(Error::Argument("cannot fit a forest on an empty matrix".into()));
    }
    let active = train.active_columns();
    let trees = (0..p.n_trees)
        .map(|t| {
            let tree_seed = seed::derive(p.seed, &[t as u64]);
            let rows: Vec<usize> = if p.bootstrap {
                let mut rng = seed::rng(seed::derive(tree_seed, &[seed::tag("bootstrap")]));
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            trees::grow_tree(
                train,
                &active,
                rows,
                p.tree_params(),
                p.feature_fraction,
                tree_seed,
            )
        })
        .collect();
    Ok(Forest {
        trees,
        n_features: train.n_cols(),
        n_classes: train.n_classes(),
    })
}

impl Forest {
    fn proba(&self, row: &[u8]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (a, p) in acc.iter_mut().zip(t.leaf_distribution(row)) {
                *a += p;
            }
        }
        let m = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Growth {
    /// Expand every node level by level down to `max_depth`.
    Depthwise { max_depth: usize },
    /// Repeatedly split the leaf with the largest gain until `max_leaves`.
    Leafwise { max_leaves: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub growth: Growth,
    pub min_samples_leaf: usize,
    pub l2_reg: f64,
    pub seed: u64,
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Argument(format!(
                "learning_rate {} not in (0, 1]",
                self.learning_rate
            )));
        }
        if self.l2_reg < 0.0 || self.min_samples_leaf == 0 {
            return Err(Error::Argument(
                "l2_reg must be non-negative and min_samples_leaf positive".into(),
            ));
        }
        match self.growth {
            Growth::Depthwise { max_depth: 0 } => {
                Err(Error::Argument("depthwise growth needs max_depth >= 1".into()))
            }
            Growth::Leafwise { max_leaves } if max_leaves < 2 => {
                Err(Error::Argument("leafwise growth needs max_leaves >= 2".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn family(&self) -> Family {
        match self.growth {
            Growth::Depthwise { .. } => Family::GbdtDepthwise,
            Growth::Leafwise { .. } => Family::GbdtLeafwise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RegNode {
    Split {
        column: usize,
        left: usize,
        right: usize,
        depth: usize,
    },
    Leaf {
        value: f64,
        depth: usize,
    },
}

/// Regression tree whose leaf values already include the learning rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree {
    pub nodes: Vec<RegNode>,
}

impl RegTree {
    fn value(&self, row: &[u8]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                RegNode::Split {
                    column, left, right, ..
                } => i = if row[*column] == 1 { *right } else { *left },
                RegNode::Leaf { value, .. } => return *value,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbdt {
    /// Initial raw scores: one log-odds for binary, per-class log-priors
    /// otherwise.
    pub init: Vec<f64>,
    /// `rounds[r][k]` is the tree for output `k` at round `r`.
    pub rounds: Vec<Vec<RegTree>>,
    pub n_features: usize,
    pub n_classes: usize,
}

/// Smallest class prior used for the initial scores.
const PRIOR_FLOOR: f64 = 1e-12;
const HESSIAN_FLOOR: f64 = 1e-16;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        *o = (s - m).exp();
        z += *o;
    }
    out.iter_mut().for_each(|o| *o /= z);
}

impl Gbdt {
    fn n_outputs(&self) -> usize {
        self.init.len()
    }

    fn scores_to_proba(&self, scores: &[f64]) -> Vec<f64> {
        if self.n_classes == 2 {
            let p = sigmoid(scores[0]);
            vec![1.0 - p, p]
        } else {
            let mut out = vec![0.0; self.n_classes];
            softmax_into(scores, &mut out);
            out
        }
    }

    fn raw_scores(&self, row: &[u8]) -> Vec<f64> {
        let mut s = self.init.clone();
        for round in &self.rounds {
            for (sk, tree) in s.iter_mut().zip(round) {
                *sk += tree.value(row);
            }
        }
        s
    }

    fn proba(&self, row: &[u8]) -> Vec<f64> {
        self.scores_to_proba(&self.raw_scores(row))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct GradStats {
    g: f64,
    h: f64,
    n: usize,
}

impl GradStats {
    fn score(&self, lambda: f64) -> f64 {
        self.g * self.g / (self.h + lambda)
    }
}

#[derive(Debug, Clone, Copy)]
struct RegSplit {
    column: usize,
    gain: f64,
}

struct RegBuilder<'a> {
    active: &'a [Vec<u32>],
    n_cols: usize,
    grad: &'a [f64],
    hess: &'a [f64],
    lambda: f64,
    min_leaf: usize,
    learning_rate: f64,
}

impl RegBuilder<'_> {
    fn totals(&self, rows: &[usize]) -> GradStats {
        let mut t = GradStats::default();
        for &r in rows {
            t.g += self.grad[r];
            t.h += self.hess[r];
            t.n += 1;
        }
        t
    }

    fn leaf_value(&self, rows: &[usize]) -> f64 {
        let t = self.totals(rows);
        -self.learning_rate * t.g / (t.h + self.lambda)
    }

    fn best_split(&self, rows: &[usize]) -> Option<RegSplit> {
        let total = self.totals(rows);
        let mut ones = vec![GradStats::default(); self.n_cols];
        for &r in rows {
            for &c in &self.active[r] {
                let s = &mut ones[c as usize];
                s.g += self.grad[r];
                s.h += self.hess[r];
                s.n += 1;
            }
        }
        let parent = total.score(self.lambda);
        let mut best: Option<RegSplit> = None;
        for (c, right) in ones.iter().enumerate() {
            let left = GradStats {
                g: total.g - right.g,
                h: total.h - right.h,
                n: total.n - right.n,
            };
            if left.n < self.min_leaf || right.n < self.min_leaf {
                continue;
            }
            let gain = 0.5 * (left.score(self.lambda) + right.score(self.lambda) - parent);
            if best.is_none_or(|b| gain > b.gain + SPLIT_TOLERANCE) {
                best = Some(RegSplit { column: c, gain });
            }
        }
        best.filter(|b| b.gain > SPLIT_TOLERANCE)
    }

    fn partition(&self, rows: Vec<usize>, column: usize) -> (Vec<usize>, Vec<usize>) {
        let (right, left): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.active[r].binary_search(&(column as u32)).is_ok());
        (left, right)
    }

    fn depthwise(&self, rows: Vec<usize>, max_depth: usize) -> RegTree {
        let mut nodes = vec![RegNode::Leaf {
            value: self.leaf_value(&rows),
            depth: 0,
        }];
        let mut frontier = vec![(0usize, rows)];
        for depth in 0..max_depth {
            let mut next = Vec::new();
            for (id, rows) in frontier {
                let Some(split) = self.best_split(&rows) else {
                    continue;
                };
                let (l_rows, r_rows) = self.partition(rows, split.column);
                let left = nodes.len();
                nodes.push(RegNode::Leaf {
                    value: self.leaf_value(&l_rows),
                    depth: depth + 1,
                });
                nodes.push(RegNode::Leaf {
                    value: self.leaf_value(&r_rows),
                    depth: depth + 1,
                });
                nodes[id] = RegNode::Split {
                    column: split.column,
                    left,
                    right: left + 1,
                    depth,
                };
                next.push((left, l_rows));
                next.push((left + 1, r_rows));
            }
            frontier = next;
        }
        RegTree { nodes }
    }

    fn leafwise(&self, rows: Vec<usize>, max_leaves: usize) -> RegTree {
        let mut nodes = vec![RegNode::Leaf {
            value: self.leaf_value(&rows),
            depth: 0,
        }];
        // Open leaves keyed by node id, each with its best pending split.
        let mut open: BTreeMap<usize, (Vec<usize>, Option<RegSplit>)> = BTreeMap::new();
        let root_split = self.best_split(&rows);
        open.insert(0, (rows, root_split));
        let mut n_leaves = 1;
        while n_leaves < max_leaves {
            let pick = open
                .iter()
                .filter_map(|(&id, (_, s))| s.map(|s| (id, s.gain)))
                .fold(None::<(usize, f64)>, |best, (id, gain)| match best {
                    Some((_, g)) if gain <= g + SPLIT_TOLERANCE => best,
                    _ => Some((id, gain)),
                });
            let Some((id, _)) = pick else { break };
            let (rows, split) = open.remove(&id).expect("picked from open set");
            let split = split.expect("picked leaf has a split");
            let depth = match nodes[id] {
                RegNode::Leaf { depth, .. } | RegNode::Split { depth, .. } => depth,
            };
            let (l_rows, r_rows) = self.partition(rows, split.column);
            let left = nodes.len();
            nodes.push(RegNode::Leaf {
                value: self.leaf_value(&l_rows),
                depth: depth + 1,
            });
            nodes.push(RegNode::Leaf {
                value: self.leaf_value(&r_rows),
                depth: depth + 1,
            });
            nodes[id] = RegNode::Split {
                column: split.column,
                left,
                right: left + 1,
                depth,
            };
            let l_split = self.best_split(&l_rows);
            let r_split = self.best_split(&r_rows);
            open.insert(left, (l_rows, l_split));
            open.insert(left + 1, (r_rows, r_split));
            n_leaves += 1;
        }
        RegTree { nodes }
    }
}

/// Mean multinomial log-loss of raw scores against labels.
fn log_loss(model: &Gbdt, scores: &[Vec<f64>], labels: &[usize]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(s, &y)| -model.scores_to_proba(s)[y].max(1e-300).ln())
        .sum();
    total / labels.len() as f64
}

/// Fit a boosted ensemble and return the mean training log-loss after the
/// initial scores and after every round.
pub fn fit_gbdt_traced(train: &EncodedMatrix, p: &GbdtParams) -> Result<(Gbdt, Vec<f64>)> {
    p.validate()?;
    let n = train.n_rows();
    let k = train.n_classes();
    if n == 0 {
        return Err(Error::Argument("cannot boost on an empty matrix".into()));
    }
    if k < 2 {
        return Err(Error::Argument("boosting needs at least two classes".into()));
    }
    let labels = train.labels();
    let mut counts = vec![0usize; k];
    for &y in labels {
        counts[y] += 1;
    }
    let prior: Vec<f64> = counts
        .iter()
        .map(|&c| (c as f64 / n as f64).clamp(PRIOR_FLOOR, 1.0 - PRIOR_FLOOR))
        .collect();
    let init = if k == 2 {
        vec![(prior[1] / prior[0]).ln()]
    } else {
        prior.iter().map(|p| p.ln()).collect()
    };
    let mut model = Gbdt {
        init,
        rounds: Vec::with_capacity(p.n_rounds),
        n_features: train.n_cols(),
        n_classes: k,
    };
    let n_out = model.n_outputs();
    let active = train.active_columns();
    let mut scores: Vec<Vec<f64>> = vec![model.init.clone(); n];
    let mut trace = vec![log_loss(&model, &scores, labels)];
    let mut grad = vec![vec![0.0; n]; n_out];
    let mut hess = vec![vec![0.0; n]; n_out];
    let all_rows: Vec<usize> = (0..n).collect();

    for _ in 0..p.n_rounds {
        for (i, s) in scores.iter().enumerate() {
            let prob = model.scores_to_proba(s);
            let y = labels[i];
            if k == 2 {
                let p1 = prob[1];
                grad[0][i] = p1 - if y == 1 { 1.0 } else { 0.0 };
                hess[0][i] = (p1 * (1.0 - p1)).max(HESSIAN_FLOOR);
            } else {
                for c in 0..k {
                    grad[c][i] = prob[c] - if y == c { 1.0 } else { 0.0 };
                    hess[c][i] = (prob[c] * (1.0 - prob[c])).max(HESSIAN_FLOOR);
                }
            }
        }
        let round: Vec<RegTree> = (0..n_out)
            .map(|out| {
                let builder = RegBuilder {
                    active: &active,
                    n_cols: train.n_cols(),
                    grad: &grad[out],
                    hess: &hess[out],
                    lambda: p.l2_reg,
                    min_leaf: p.min_samples_leaf,
                    learning_rate: p.learning_rate,
                };
                match p.growth {
                    Growth::Depthwise { max_depth } => builder.depthwise(all_rows.clone(), max_depth),
                    Growth::Leafwise { max_leaves } => builder.leafwise(all_rows.clone(), max_leaves),
                }
            })
            .collect();
        for (i, s) in scores.iter_mut().enumerate() {
            let row = train.row(i);
            for (sk, tree) in s.iter_mut().zip(&round) {
                *sk += tree.value(row);
            }
        }
        model.rounds.push(round);
        trace.push(log_loss(&model, &scores, labels));
    }
    Ok((model, trace))
}

/// Second-order boosting with logistic (binary) or softmax (multiclass)
/// gradients and Newton leaf values `-G / (H + l2_reg)`.
pub fn fit_gbdt(train: &EncodedMatrix, p: &GbdtParams) -> Result<Gbdt> {
    fit_gbdt_traced(train, p).map(|(m, _)| m)
}

/// Hyperparameters of any family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum ModelParams {
    Tree(TreeParams),
    Forest(ForestParams),
    Gbdt(GbdtParams),
}

impl ModelParams {
    pub fn family(&self) -> Family {
        match self {
            ModelParams::Tree(_) => Family::Dtree,
            ModelParams::Forest(_) => Family::Rforest,
            ModelParams::Gbdt(p) => p.family(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "lowercase")]
pub enum Payload {
    Tree(DecisionTree),
    Forest(Forest),
    Gbdt(Gbdt),
}

impl Payload {
    pub fn n_features(&self) -> usize {
        match self {
            Payload::Tree(t) => t.n_features,
            Payload::Forest(f) => f.n_features,
            Payload::Gbdt(g) => g.n_features,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Payload::Tree(t) => t.n_classes,
            Payload::Forest(f) => f.n_classes,
            Payload::Gbdt(g) => g.n_classes,
        }
    }

    fn proba_unchecked(&self, row: &[u8]) -> Vec<f64> {
        match self {
            Payload::Tree(t) => t.leaf_distribution(row).to_vec(),
            Payload::Forest(f) => f.proba(row),
            Payload::Gbdt(g) => g.proba(row),
        }
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.n_features() {
            return Err(Error::Argument(format!(
                "input width {width} does not match training width {}",
                self.n_features()
            )));
        }
        Ok(())
    }

    pub fn predict_row(&self, row: &[u8]) -> Result<Vec<f64>> {
        self.check_width(row.len())?;
        Ok(self.proba_unchecked(row))
    }

    pub fn predict(&self, rows: &EncodedMatrix) -> Result<Vec<Vec<f64>>> {
        self.check_width(rows.n_cols())?;
        Ok((0..rows.n_rows())
            .map(|i| self.proba_unchecked(rows.row(i)))
            .collect())
    }

    /// Argmax class per row, lowest class index on ties.
    pub fn predict_labels(&self, rows: &EncodedMatrix) -> Result<Vec<usize>> {
        self.check_width(rows.n_cols())?;
        Ok((0..rows.n_rows())
            .map(|i| argmax(&self.proba_unchecked(rows.row(i))))
            .collect())
    }

    pub fn accuracy(&self, data: &EncodedMatrix) -> Result<f64> {
        if data.n_rows() == 0 {
            return Err(Error::Argument("accuracy on an empty matrix".into()));
        }
        let hits = self
            .predict_labels(data)?
            .iter()
            .zip(data.labels())
            .filter(|(p, y)| p == y)
            .count();
        Ok(hits as f64 / data.n_rows() as f64)
    }

    /// Columns any split in the model tests, ascending.
    pub fn used_columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = match self {
            Payload::Tree(t) => t.used_columns(),
            Payload::Forest(f) => f.trees.iter().flat_map(|t| t.used_columns()).collect(),
            Payload::Gbdt(g) => g
                .rounds
                .iter()
                .flatten()
                .flat_map(|t| &t.nodes)
                .filter_map(|n| match n {
                    RegNode::Split { column, .. } => Some(*column),
                    RegNode::Leaf { .. } => None,
                })
                .collect(),
        };
        cols.sort_unstable();
        cols.dedup();
        cols
    }
}

pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Fit the payload described by `params` on `train`.
pub fn fit_payload(train: &EncodedMatrix, params: &ModelParams, seed: u64) -> Result<Payload> {
    Ok(match params {
        ModelParams::Tree(p) => Payload::Tree(trees::fit_tree(train, *p, seed)?),
        ModelParams::Forest(p) => Payload::Forest(fit_forest(train, p)?),
        ModelParams::Gbdt(p) => Payload::Gbdt(fit_gbdt(train, p)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model_id: usize,
    pub family: Family,
    pub params: ModelParams,
    pub seed: u64,
    pub valid_accuracy: f64,
    pub payload: Payload,
}

impl TrainedModel {
    /// Fit on `train` and score on `valid`.
    pub fn fit(
        model_id: usize,
        params: ModelParams,
        seed: u64,
        train: &EncodedMatrix,
        valid: &EncodedMatrix,
    ) -> Result<Self> {
        let payload = fit_payload(train, &params, seed)?;
        let valid_accuracy = payload.accuracy(valid)?;
        Ok(Self {
            model_id,
            family: params.family(),
            params,
            seed,
            valid_accuracy,
            payload,
        })
    }

    /// Empirical loss on the validation split.
    pub fn loss(&self) -> f64 {
        1.0 - self.valid_accuracy
    }
}

pub fn predict(model: &TrainedModel, rows: &EncodedMatrix) -> Result<Vec<Vec<f64>>> {
    model.payload.predict(rows)
}

/// Fraction of rows whose argmax prediction equals the label. Loss is
/// `1 - accuracy` throughout.
pub fn accuracy(model: &TrainedModel, data: &EncodedMatrix) -> Result<f64> {
    model.payload.accuracy(data)
}

//! Hyperparameter search over the four tree families: random search plus
//! sequential model-based optimization with a random-forest surrogate and
//! expected improvement. Produces the model space and its on-disk registry.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::dataset::{one_hot_encode, EncodedMatrix, SplitPair};
use crate::ensembles::{Family, ForestParams, GbdtParams, Growth, ModelParams, TrainedModel};
use crate::error::{Error, Result};
use crate::seed;
use crate::trees::{Impurity, TreeParams};

/// Candidates scored by expected improvement at every Bayesian iteration.
pub const CANDIDATE_POOL: usize = 256;
/// Ridge term for the boosted families; not searched.
pub const GBDT_L2_REG: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DimKind {
    Integer { lo: i64, hi: i64 },
    Real { lo: f64, hi: f64, scale: Scale },
    Choice { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub kind: DimKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Real(f64),
    Choice(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Real(v) => write!(f, "{v}"),
            Value::Choice(v) => f.write_str(v),
        }
    }
}

/// A point in a family's search space, keyed by dimension name.
pub type Sample = BTreeMap<String, Value>;

impl Dimension {
    pub fn integer(name: &str, lo: i64, hi: i64) -> Self {
        Self {
            name: name.into(),
            kind: DimKind::Integer { lo, hi },
        }
    }

    pub fn real(name: &str, lo: f64, hi: f64, scale: Scale) -> Self {
        Self {
            name: name.into(),
            kind: DimKind::Real { lo, hi, scale },
        }
    }

    pub fn choice(name: &str, choices: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: DimKind::Choice {
                choices: choices.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match &self.kind {
            DimKind::Integer { lo, hi } => lo < hi,
            DimKind::Real { lo, hi, scale } => {
                lo < hi && lo.is_finite() && hi.is_finite() && (*scale == Scale::Linear || *lo > 0.0)
            }
            DimKind::Choice { choices } => !choices.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("dimension `{}` has a degenerate range", self.name)))
        }
    }

    /// Uniform draw on the declared scale.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Value {
        match &self.kind {
            DimKind::Integer { lo, hi } => Value::Int(rng.gen_range(*lo..=*hi)),
            DimKind::Real { lo, hi, scale } => Value::Real(match scale {
                Scale::Linear => rng.gen_range(*lo..=*hi),
                Scale::Log => rng.gen_range(lo.ln()..=hi.ln()).exp().clamp(*lo, *hi),
            }),
            DimKind::Choice { choices } => Value::Choice(choices[rng.gen_range(0..choices.len())].clone()),
        }
    }

    /// Position of a value in [0, 1] on the declared scale.
    pub fn to_unit(&self, v: &Value) -> f64 {
        match (&self.kind, v) {
            (DimKind::Integer { lo, hi }, Value::Int(x)) => (x - lo) as f64 / (hi - lo) as f64,
            (DimKind::Real { lo, hi, scale }, Value::Real(x)) => match scale {
                Scale::Linear => (x - lo) / (hi - lo),
                Scale::Log => (x.ln() - lo.ln()) / (hi.ln() - lo.ln()),
            },
            (DimKind::Choice { choices }, Value::Choice(c)) => {
                let i = choices.iter().position(|x| x == c).unwrap_or(0);
                if choices.len() == 1 {
                    0.5
                } else {
                    i as f64 / (choices.len() - 1) as f64
                }
            }
            _ => 0.5,
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (&self.kind, v) {
            (DimKind::Integer { lo, hi }, Value::Int(x)) => lo <= x && x <= hi,
            (DimKind::Real { lo, hi, .. }, Value::Real(x)) => lo <= x && x <= hi,
            (DimKind::Choice { choices }, Value::Choice(c)) => choices.contains(c),
            _ => false,
        }
    }
}

pub fn sample_point(dims: &[Dimension], rng: &mut ChaCha8Rng) -> Sample {
    dims.iter().map(|d| (d.name.clone(), d.sample(rng))).collect()
}

pub fn encode_point(dims: &[Dimension], s: &Sample) -> Vec<f64> {
    dims.iter()
        .map(|d| s.get(&d.name).map_or(0.5, |v| d.to_unit(v)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub families: Vec<(Family, Vec<Dimension>)>,
}

impl Default for ParamSpace {
    fn default() -> Self {
        use Dimension as D;
        let leaf = || D::integer("min_samples_leaf", 1, 32);
        let boost = |last: Dimension| {
            vec![
                D::integer("n_rounds", 10, 300),
                D::real("learning_rate", 0.01, 0.3, Scale::Log),
                last,
                leaf(),
            ]
        };
        Self {
            families: vec![
                (
                    Family::Dtree,
                    vec![
                        D::integer("max_depth", 1, 12),
                        leaf(),
                        D::integer("min_samples_split", 2, 64),
                        D::choice("impurity", &["gini", "entropy"]),
                    ],
                ),
                (
                    Family::Rforest,
                    vec![
                        D::integer("n_trees", 10, 200),
                        D::integer("max_depth", 1, 12),
                        leaf(),
                        D::real("feature_fraction", 0.2, 1.0, Scale::Linear),
                        D::choice("bootstrap", &["true", "false"]),
                    ],
                ),
                (Family::GbdtDepthwise, boost(D::integer("max_depth", 2, 8))),
                (Family::GbdtLeafwise, boost(D::integer("max_leaves", 4, 64))),
            ],
        }
    }
}

impl ParamSpace {
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::Argument("parameter space has no families".into()));
        }
        self.families
            .iter()
            .flat_map(|(_, dims)| dims)
            .try_for_each(Dimension::validate)
    }

    pub fn dims(&self, family: Family) -> Option<&[Dimension]> {
        self.families
            .iter()
            .find(|(f, _)| *f == family)
            .map(|(_, d)| d.as_slice())
    }
}

fn get_usize(s: &Sample, name: &str) -> Result<usize> {
    match s.get(name) {
        Some(Value::Int(v)) if *v >= 0 => Ok(*v as usize),
        other => Err(Error::Argument(format!("sample field `{name}`: expected integer, got {other:?}"))),
    }
}

fn get_real(s: &Sample, name: &str) -> Result<f64> {
    match s.get(name) {
        Some(Value::Real(v)) => Ok(*v),
        other => Err(Error::Argument(format!("sample field `{name}`: expected real, got {other:?}"))),
    }
}

fn get_choice<'a>(s: &'a Sample, name: &str) -> Result<&'a str> {
    match s.get(name) {
        Some(Value::Choice(v)) => Ok(v),
        other => Err(Error::Argument(format!("sample field `{name}`: expected choice, got {other:?}"))),
    }
}

/// Turn a sampled point into concrete family hyperparameters.
pub fn to_model_params(family: Family, s: &Sample, seed: u64) -> Result<ModelParams> {
    Ok(match family {
        Family::Dtree => ModelParams::Tree(TreeParams {
            max_depth: get_usize(s, "max_depth")?,
            min_samples_leaf: get_usize(s, "min_samples_leaf")?,
            min_samples_split: get_usize(s, "min_samples_split")?,
            impurity: match get_choice(s, "impurity")? {
                "entropy" => Impurity::Entropy,
                _ => Impurity::Gini,
            },
        }),
        Family::Rforest => ModelParams::Forest(ForestParams {
            n_trees: get_usize(s, "n_trees")?,
            max_depth: get_usize(s, "max_depth")?,
            min_samples_leaf: get_usize(s, "min_samples_leaf")?,
            feature_fraction: get_real(s, "feature_fraction")?,
            bootstrap: get_choice(s, "bootstrap")? == "true",
            seed,
        }),
        Family::GbdtDepthwise | Family::GbdtLeafwise => ModelParams::Gbdt(GbdtParams {
            n_rounds: get_usize(s, "n_rounds")?,
            learning_rate: get_real(s, "learning_rate")?,
            growth: if family == Family::GbdtDepthwise {
                Growth::Depthwise {
                    max_depth: get_usize(s, "max_depth")?,
                }
            } else {
                Growth::Leafwise {
                    max_leaves: get_usize(s, "max_leaves")?,
                }
            },
            min_samples_leaf: get_usize(s, "min_samples_leaf")?,
            l2_reg: GBDT_L2_REG,
            seed,
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Random,
    Bayes,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Random => "random",
            Origin::Bayes => "bayes",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub family: Family,
    pub sample: Sample,
    pub seed: u64,
    pub origin: Origin,
    /// Position among trials of the same origin and family.
    pub index: usize,
    pub model: TrainedModel,
}

impl Trial {
    pub fn valid_accuracy(&self) -> f64 {
        self.model.valid_accuracy
    }
}

fn fit_trial(
    family: Family,
    sample: Sample,
    trial_seed: u64,
    origin: Origin,
    index: usize,
    train: &EncodedMatrix,
    valid: &EncodedMatrix,
) -> Result<Trial> {
    let params = to_model_params(family, &sample, trial_seed)?;
    let model = TrainedModel::fit(0, params, trial_seed, train, valid).map_err(|e| {
        Error::Data(format!("fitting {origin:?} trial {index} of {family}: {e}"))
    })?;
    Ok(Trial {
        family,
        sample,
        seed: trial_seed,
        origin,
        index,
        model,
    })
}

/// `n_evals` independent draws, families assigned round-robin. Trial `i`
/// gets its seed from `(master_seed, i)` alone, so fits can run in any
/// order on any number of threads.
pub fn random_search(
    space: &ParamSpace,
    n_evals: usize,
    train: &EncodedMatrix,
    valid: &EncodedMatrix,
    master_seed: u64,
) -> Result<Vec<Trial>> {
    space.validate()?;
    let n_fam = space.families.len();
    (0..n_evals)
        .into_par_iter()
        .map(|i| {
            let (family, dims) = &space.families[i % n_fam];
            let trial_seed = seed::derive(master_seed, &[seed::tag("random"), i as u64]);
            let mut rng = seed::rng(seed::derive(trial_seed, &[seed::tag("sample")]));
            let sample = sample_point(dims, &mut rng);
            fit_trial(*family, sample, trial_seed, Origin::Random, i / n_fam, train, valid)
        })
        .collect()
}

/// One evaluated point of a sequential optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    pub sample: Sample,
    pub seed: u64,
    pub loss: f64,
    pub warmup: bool,
    pub output: T,
}

/// Expected improvement for minimization under a normal predictive.
pub fn expected_improvement(best: f64, mean: f64, sd: f64) -> f64 {
    let gap = best - mean;
    if sd <= 0.0 {
        return gap.max(0.0);
    }
    let z = gap / sd;
    let n = Normal::standard();
    gap * n.cdf(z) + sd * n.pdf(z)
}

/// Minimize `objective` over `dims`: `n_init` random points, then `n_iter`
/// steps that each refit the forest surrogate on every evaluation so far and
/// evaluate the pool candidate with the highest expected improvement.
/// The objective receives the point and a seed derived from `seed` and the
/// evaluation index.
pub fn minimize<T, F>(
    dims: &[Dimension],
    n_init: usize,
    n_iter: usize,
    seed: u64,
    mut objective: F,
) -> Result<Vec<Evaluation<T>>>
where
    F: FnMut(&Sample, u64) -> Result<(f64, T)>,
{
    if n_init < 2 {
        return Err(Error::Argument("Bayesian optimization needs n_init >= 2".into()));
    }
    dims.iter().try_for_each(Dimension::validate)?;
    let mut history: Vec<Evaluation<T>> = Vec::with_capacity(n_init + n_iter);
    for e in 0..n_init + n_iter {
        let eval_seed = seed::derive(seed, &[e as u64]);
        let sample = if e < n_init {
            sample_point(dims, &mut seed::rng(seed::derive(eval_seed, &[seed::tag("sample")])))
        } else {
            let xs: Vec<Vec<f64>> = history.iter().map(|h| encode_point(dims, &h.sample)).collect();
            let ys: Vec<f64> = history.iter().map(|h| h.loss).collect();
            let best = ys.iter().copied().fold(f64::INFINITY, f64::min);
            let forest = surrogate::Forest::fit(&xs, &ys, seed::derive(eval_seed, &[seed::tag("surrogate")]));
            let mut rng = seed::rng(seed::derive(eval_seed, &[seed::tag("pool")]));
            let pool: Vec<Sample> = (0..CANDIDATE_POOL).map(|_| sample_point(dims, &mut rng)).collect();
            let scored: Vec<(f64, f64)> = pool
                .iter()
                .map(|c| {
                    let (mean, sd) = forest.predict(&encode_point(dims, c));
                    (expected_improvement(best, mean, sd), mean)
                })
                .collect();
            let mut pick = 0;
            for (i, s) in scored.iter().enumerate() {
                let b = scored[pick];
                if s.0 > b.0 || (s.0 == b.0 && b.0 <= 0.0 && s.1 < b.1) {
                    pick = i;
                }
            }
            pool.into_iter().nth(pick).expect("pool is non-empty")
        };
        let (loss, output) = objective(&sample, eval_seed)?;
        history.push(Evaluation {
            sample,
            seed: eval_seed,
            loss,
            warmup: e < n_init,
            output,
        });
    }
    Ok(history)
}

/// Best-so-far loss after each evaluation.
pub fn incumbent_trace<T>(history: &[Evaluation<T>]) -> Vec<f64> {
    history
        .iter()
        .scan(f64::INFINITY, |best, h| {
            *best = best.min(h.loss);
            Some(*best)
        })
        .collect()
}

/// Per family (families in parallel, iterations serial), `n_init` warm-up
/// trials followed by `n_iter` surrogate-guided trials on validation loss.
pub fn bayes_opt(
    space: &ParamSpace,
    n_iter: usize,
    n_init: usize,
    train: &EncodedMatrix,
    valid: &EncodedMatrix,
    master_seed: u64,
) -> Result<Vec<Trial>> {
    space.validate()?;
    if n_iter == 0 {
        return Err(Error::Argument("bayes n_iter must be >= 1".into()));
    }
    let per_family: Vec<Vec<Trial>> = space
        .families
        .par_iter()
        .enumerate()
        .map(|(fi, (family, dims))| {
            let fam_seed = seed::derive(master_seed, &[seed::tag("bayes"), fi as u64]);
            let mut index = 0;
            let history = minimize(dims, n_init, n_iter, fam_seed, |sample, s| {
                let t = fit_trial(*family, sample.clone(), s, Origin::Bayes, index, train, valid)?;
                index += 1;
                Ok((t.model.loss(), t))
            })?;
            Ok(history.into_iter().map(|h| h.output).collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_family.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesConfig {
    pub n_iter: usize,
    pub n_init: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub n_random: usize,
    pub bayes: Option<BayesConfig>,
}

impl Default for SearchConfig {
    /// 200 random trials plus 4 families x (26 + 30) Bayesian trials = 424.
    fn default() -> Self {
        Self {
            n_random: 200,
            bayes: Some(BayesConfig {
                n_iter: 30,
                n_init: 26,
            }),
        }
    }
}

impl SearchConfig {
    pub fn total(&self, n_families: usize) -> usize {
        self.n_random
            + self
                .bayes
                .as_ref()
                .map_or(0, |b| n_families * (b.n_iter + b.n_init))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpace {
    pub models: Vec<TrainedModel>,
    pub origins: Vec<Origin>,
    pub fingerprint: String,
    pub master_seed: u64,
}

impl ModelSpace {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&TrainedModel> {
        self.models.get(id)
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.models.iter().map(|m| m.valid_accuracy).collect()
    }
}

/// Run random search and Bayesian optimization and assemble the model space
/// with ids in (origin, family, sample index) order.
pub fn build_model_space(
    config: &SearchConfig,
    space: &ParamSpace,
    split: &SplitPair,
    master_seed: u64,
    fingerprint: impl Into<String>,
) -> Result<ModelSpace> {
    let train = one_hot_encode(&split.train);
    let valid = one_hot_encode(&split.valid);
    let mut trials = random_search(space, config.n_random, &train, &valid, master_seed)?;
    if let Some(b) = &config.bayes {
        trials.extend(bayes_opt(space, b.n_iter, b.n_init, &train, &valid, master_seed)?);
    }
    let family_rank = |f: Family| space.families.iter().position(|(x, _)| *x == f).unwrap_or(usize::MAX);
    trials.sort_by_key(|t| (t.origin, family_rank(t.family), t.index));
    let origins = trials.iter().map(|t| t.origin).collect();
    let models = trials
        .into_iter()
        .enumerate()
        .map(|(id, t)| TrainedModel { model_id: id, ..t.model })
        .collect();
    Ok(ModelSpace {
        models,
        origins,
        fingerprint: fingerprint.into(),
        master_seed,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct RegistryRow {
    model_id: usize,
    family: Family,
    origin: Origin,
    params: String,
    seed: u64,
    valid_accuracy: f64,
}

pub const REGISTRY_FILE: &str = "registry.csv";
pub const FINGERPRINT_FILE: &str = "fingerprint.txt";
pub const MODELS_DIR: &str = "models";

impl ModelSpace {
    /// Write `registry.csv`, `models/<id>.json` and the fingerprint.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let models_dir = dir.join(MODELS_DIR);
        fs::create_dir_all(&models_dir).map_err(|e| Error::io(&models_dir, e))?;
        let reg_path = dir.join(REGISTRY_FILE);
        let mut w = csv::Writer::from_path(&reg_path)?;
        for (m, origin) in self.models.iter().zip(&self.origins) {
            w.serialize(RegistryRow {
                model_id: m.model_id,
                family: m.family,
                origin: *origin,
                params: serde_json::to_string(&m.params)?,
                seed: m.seed,
                valid_accuracy: m.valid_accuracy,
            })?;
            let path = models_dir.join(format!("{}.json", m.model_id));
            fs::write(&path, serde_json::to_vec(m)?).map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&reg_path, e))?;
        let fp = dir.join(FINGERPRINT_FILE);
        fs::write(&fp, format!("{}\n{}\n", self.fingerprint, self.master_seed)).map_err(|e| Error::io(&fp, e))
    }

    /// Stored fingerprint of a saved space, if any.
    pub fn stored_fingerprint(dir: &Path) -> Option<String> {
        let text = fs::read_to_string(dir.join(FINGERPRINT_FILE)).ok()?;
        text.lines().next().map(str::to_string)
    }

    /// Load a saved space, checking every model file against the registry.
    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(FINGERPRINT_FILE))
            .map_err(|e| Error::io(dir.join(FINGERPRINT_FILE), e))?;
        let mut lines = text.lines();
        let fingerprint = lines.next().unwrap_or_default().to_string();
        let master_seed = lines
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Data(format!("bad fingerprint file in {}", dir.display())))?;
        let mut models = Vec::new();
        let mut origins = Vec::new();
        let mut r = csv::Reader::from_path(dir.join(REGISTRY_FILE))?;
        for (i, row) in r.deserialize::<RegistryRow>().enumerate() {
            let row = row?;
            if row.model_id != i {
                return Err(Error::Data(format!("registry ids are not dense at row {i}")));
            }
            let path = dir.join(MODELS_DIR).join(format!("{i}.json"));
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let model: TrainedModel = serde_json::from_slice(&bytes)?;
            if model.valid_accuracy != row.valid_accuracy || model.family != row.family {
                return Err(Error::Data(format!("{} disagrees with the registry", path.display())));
            }
            models.push(model);
            origins.push(row.origin);
        }
        Ok(Self {
            models,
            origins,
            fingerprint,
            master_seed,
        })
    }

    /// Registry rows only: (model_id, family, valid_accuracy).
    pub fn read_registry(dir: &Path) -> Result<Vec<(usize, Family, f64)>> {
        let mut r = csv::Reader::from_path(dir.join(REGISTRY_FILE))?;
        r.deserialize::<RegistryRow>()
            .map(|row| row.map(|x| (x.model_id, x.family, x.valid_accuracy)).map_err(Error::from))
            .collect()
    }
}

/// Random-forest regressor on continuous inputs in [0, 1]; the spread of
/// per-tree predictions serves as the predictive standard deviation.
mod surrogate {
    use rand::seq::index;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    use crate::seed;

    const N_TREES: usize = 32;
    const MAX_DEPTH: usize = 8;
    const MIN_LEAF: usize = 1;

    enum Node {
        Split { dim: usize, threshold: f64, left: usize, right: usize },
        Leaf(f64),
    }

    struct Tree {
        nodes: Vec<Node>,
    }

    impl Tree {
        fn predict(&self, x: &[f64]) -> f64 {
            let mut i = 0;
            loop {
                match &self.nodes[i] {
                    Node::Split { dim, threshold, left, right } => {
                        i = if x[*dim] <= *threshold { *left } else { *right }
                    }
                    Node::Leaf(v) => return *v,
                }
            }
        }
    }

    fn mean(ys: &[f64], rows: &[usize]) -> f64 {
        rows.iter().map(|&r| ys[r]).sum::<f64>() / rows.len() as f64
    }

    fn sse(ys: &[f64], rows: &[usize]) -> f64 {
        let m = mean(ys, rows);
        rows.iter().map(|&r| (ys[r] - m).powi(2)).sum()
    }

    struct Builder<'a> {
        xs: &'a [Vec<f64>],
        ys: &'a [f64],
        n_try: usize,
        rng: ChaCha8Rng,
        nodes: Vec<Node>,
    }

    impl Builder<'_> {
        fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
            let id = self.nodes.len();
            self.nodes.push(Node::Leaf(mean(self.ys, &rows)));
            if depth >= MAX_DEPTH || rows.len() < 2 * MIN_LEAF {
                return id;
            }
            let d = self.xs[0].len();
            let mut dims = index::sample(&mut self.rng, d, self.n_try).into_vec();
            dims.sort_unstable();
            let parent = sse(self.ys, &rows);
            let mut best: Option<(f64, usize, f64)> = None;
            for dim in dims {
                let mut vals: Vec<f64> = rows.iter().map(|&r| self.xs[r][dim]).collect();
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                for w in vals.windows(2) {
                    let t = 0.5 * (w[0] + w[1]);
                    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.xs[i][dim] <= t);
                    if l.len() < MIN_LEAF || r.len() < MIN_LEAF {
                        continue;
                    }
                    let gain = parent - sse(self.ys, &l) - sse(self.ys, &r);
                    if best.is_none_or(|b| gain > b.0 + 1e-12) {
                        best = Some((gain, dim, t));
                    }
                }
            }
            let Some((gain, dim, threshold)) = best else { return id };
            if gain <= 1e-12 {
                return id;
            }
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.xs[i][dim] <= threshold);
            let left = self.grow(l, depth + 1);
            let right = self.grow(r, depth + 1);
            self.nodes[id] = Node::Split { dim, threshold, left, right };
            id
        }
    }

    pub struct Forest {
        trees: Vec<Tree>,
    }

    impl Forest {
        pub fn fit(xs: &[Vec<f64>], ys: &[f64], seed: u64) -> Self {
            let n = xs.len();
            let d = xs.first().map_or(0, Vec::len);
            let trees = (0..N_TREES)
                .map(|t| {
                    let mut rng = seed::rng(seed::derive(seed, &[t as u64]));
                    let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                    let mut b = Builder {
                        xs,
                        ys,
                        n_try: d.div_ceil(2).max(1).min(d.max(1)),
                        rng,
                        nodes: Vec::new(),
                    };
                    if d == 0 {
                        b.nodes.push(Node::Leaf(mean(ys, &rows)));
                    } else {
                        b.grow(rows, 0);
                    }
                    Tree { nodes: b.nodes }
                })
                .collect();
            Self { trees }
        }

        /// Mean and population standard deviation of per-tree predictions.
        pub fn predict(&self, x: &[f64]) -> (f64, f64) {
            let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
            let m = preds.iter().sum::<f64>() / preds.len() as f64;
            let var = preds.iter().map(|p| (p - m).powi(2)).sum::<f64>() / preds.len() as f64;
            (m, var.sqrt())
        }
    }
}

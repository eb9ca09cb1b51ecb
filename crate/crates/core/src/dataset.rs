//! Tabular categorical data: OULAD demographics ingest, planted synthetic
//! data, target construction, stratified holdout and one-hot encoding.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Reserved level name for absent cells.
pub const MISSING: &str = "Missing";

pub const FAIL: &str = "Fail";
pub const PASS: &str = "Pass";
pub const DISTINCTION: &str = "Distinction";

/// The six demographic predictors, in the fixed column order used for all
/// outputs.
pub const OULAD_VARIABLES: [&str; 6] = [
    "age_band",
    "disability",
    "highest_education",
    "gender",
    "imd_band",
    "region",
];

const AGE_LEVELS: [&str; 3] = ["0-35", "35-55", "55+"];
const DISABILITY_LEVELS: [&str; 2] = ["TRUE", "FALSE"];
const EDUCATION_LEVELS: [&str; 4] = [
    "Lower Than A Level",
    "A Level or Equivalent",
    "HE Qualification",
    "Post Graduate Qualification",
];
const GENDER_LEVELS: [&str; 2] = ["F", "M"];
const IMD_LEVELS: [&str; 11] = [
    "0-10%", "10-20%", "20-30%", "30-40%", "40-50%", "50-60%", "60-70%", "70-80%", "80-90%",
    "90-100%", MISSING,
];
const REGION_LEVELS: [&str; 13] = [
    "East Anglian Region",
    "East Midlands Region",
    "Ireland",
    "London Region",
    "North Region",
    "North Western Region",
    "Scotland",
    "South East Region",
    "South Region",
    "South West Region",
    "Wales",
    "West Midlands Region",
    "Yorkshire Region",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    Binary,
    Multiclass,
}

impl TargetMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetMode::Binary => "binary",
            TargetMode::Multiclass => "multiclass",
        }
    }
}

impl fmt::Display for TargetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// OULAD module codes analysed here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Course {
    Aaa,
    Bbb,
    Ddd,
    Eee,
}

impl Course {
    pub const ALL: [Course; 4] = [Course::Aaa, Course::Bbb, Course::Ddd, Course::Eee];

    pub fn code(self) -> &'static str {
        match self {
            Course::Aaa => "AAA",
            Course::Bbb => "BBB",
            Course::Ddd => "DDD",
            Course::Eee => "EEE",
        }
    }
}

impl FromStr for Course {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "AAA" => Ok(Course::Aaa),
            "BBB" => Ok(Course::Bbb),
            "DDD" => Ok(Course::Ddd),
            "EEE" => Ok(Course::Eee),
            other => Err(Error::Argument(format!(
                "unknown course code `{other}` (expected AAA, BBB, DDD or EEE)"
            ))),
        }
    }
}

impl fmt::Display for Course {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub levels: Vec<String>,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, levels: Vec<String>) -> Result<Self> {
        let name = name.into();
        if levels.is_empty() {
            return Err(Error::Argument(format!("column `{name}` has no levels")));
        }
        let mut seen = BTreeSet::new();
        for l in &levels {
            if l.is_empty() || !seen.insert(l.as_str()) {
                return Err(Error::Argument(format!(
                    "column `{name}`: level `{l}` is empty or repeated"
                )));
            }
        }
        Ok(Self { name, levels })
    }

    pub fn level_index(&self, value: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == value)
    }
}

/// One observation: a level index per schema column and a class index into
/// `target_levels`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub values: Vec<usize>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabularDataset {
    schema: Vec<ColumnSchema>,
    rows: Vec<Row>,
    target_levels: Vec<String>,
    course_tag: String,
}

impl TabularDataset {
    pub fn new(
        schema: Vec<ColumnSchema>,
        rows: Vec<Row>,
        target_levels: Vec<String>,
        course_tag: impl Into<String>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Data("dataset has no rows".into()));
        }
        if target_levels.is_empty() {
            return Err(Error::Data("dataset has no target levels".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.values.len() != schema.len() {
                return Err(Error::Data(format!(
                    "row {i} has {} values, schema has {} columns",
                    row.values.len(),
                    schema.len()
                )));
            }
            for (col, &v) in schema.iter().zip(&row.values) {
                if v >= col.levels.len() {
                    return Err(Error::Data(format!(
                        "row {i}: level index {v} out of range for `{}`",
                        col.name
                    )));
                }
            }
            if row.label >= target_levels.len() {
                return Err(Error::Data(format!("row {i}: label index out of range")));
            }
        }
        Ok(Self {
            schema,
            rows,
            target_levels,
            course_tag: course_tag.into(),
        })
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn target_levels(&self) -> &[String] {
        &self.target_levels
    }

    pub fn course_tag(&self) -> &str {
        &self.course_tag
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.schema.iter().map(|c| c.name.clone()).collect()
    }

    /// Level name of a cell.
    pub fn cell(&self, row: usize, col: usize) -> &str {
        &self.schema[col].levels[self.rows[row].values[col]]
    }

    pub fn label_name(&self, row: usize) -> &str {
        &self.target_levels[self.rows[row].label]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.target_levels.len()];
        for r in &self.rows {
            counts[r.label] += 1;
        }
        counts
    }

    /// Subset by row indices, keeping schema and target levels.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        Self::new(
            self.schema.clone(),
            rows,
            self.target_levels.clone(),
            self.course_tag.clone(),
        )
    }
}

/// Normalize a raw OULAD cell for `column` into its canonical level name.
fn canonical_cell(column: &str, raw: &str) -> String {
    let raw = raw.trim();
    if raw.is_empty() || raw == "?" {
        return MISSING.to_string();
    }
    match column {
        "age_band" if raw == "55<=" => "55+".to_string(),
        "disability" => match raw {
            "Y" => "TRUE".to_string(),
            "N" => "FALSE".to_string(),
            other => other.to_string(),
        },
        "imd_band" if !raw.ends_with('%') => format!("{raw}%"),
        _ => raw.to_string(),
    }
}

fn canonical_levels(column: &str) -> &'static [&'static str] {
    match column {
        "age_band" => &AGE_LEVELS,
        "disability" => &DISABILITY_LEVELS,
        "highest_education" => &EDUCATION_LEVELS,
        "gender" => &GENDER_LEVELS,
        "imd_band" => &IMD_LEVELS,
        "region" => &REGION_LEVELS,
        _ => &[],
    }
}

/// Load the demographic predictors of one course from OULAD `studentInfo.csv`.
///
/// Withdrawn students are dropped. Values outside the canonical level sets
/// (for instance `No Formal quals`) are appended as extra levels in sorted
/// order so every observed cell has a level.
pub fn load_oulad(data_dir: &Path, course: &str, mode: TargetMode) -> Result<TabularDataset> {
    let course: Course = course.parse()?;
    let path = data_dir.join("studentInfo.csv");
    let ingest = |reason: String| Error::Ingest {
        path: path.clone(),
        reason,
    };
    let mut reader = csv::Reader::from_path(&path).map_err(|e| ingest(e.to_string()))?;
    let headers = reader.headers().map_err(|e| ingest(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| ingest(format!("missing column `{name}`")))
    };
    let module_col = find("code_module")?;
    let result_col = find("final_result")?;
    let var_cols = OULAD_VARIABLES
        .iter()
        .map(|v| find(v))
        .collect::<Result<Vec<_>>>()?;

    let mut raw_rows: Vec<(Vec<String>, usize)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ingest(e.to_string()))?;
        if record.get(module_col).map(str::trim) != Some(course.code()) {
            continue;
        }
        let label = match record.get(result_col).map(str::trim) {
            Some("Withdrawn") => continue,
            Some(FAIL) => 0,
            Some(PASS) => 1,
            Some(DISTINCTION) => 2,
            other => {
                return Err(ingest(format!(
                    "unexpected final_result {:?}",
                    other.unwrap_or("")
                )))
            }
        };
        let values = OULAD_VARIABLES
            .iter()
            .zip(&var_cols)
            .map(|(name, &c)| canonical_cell(name, record.get(c).unwrap_or("")))
            .collect();
        raw_rows.push((values, label));
    }
    if raw_rows.is_empty() {
        return Err(Error::Data(format!(
            "no completed students for course {course} in {}",
            path.display()
        )));
    }

    let mut schema = Vec::with_capacity(OULAD_VARIABLES.len());
    for (j, name) in OULAD_VARIABLES.iter().enumerate() {
        let mut levels: Vec<String> = canonical_levels(name).iter().map(|s| s.to_string()).collect();
        let extra: BTreeSet<&str> = raw_rows
            .iter()
            .map(|(v, _)| v[j].as_str())
            .filter(|v| !levels.iter().any(|l| l == v))
            .collect();
        levels.extend(extra.into_iter().map(str::to_string));
        schema.push(ColumnSchema::new(*name, levels)?);
    }

    let rows = raw_rows
        .into_iter()
        .map(|(values, label)| Row {
            values: values
                .iter()
                .zip(&schema)
                .map(|(v, col)| col.level_index(v).expect("level registered above"))
                .collect(),
            label,
        })
        .collect();
    let levels = vec![FAIL.to_string(), PASS.to_string(), DISTINCTION.to_string()];
    let data = TabularDataset::new(schema, rows, levels, course.code())?;
    Ok(match mode {
        TargetMode::Binary => make_binary(&data),
        TargetMode::Multiclass => data,
    })
}

/// Merge `Distinction` into `Pass`. Inputs that are already binary are
/// returned unchanged.
pub fn make_binary(d: &TabularDataset) -> TabularDataset {
    let three = [FAIL, PASS, DISTINCTION];
    if d.target_levels.len() != 3 || d.target_levels.iter().zip(three).any(|(a, b)| a != b) {
        return d.clone();
    }
    let rows = d
        .rows
        .iter()
        .map(|r| Row {
            values: r.values.clone(),
            label: r.label.min(1),
        })
        .collect();
    TabularDataset {
        schema: d.schema.clone(),
        rows,
        target_levels: vec![FAIL.to_string(), PASS.to_string()],
        course_tag: d.course_tag.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: TabularDataset,
    pub valid: TabularDataset,
    pub train_indices: Vec<usize>,
    pub valid_indices: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Stratified holdout. `ratio` is the validation fraction; per-class
/// validation counts come from largest-remainder apportionment of
/// `round(ratio * n)` so the total is exact and each class is within one row
/// of its proportional share.
pub fn stratified_split(d: &TabularDataset, ratio: f64, seed: u64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Argument(format!("split ratio {ratio} not in (0, 1)")));
    }
    let k = d.target_levels.len();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, r) in d.rows.iter().enumerate() {
        by_class[r.label].push(i);
    }
    for (c, idx) in by_class.iter().enumerate() {
        if idx.len() == 1 {
            return Err(Error::Stratification(format!(
                "class `{}` has only one row",
                d.target_levels[c]
            )));
        }
    }
    if by_class.iter().filter(|v| !v.is_empty()).count() < 2 {
        return Err(Error::Stratification(
            "need at least two classes with two or more rows".into(),
        ));
    }

    let total = (ratio * d.len() as f64).round() as usize;
    let quotas: Vec<f64> = by_class.iter().map(|v| ratio * v.len() as f64).collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(take.iter().sum());
    for &c in order.iter().cycle().take(k * 2) {
        if remaining == 0 {
            break;
        }
        if take[c] < by_class[c].len() {
            take[c] += 1;
            remaining -= 1;
        }
    }

    let mut valid_indices = Vec::with_capacity(total);
    for (c, idx) in by_class.iter_mut().enumerate() {
        let mut rng = seed::rng(seed::derive(seed, &[c as u64]));
        idx.shuffle(&mut rng);
        valid_indices.extend_from_slice(&idx[..take[c]]);
    }
    valid_indices.sort_unstable();
    let mut in_valid = vec![false; d.len()];
    for &i in &valid_indices {
        in_valid[i] = true;
    }
    let train_indices: Vec<usize> = (0..d.len()).filter(|&i| !in_valid[i]).collect();

    Ok(SplitPair {
        train: d.select(&train_indices)?,
        valid: d.select(&valid_indices)?,
        train_indices,
        valid_indices,
        seed,
        ratio,
    })
}

/// Contiguous one-hot columns of one original variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    pub columns: Range<usize>,
}

/// Dense 0/1 design matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedMatrix {
    data: Vec<u8>,
    n_rows: usize,
    n_cols: usize,
    groups: Vec<Group>,
    column_names: Vec<String>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl EncodedMatrix {
    /// Build from raw parts. Every group column range must be contiguous and
    /// together they must cover `0..n_cols`.
    pub fn from_parts(
        data: Vec<u8>,
        n_cols: usize,
        groups: Vec<Group>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if n_cols == 0 || !data.len().is_multiple_of(n_cols) {
            return Err(Error::Argument("matrix data is not a whole number of rows".into()));
        }
        let n_rows = data.len() / n_cols;
        if labels.len() != n_rows {
            return Err(Error::Argument(format!(
                "{} labels for {n_rows} rows",
                labels.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::Argument("matrix entries must be 0 or 1".into()));
        }
        if labels.iter().any(|&l| l >= n_classes) {
            return Err(Error::Argument("label out of range".into()));
        }
        let mut next = 0;
        for g in &groups {
            if g.columns.start != next || g.columns.end <= g.columns.start {
                return Err(Error::Argument(format!(
                    "group `{}` does not continue the column partition",
                    g.name
                )));
            }
            next = g.columns.end;
        }
        if next != n_cols {
            return Err(Error::Argument("groups do not cover all columns".into()));
        }
        let mut column_names = Vec::with_capacity(n_cols);
        for g in &groups {
            for c in g.columns.clone() {
                column_names.push(format!("{}#{}", g.name, c - g.columns.start));
            }
        }
        Ok(Self {
            data,
            n_rows,
            n_cols,
            groups,
            column_names,
            labels,
            n_classes,
        })
    }

    /// Matrix with one singleton group per column, for learner tests that do
    /// not need variable structure.
    pub fn from_columns(data: Vec<u8>, n_cols: usize, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let groups = (0..n_cols)
            .map(|c| Group {
                name: format!("x{c}"),
                columns: c..c + 1,
            })
            .collect();
        Self::from_parts(data, n_cols, groups, labels, n_classes)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group(&self, name: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.name == name)
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.n_cols + col]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    /// Columns holding a 1 in each row, used by the split searches.
    pub fn active_columns(&self) -> Vec<Vec<u32>> {
        (0..self.n_rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v == 1)
                    .map(|(c, _)| c as u32)
                    .collect()
            })
            .collect()
    }

    /// Copy with the rows of `columns` reordered: output row `i` takes the
    /// block of input row `perm[i]`.
    pub fn with_permuted_block(&self, columns: Range<usize>, perm: &[usize]) -> Self {
        let mut out = self.clone();
        for (i, &src) in perm.iter().enumerate() {
            let (dst_start, src_start) = (i * self.n_cols, src * self.n_cols);
            out.data[dst_start + columns.start..dst_start + columns.end]
                .copy_from_slice(&self.data[src_start + columns.start..src_start + columns.end]);
        }
        out
    }

    /// Level index per group for every row: the position of the first 1 in
    /// the group block (argmax decode).
    pub fn decode(&self) -> Vec<Vec<usize>> {
        (0..self.n_rows)
            .map(|i| {
                let row = self.row(i);
                self.groups
                    .iter()
                    .map(|g| {
                        row[g.columns.clone()]
                            .iter()
                            .position(|&v| v == 1)
                            .unwrap_or(0)
                    })
                    .collect()
            })
            .collect()
    }
}

/// One column per (variable, level) in schema order.
pub fn one_hot_encode(d: &TabularDataset) -> EncodedMatrix {
    let mut groups = Vec::with_capacity(d.schema.len());
    let mut column_names = Vec::new();
    let mut offsets = Vec::with_capacity(d.schema.len());
    let mut start = 0;
    for col in &d.schema {
        offsets.push(start);
        let end = start + col.levels.len();
        groups.push(Group {
            name: col.name.clone(),
            columns: start..end,
        });
        column_names.extend(col.levels.iter().map(|l| format!("{}={l}", col.name)));
        start = end;
    }
    let n_cols = start;
    let mut data = vec![0u8; d.len() * n_cols];
    for (i, row) in d.rows.iter().enumerate() {
        for (&off, &v) in offsets.iter().zip(&row.values) {
            data[i * n_cols + off + v] = 1;
        }
    }
    EncodedMatrix {
        data,
        n_rows: d.len(),
        n_cols,
        groups,
        column_names,
        labels: d.rows.iter().map(|r| r.label).collect(),
        n_classes: d.target_levels.len(),
    }
}

/// A categorical variable with a planted effect on the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedVariable {
    pub name: String,
    pub levels: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedSpec {
    pub variables: Vec<PlantedVariable>,
}

impl PlantedSpec {
    /// Convenience constructor with `levels` levels for every variable.
    pub fn uniform(levels: usize, strengths: &[(&str, f64)]) -> Self {
        Self {
            variables: strengths
                .iter()
                .map(|&(name, strength)| PlantedVariable {
                    name: name.to_string(),
                    levels,
                    strength,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variables.is_empty() {
            return Err(Error::Argument("planted spec has no variables".into()));
        }
        let mut names = BTreeSet::new();
        for v in &self.variables {
            if !(0.0..=1.0).contains(&v.strength) {
                return Err(Error::Argument(format!(
                    "strength of `{}` must lie in [0, 1]",
                    v.name
                )));
            }
            if v.levels == 0 {
                return Err(Error::Argument(format!("`{}` needs at least one level", v.name)));
            }
            if !names.insert(v.name.as_str()) {
                return Err(Error::Argument(format!("duplicate variable `{}`", v.name)));
            }
        }
        if self.variables.iter().filter(|v| v.strength == 0.0).count() > 1 {
            return Err(Error::Argument(
                "at most one variable may be pure noise (strength 0)".into(),
            ));
        }
        Ok(())
    }

    /// Variable names by decreasing planted strength (stable for ties).
    pub fn strength_order(&self) -> Vec<String> {
        let mut v: Vec<&PlantedVariable> = self.variables.iter().collect();
        v.sort_by(|a, b| b.strength.total_cmp(&a.strength));
        v.into_iter().map(|p| p.name.clone()).collect()
    }
}

/// Latent-score multiplier applied to the summed level effects.
const SIGNAL_SCALE: f64 = 3.0;
/// Ordinal cut points on the latent score: Fail | Pass | Distinction.
const CUTPOINTS: (f64, f64) = (-0.5, 1.5);

/// Generate a three-class (Fail/Pass/Distinction) dataset from an ordinal
/// logistic model. Each variable's levels carry evenly spaced effects in
/// [-1, 1] (shuffled per seed) weighted by the variable's strength, so a
/// zero-strength variable is independent of the label.
pub fn synth_generate(n_rows: usize, spec: &PlantedSpec, seed: u64) -> Result<TabularDataset> {
    if n_rows < 50 {
        return Err(Error::Argument(format!(
            "n_rows = {n_rows} is too small; need at least 50"
        )));
    }
    spec.validate()?;
    let mut rng = seed::rng(seed);
    let effects: Vec<Vec<f64>> = spec
        .variables
        .iter()
        .map(|v| {
            let mut e: Vec<f64> = if v.levels == 1 {
                vec![0.0]
            } else {
                (0..v.levels)
                    .map(|i| -1.0 + 2.0 * i as f64 / (v.levels - 1) as f64)
                    .collect()
            };
            e.shuffle(&mut rng);
            e
        })
        .collect();

    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let values: Vec<usize> = spec
            .variables
            .iter()
            .map(|v| rng.gen_range(0..v.levels))
            .collect();
        let signal: f64 = spec
            .variables
            .iter()
            .zip(&values)
            .zip(&effects)
            .map(|((v, &lvl), e)| v.strength * e[lvl])
            .sum();
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        let latent = SIGNAL_SCALE * signal + (u / (1.0 - u)).ln();
        let label = if latent < CUTPOINTS.0 {
            0
        } else if latent < CUTPOINTS.1 {
            1
        } else {
            2
        };
        rows.push(Row { values, label });
    }

    let schema = spec
        .variables
        .iter()
        .map(|v| ColumnSchema::new(v.name.clone(), (0..v.levels).map(|l| format!("L{l}")).collect()))
        .collect::<Result<Vec<_>>>()?;
    TabularDataset::new(
        schema,
        rows,
        vec![FAIL.to_string(), PASS.to_string(), DISTINCTION.to_string()],
        "SYN",
    )
}

//! CART classification trees over binary (one-hot) columns.
//!
//! Every internal node tests a single 0/1 column: rows with a 0 go left,
//! rows with a 1 go right. Split search is exhaustive over the candidate
//! columns; ties are broken towards the lowest column index.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::EncodedMatrix;
use crate::error::{Error, Result};
use crate::seed;

/// Decreases closer than this are treated as equal, and a split must beat
/// zero by more than this to count as an improvement.
pub const SPLIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Impurity {
    Gini,
    Entropy,
}

impl Impurity {
    fn of(self, counts: &[usize], total: usize) -> f64 {
        let n = total as f64;
        match self {
            Impurity::Gini => 1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>(),
            Impurity::Entropy => -counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    p * p.log2()
                })
                .sum::<f64>(),
        }
    }
}

/// Gini (`1 - sum p^2`) or entropy (`-sum p log2 p`) of a class-count vector.
pub fn impurity(class_counts: &[usize], kind: Impurity) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::Argument("impurity of an empty count vector".into()));
    }
    Ok(kind.of(class_counts, total).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub impurity: Impurity,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_samples_leaf: 1,
            min_samples_split: 2,
            impurity: Impurity::Gini,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 || self.min_samples_leaf == 0 || self.min_samples_split == 0 {
            return Err(Error::Argument(
                "max_depth, min_samples_leaf and min_samples_split must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub column: usize,
    pub decrease: f64,
}

/// Exhaustive split search on the rows of a node. Each row is described by
/// the list of columns that hold a 1.
pub(crate) struct ClassSplitter<'a> {
    pub active: &'a [Vec<u32>],
    pub labels: &'a [usize],
    pub n_classes: usize,
    pub n_cols: usize,
}

impl ClassSplitter<'_> {
    pub fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &r in rows {
            counts[self.labels[r]] += 1;
        }
        counts
    }

    /// `columns` must be sorted ascending.
    pub fn best(
        &self,
        rows: &[usize],
        columns: &[usize],
        kind: Impurity,
        min_samples_leaf: usize,
    ) -> Option<SplitChoice> {
        let n = rows.len();
        if n == 0 {
            return None;
        }
        let k = self.n_classes;
        let parent = self.class_counts(rows);
        let parent_imp = kind.of(&parent, n);
        if parent_imp <= 0.0 {
            return None;
        }
        let mut ones = vec![0usize; self.n_cols * k];
        for &r in rows {
            let y = self.labels[r];
            for &c in &self.active[r] {
                ones[c as usize * k + y] += 1;
            }
        }
        let mut zeros = vec![0usize; k];
        let mut best: Option<SplitChoice> = None;
        for &c in columns {
            let right = &ones[c * k..(c + 1) * k];
            let n_right: usize = right.iter().sum();
            let n_left = n - n_right;
            if n_left < min_samples_leaf.max(1) || n_right < min_samples_leaf.max(1) {
                continue;
            }
            for ((z, &p), &o) in zeros.iter_mut().zip(&parent).zip(right) {
                *z = p - o;
            }
            let decrease = parent_imp
                - (n_left as f64 / n as f64) * kind.of(&zeros, n_left)
                - (n_right as f64 / n as f64) * kind.of(right, n_right);
            if best.is_none_or(|b| decrease > b.decrease + SPLIT_TOLERANCE) {
                best = Some(SplitChoice { column: c, decrease });
            }
        }
        best.filter(|b| b.decrease > SPLIT_TOLERANCE)
    }
}

/// Best 0/1 split of `rows` among `columns` by weighted impurity decrease.
/// Returns `None` for pure nodes, for splits that leave a side with fewer
/// than `min_samples_leaf` rows, and when no decrease is strictly positive.
pub fn best_split(
    matrix: &EncodedMatrix,
    rows: &[usize],
    columns: &[usize],
    kind: Impurity,
    min_samples_leaf: usize,
) -> Option<SplitChoice> {
    let active = matrix.active_columns();
    let splitter = ClassSplitter {
        active: &active,
        labels: matrix.labels(),
        n_classes: matrix.n_classes(),
        n_cols: matrix.n_cols(),
    };
    let mut cols = columns.to_vec();
    cols.sort_unstable();
    cols.dedup();
    splitter.best(rows, &cols, kind, min_samples_leaf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        column: usize,
        left: usize,
        right: usize,
        depth: usize,
    },
    Leaf {
        distribution: Vec<f64>,
        depth: usize,
    },
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Split { depth, .. } | Node::Leaf { depth, .. } => *depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub params: TreeParams,
    pub seed: u64,
    pub n_features: usize,
    pub n_classes: usize,
}

struct Grower<'a> {
    splitter: ClassSplitter<'a>,
    params: TreeParams,
    feature_fraction: f64,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn candidate_columns(&mut self) -> Vec<usize> {
        let width = self.splitter.n_cols;
        if self.feature_fraction >= 1.0 {
            return (0..width).collect();
        }
        let m = ((self.feature_fraction * width as f64).ceil() as usize).clamp(1, width);
        let mut cols = index::sample(&mut self.rng, width, m).into_vec();
        cols.sort_unstable();
        cols
    }

    fn leaf(&self, rows: &[usize], depth: usize) -> Node {
        let counts = self.splitter.class_counts(rows);
        let n = rows.len() as f64;
        Node::Leaf {
            distribution: counts.iter().map(|&c| c as f64 / n).collect(),
            depth,
        }
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let leaf = self.leaf(&rows, depth);
        self.nodes.push(leaf);
        if depth >= self.params.max_depth || rows.len() < self.params.min_samples_split {
            return id;
        }
        let columns = self.candidate_columns();
        let Some(choice) = self.splitter.best(
            &rows,
            &columns,
            self.params.impurity,
            self.params.min_samples_leaf,
        ) else {
            return id;
        };
        let active = self.splitter.active;
        let (right_rows, left_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| active[r].binary_search(&(choice.column as u32)).is_ok());
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            column: choice.column,
            left,
            right,
            depth,
        };
        id
    }
}

/// Grow a tree on the given (possibly repeated) training rows. With
/// `feature_fraction < 1` every node draws its candidate columns from an
/// RNG seeded by `seed`.
pub(crate) fn grow_tree(
    matrix: &EncodedMatrix,
    active: &[Vec<u32>],
    rows: Vec<usize>,
    params: TreeParams,
    feature_fraction: f64,
    seed: u64,
) -> DecisionTree {
    let mut grower = Grower {
        splitter: ClassSplitter {
            active,
            labels: matrix.labels(),
            n_classes: matrix.n_classes(),
            n_cols: matrix.n_cols(),
        },
        params,
        feature_fraction,
        rng: seed::rng(seed),
        nodes: Vec::new(),
    };
    grower.grow(rows, 0);
    DecisionTree {
        nodes: grower.nodes,
        params,
        seed,
        n_features: matrix.n_cols(),
        n_classes: matrix.n_classes(),
    }
}

/// Fit a single tree on every row of `matrix`.
pub fn fit_tree(matrix: &EncodedMatrix, params: TreeParams, seed: u64) -> Result<DecisionTree> {
    params.validate()?;
    if matrix.n_rows() == 0 {
        return Err(Error::Argument("cannot fit a tree on an empty matrix".into()));
    }
    let active = matrix.active_columns();
    Ok(grow_tree(
        matrix,
        &active,
        (0..matrix.n_rows()).collect(),
        params,
        1.0,
        seed,
    ))
}

impl DecisionTree {
    /// Leaf distribution for an encoded row, without a width check.
    pub(crate) fn leaf_distribution(&self, row: &[u8]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    column, left, right, ..
                } => i = if row[*column] == 1 { *right } else { *left },
                Node::Leaf { distribution, .. } => return distribution,
            }
        }
    }

    pub fn predict_row(&self, row: &[u8]) -> Result<Vec<f64>> {
        if row.len() != self.n_features {
            return Err(Error::Argument(format!(
                "row width {} does not match training width {}",
                row.len(),
                self.n_features
            )));
        }
        Ok(self.leaf_distribution(row).to_vec())
    }

    pub fn predict(&self, matrix: &EncodedMatrix) -> Result<Vec<Vec<f64>>> {
        (0..matrix.n_rows())
            .map(|i| self.predict_row(matrix.row(i)))
            .collect()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(Node::depth).max().unwrap_or(0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Columns tested by some split node, ascending.
    pub fn used_columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { column, .. } => Some(*column),
                Node::Leaf { .. } => None,
            })
            .collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }
}

/// Row-by-row prediction for a single encoded row; see [`DecisionTree::predict_row`].
pub fn predict_tree(tree: &DecisionTree, row: &[u8]) -> Result<Vec<f64>> {
    tree.predict_row(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn impurity_examples() {
        assert_abs_diff_eq!(impurity(&[5, 5], Impurity::Gini).unwrap(), 0.5);
        assert_abs_diff_eq!(impurity(&[10, 0], Impurity::Gini).unwrap(), 0.0);
        assert_abs_diff_eq!(impurity(&[4, 4], Impurity::Entropy).unwrap(), 1.0);
        assert!(impurity(&[0, 0], Impurity::Gini).is_err());
    }

    #[test]
    fn perfect_separator() {
        let labels = vec![0, 1, 0, 1];
        // c0 is noise, c1 equals the label.
        let data = vec![1, 0, 1, 1, 0, 0, 0, 1];
        let m = EncodedMatrix::from_columns(data, 2, labels, 2).unwrap();
        let s = best_split(&m, &[0, 1, 2, 3], &[0, 1], Impurity::Gini, 1).unwrap();
        assert_eq!(s.column, 1);
        assert_abs_diff_eq!(s.decrease, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn pure_node_has_no_split() {
        let m = EncodedMatrix::from_columns(vec![1, 0, 1, 0], 1, vec![1, 1, 1, 1], 2).unwrap();
        assert!(best_split(&m, &[0, 1, 2, 3], &[0], Impurity::Gini, 1).is_none());
    }

    #[test]
    fn min_samples_leaf_blocks_split() {
        let m = EncodedMatrix::from_columns(vec![1, 0, 0, 0], 1, vec![1, 0, 0, 0], 2).unwrap();
        assert!(best_split(&m, &[0, 1, 2, 3], &[0], Impurity::Gini, 1).is_some());
        assert!(best_split(&m, &[0, 1, 2, 3], &[0], Impurity::Gini, 2).is_none());
    }

    #[test]
    fn root_only_tree_returns_prior() {
        let tree = DecisionTree {
            nodes: vec![Node::Leaf {
                distribution: vec![0.7, 0.3],
                depth: 0,
            }],
            params: TreeParams::default(),
            seed: 0,
            n_features: 3,
            n_classes: 2,
        };
        assert_eq!(predict_tree(&tree, &[0, 1, 0]).unwrap(), vec![0.7, 0.3]);
        assert!(predict_tree(&tree, &[0, 1]).is_err());
    }

    #[test]
    fn depth_one_has_at_most_three_nodes() {
        let labels = vec![0, 1, 1, 0, 1, 0];
        let data = vec![1, 0, 0, 1, 0, 1, 1, 1, 0, 1, 1, 0];
        let m = EncodedMatrix::from_columns(data, 2, labels, 2).unwrap();
        let params = TreeParams {
            max_depth: 1,
            ..TreeParams::default()
        };
        let t = fit_tree(&m, params, 0).unwrap();
        assert!(t.nodes.len() <= 3);
        assert!(t.depth() <= 1);
    }

    #[test]
    fn rejects_zero_depth() {
        let m = EncodedMatrix::from_columns(vec![1, 0], 1, vec![0, 1], 2).unwrap();
        let params = TreeParams {
            max_depth: 0,
            ..TreeParams::default()
        };
        assert!(fit_tree(&m, params, 0).is_err());
    }
}

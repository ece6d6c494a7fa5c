//! CART classification trees with Gini splits.
//!
//! Split quality is compared in exact integer arithmetic. Minimizing the
//! weighted child Gini impurity is equivalent to maximizing
//! `S_L / n_L + S_R / n_R`, where `S` is the sum of squared class counts of a
//! child, so candidate splits compare by cross-multiplying those fractions.
//! Ties therefore resolve by scan order alone: lowest feature index first,
//! then lowest threshold.

use std::cmp::Ordering;

use rand::Rng;

use super::labels::{ClassId, N_CLASSES};
use super::params::TrainParams;
use crate::error::{Error, Result};

pub type ClassCounts = [u32; N_CLASSES];

/// Borrowed row-major feature matrix with one label per row.
#[derive(Debug, Clone, Copy)]
pub struct FeatureRows<'a> {
    features: &'a [f64],
    labels: &'a [ClassId],
    dim: usize,
}

impl<'a> FeatureRows<'a> {
    pub fn new(features: &'a [f64], labels: &'a [ClassId], dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("feature dimension must be >= 1".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::InvalidInput(format!(
                "{} feature values do not form {} rows of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> ClassId {
        self.labels[i]
    }

    pub fn labels(&self) -> &'a [ClassId] {
        self.labels
    }

    #[inline]
    fn value(&self, i: usize, feature: usize) -> f64 {
        self.features[i * self.dim + feature]
    }
}

/// Gini impurity `1 - sum(p_i^2)` of a class histogram.
pub fn gini(counts: &[u32]) -> Result<f64> {
    let n: u64 = counts.iter().map(|&c| c as u64).sum();
    if n == 0 {
        return Err(Error::InvalidInput("gini of an empty histogram".into()));
    }
    let n = n as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

/// A chosen binary split: rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted child impurity `sum(n_child / n * gini(child))`.
    pub impurity: f64,
}

fn sum_sq(counts: &ClassCounts) -> u64 {
    counts.iter().map(|&c| (c as u64) * (c as u64)).sum()
}

/// Exact score `S_L/n_L + S_R/n_R` as a fraction.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn of(s_left: u64, n_left: u64, s_right: u64, n_right: u64) -> Self {
        Score {
            num: s_left as u128 * n_right as u128 + s_right as u128 * n_left as u128,
            den: n_left as u128 * n_right as u128,
        }
    }

    fn cmp(&self, other: &Score) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = (lo + hi) / 2.0;
    // Adjacent floats can round the midpoint up to `hi`.
    if t < hi {
        t
    } else {
        lo
    }
}

/// Best Gini split of the rows `indices` over `candidates`, or `None` when no
/// split lowers impurity. Thresholds are midpoints between consecutive
/// distinct values.
pub fn best_split(
    data: &FeatureRows<'_>,
    indices: &[usize],
    candidates: &[usize],
) -> Option<Split> {
    best_split_min_leaf(data, indices, candidates, 1)
}

pub(crate) fn best_split_min_leaf(
    data: &FeatureRows<'_>,
    indices: &[usize],
    candidates: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = indices.len();
    if n < 2 || n < 2 * min_leaf {
        return None;
    }
    let mut parent = [0u32; N_CLASSES];
    for &i in indices {
        parent[data.label(i).index()] += 1;
    }
    let s_parent = sum_sq(&parent);
    let parent_score = Score {
        num: s_parent as u128,
        den: n as u128,
    };

    let mut features: Vec<usize> = candidates.to_vec();
    features.sort_unstable();
    features.dedup();

    let mut best: Option<(Score, usize, f64)> = None;
    let mut column: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &f in &features {
        column.clear();
        column.extend(
            indices
                .iter()
                .map(|&i| (data.value(i, f), data.label(i).index())),
        );
        column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0u32; N_CLASSES];
        let mut right = parent;
        let (mut s_left, mut s_right) = (0u64, s_parent);
        for k in 0..n - 1 {
            let c = column[k].1;
            s_left += 2 * left[c] as u64 + 1;
            s_right -= 2 * right[c] as u64 - 1;
            left[c] += 1;
            right[c] -= 1;

            let (lo, hi) = (column[k].0, column[k + 1].0);
            if lo == hi {
                continue;
            }
            let (n_left, n_right) = (k + 1, n - k - 1);
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let score = Score::of(s_left, n_left as u64, s_right, n_right as u64);
            if best
                .as_ref()
                .is_none_or(|(b, _, _)| score.cmp(b) == Ordering::Greater)
            {
                best = Some((score, f, midpoint(lo, hi)));
            }
        }
    }

    let (score, feature, threshold) = best?;
    if score.cmp(&parent_score) != Ordering::Greater {
        return None;
    }
    let impurity = 1.0 - score.num as f64 / (score.den as f64 * n as f64);
    Some(Split {
        feature,
        threshold,
        impurity,
    })
}

/// Tree node stored in a pre-order arena.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: ClassCounts,
    },
}

/// Binary classification tree. `nodes[0]` is the root and nodes are stored
/// in pre-order.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

/// Most frequent class of a histogram; ties go to the lowest id.
pub fn majority(counts: &ClassCounts) -> ClassId {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    ClassId::new(best).expect("index below N_CLASSES")
}

impl DecisionTree {
    /// Builds a tree from pre-order nodes, checking child links and leaves.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidInput("tree has no nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            match node {
                Node::Split { left, right, .. } => {
                    if *left <= i || *right <= *left || *right >= nodes.len() {
                        return Err(Error::InvalidInput(format!(
                            "node {i} has invalid children"
                        )));
                    }
                }
                Node::Leaf { counts } => {
                    if counts.iter().all(|&c| c == 0) {
                        return Err(Error::InvalidInput(format!("leaf {i} is empty")));
                    }
                }
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Histogram of the leaf reached by `x`.
    pub fn leaf_counts(&self, x: &[f64]) -> &ClassCounts {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> ClassId {
        majority(self.leaf_counts(x))
    }

    /// Leaf histogram normalized to a distribution.
    pub fn predict_proba(&self, x: &[f64]) -> [f64; N_CLASSES] {
        let counts = self.leaf_counts(x);
        let total: u32 = counts.iter().sum();
        counts.map(|c| c as f64 / total as f64)
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Largest feature index referenced by a split.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

/// Grows a tree on the (possibly repeated) rows `indices`.
///
/// At every node `params.m_features` candidate features are drawn without
/// replacement from `rng`. Growth stops on a pure node, on `max_depth`, when
/// a node is too small to give both children `min_leaf` rows, or when no
/// candidate split lowers impurity.
pub fn train_tree<R: Rng + ?Sized>(
    data: &FeatureRows<'_>,
    indices: &[usize],
    params: &TrainParams,
    rng: &mut R,
) -> Result<DecisionTree> {
    if indices.is_empty() {
        return Err(Error::InvalidInput(
            "cannot train a tree on zero rows".into(),
        ));
    }
    params.validate(data.dim())?;
    if let Some(&bad) = indices.iter().find(|&&i| i >= data.len()) {
        return Err(Error::InvalidInput(format!("row index {bad} out of range")));
    }
    let mut builder = Builder {
        data,
        params,
        nodes: Vec::new(),
    };
    builder.grow(indices, 0, rng);
    Ok(DecisionTree {
        nodes: builder.nodes,
    })
}

struct Builder<'d, 'p> {
    data: &'d FeatureRows<'d>,
    params: &'p TrainParams,
    nodes: Vec<Node>,
}

impl Builder<'_, '_> {
    fn grow<R: Rng + ?Sized>(&mut self, idx: &[usize], depth: usize, rng: &mut R) -> usize {
        let mut counts = [0u32; N_CLASSES];
        for &i in idx.iter() {
            counts[self.data.label(i).index()] += 1;
        }
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });

        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < 2 * self.params.min_leaf {
            return at;
        }

        let candidates =
            rand::seq::index::sample(rng, self.data.dim(), self.params.m_features).into_vec();
        let Some(split) = best_split_min_leaf(self.data, idx, &candidates, self.params.min_leaf)
        else {
            return at;
        };

        let (lhs, rhs): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.data.value(i, split.feature) <= split.threshold);
        debug_assert!(!lhs.is_empty() && !rhs.is_empty());

        let left = self.grow(&lhs, depth + 1, rng);
        let right = self.grow(&rhs, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn ids(v: &[usize]) -> Vec<ClassId> {
        v.iter().map(|&i| ClassId::new(i).unwrap()).collect()
    }

    fn counts(v: &[u32]) -> ClassCounts {
        let mut c = [0; N_CLASSES];
        c[..v.len()].copy_from_slice(v);
        c
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&counts(&[5])).unwrap(), 0.0);
        assert_eq!(gini(&counts(&[5, 5])).unwrap(), 0.5);
        assert!((gini(&counts(&[2, 1, 1])).unwrap() - 0.625).abs() < 1e-15);
        assert!(gini(&counts(&[])).is_err());
    }

    #[test]
    fn separable_midpoint() {
        let x = [0.0, 1.0, 10.0, 11.0];
        let y = ids(&[0, 0, 1, 1]);
        let rows = FeatureRows::new(&x, &y, 1).unwrap();
        let s = best_split(&rows, &[0, 1, 2, 3], &[0]).unwrap();
        assert_eq!((s.feature, s.threshold, s.impurity), (0, 5.5, 0.0));
    }

    #[test]
    fn tie_prefers_lowest_feature_then_threshold() {
        // Both features separate identically.
        let x = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        let y = ids(&[0, 0, 1, 1]);
        let rows = FeatureRows::new(&x, &y, 2).unwrap();
        let s = best_split(&rows, &[0, 1, 2, 3], &[1, 0]).unwrap();
        assert_eq!((s.feature, s.threshold), (0, 1.5));

        // Labels 0,1,0,1 on one feature: thresholds 0.5 and 2.5 tie.
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = ids(&[1, 0, 0, 1]);
        let rows = FeatureRows::new(&x, &y, 1).unwrap();
        let s = best_split(&rows, &[0, 1, 2, 3], &[0]).unwrap();
        assert_eq!(s.threshold, 0.5);
    }

    #[test]
    fn no_gain_gives_none() {
        let x = [1.0, 1.0, 2.0, 2.0];
        let y = ids(&[0, 1, 0, 1]);
        let rows = FeatureRows::new(&x, &y, 1).unwrap();
        assert_eq!(best_split(&rows, &[0, 1, 2, 3], &[0]), None);
        let y = ids(&[0, 0, 0, 0]);
        let rows = FeatureRows::new(&x, &y, 1).unwrap();
        assert_eq!(best_split(&rows, &[0, 1, 2, 3], &[0]), None);
    }

    #[test]
    fn adjacent_float_midpoint_stays_left() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        assert_eq!(midpoint(lo, hi), lo);
    }

    #[test]
    fn single_class_is_one_leaf() {
        let x = [1.0, 2.0, 3.0];
        let y = ids(&[4, 4, 4]);
        let rows = FeatureRows::new(&x, &y, 1).unwrap();
        let t = train_tree(
            &rows,
            &[0, 1, 2],
            &TrainParams::new(1),
            &mut rng_from_seed(0),
        )
        .unwrap();
        assert_eq!(t.depth(), 0);
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict(&[0.0]), ClassId::new(4).unwrap());
    }

    #[test]
    fn fits_separable_data() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let v = i as f64;
            x.extend([v, (i % 7) as f64, -v * 0.5]);
            y.push(ClassId::new(i / 10).unwrap());
        }
        let rows = FeatureRows::new(&x, &y, 3).unwrap();
        let mut p = TrainParams::new(3);
        p.m_features = 3;
        let all: Vec<usize> = (0..40).collect();
        let t = train_tree(&rows, &all, &p, &mut rng_from_seed(1)).unwrap();
        for i in 0..40 {
            assert_eq!(t.predict(rows.row(i)), rows.label(i));
        }
    }

    #[test]
    fn depth_and_leaf_limits() {
        let x: Vec<f64> = (0..32).map(|i| i as f64).collect();
        let y: Vec<ClassId> = (0..32).map(|i| ClassId::new(i % 4).unwrap()).collect();
        let rows = FeatureRows::new(&x, &y, 1).unwrap();
        let all: Vec<usize> = (0..32).collect();
        let mut p = TrainParams::new(1);
        p.max_depth = Some(2);
        let t = train_tree(&rows, &all, &p, &mut rng_from_seed(0)).unwrap();
        assert!(t.depth() <= 2);

        let mut p = TrainParams::new(1);
        p.min_leaf = 5;
        let t = train_tree(&rows, &all, &p, &mut rng_from_seed(0)).unwrap();
        for node in t.nodes() {
            if let Node::Leaf { counts } = node {
                assert!(counts.iter().sum::<u32>() >= 5);
            }
        }
    }

    #[test]
    fn empty_input_rejected() {
        let x = [1.0];
        let y = ids(&[0]);
        let rows = FeatureRows::new(&x, &y, 1).unwrap();
        assert!(train_tree(&rows, &[], &TrainParams::new(1), &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn majority_breaks_ties_low() {
        assert_eq!(majority(&counts(&[0, 3, 0, 3])), ClassId::new(1).unwrap());
    }
}

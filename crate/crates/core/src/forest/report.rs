//! Ensemble error analysis.
//!
//! Each tree's normalized leaf histogram is a class distribution; the forest
//! averages them. Brier score (squared distance to the one-hot truth) is
//! convex in the distribution, so the averaged predictor's score can never
//! exceed the mean of the individual trees' scores.

use super::labels::{ClassId, N_CLASSES};
use super::model::{argmax_low, ForestModel};
use super::tree::FeatureRows;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleErrorReport {
    /// Mean Brier score of each tree on the test set.
    pub tree_brier: Vec<f64>,
    /// Average of `tree_brier`.
    pub mean_tree_brier: f64,
    /// Brier score of the averaged forest distribution.
    pub ensemble_brier: f64,
    /// `accuracy_curve[k]` is the vote accuracy of the first `k + 1` trees.
    pub accuracy_curve: Vec<f64>,
}

impl EnsembleErrorReport {
    /// `ensemble_brier <= mean_tree_brier + tol`.
    pub fn jensen_holds(&self, tol: f64) -> bool {
        self.ensemble_brier <= self.mean_tree_brier + tol
    }
}

/// Squared distance between `p` and the one-hot vector of `truth`.
pub fn brier(p: &[f64; N_CLASSES], truth: ClassId) -> f64 {
    p.iter()
        .enumerate()
        .map(|(c, &pc)| {
            let y = if c == truth.index() { 1.0 } else { 0.0 };
            (pc - y) * (pc - y)
        })
        .sum()
}

pub fn ensemble_error_report(
    model: &ForestModel,
    test: &FeatureRows<'_>,
) -> Result<EnsembleErrorReport> {
    if test.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    if test.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: test.dim(),
        });
    }
    let n = test.len() as f64;
    let n_trees = model.n_trees();
    let mut tree_sum = vec![0.0; n_trees];
    let mut ensemble_sum = 0.0;
    let mut correct = vec![0usize; n_trees];

    for i in 0..test.len() {
        let x = test.row(i);
        let truth = test.label(i);
        let mut avg = [0.0; N_CLASSES];
        let mut votes = [0u32; N_CLASSES];
        for (j, tree) in model.trees().iter().enumerate() {
            let p = tree.predict_proba(x);
            tree_sum[j] += brier(&p, truth);
            for (a, pc) in avg.iter_mut().zip(p) {
                *a += pc;
            }
            votes[tree.predict(x).index()] += 1;
            if argmax_low(&votes) == truth {
                correct[j] += 1;
            }
        }
        let avg = avg.map(|a| a / n_trees as f64);
        ensemble_sum += brier(&avg, truth);
    }

    let tree_brier: Vec<f64> = tree_sum.iter().map(|s| s / n).collect();
    let mean_tree_brier = tree_brier.iter().sum::<f64>() / n_trees as f64;
    Ok(EnsembleErrorReport {
        tree_brier,
        mean_tree_brier,
        ensemble_brier: ensemble_sum / n,
        accuracy_curve: correct.iter().map(|&c| c as f64 / n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;
    use crate::forest::params::TrainParams;
    use crate::forest::tree::{DecisionTree, Node};

    fn stump(threshold: f64, left: [u32; 3], right: [u32; 3]) -> DecisionTree {
        let leaf = |c: [u32; 3]| {
            let mut counts = [0; N_CLASSES];
            counts[..3].copy_from_slice(&c);
            Node::Leaf { counts }
        };
        DecisionTree::from_nodes(vec![
            Node::Split {
                feature: 0,
                threshold,
                left: 1,
                right: 2,
            },
            leaf(left),
            leaf(right),
        ])
        .unwrap()
    }

    fn model(trees: Vec<DecisionTree>) -> ForestModel {
        let mut p = TrainParams::new(1);
        p.n_trees = trees.len();
        ForestModel::from_trees(trees, p, FeatureKind::Texture, 1).unwrap()
    }

    fn cls(v: &[usize]) -> Vec<ClassId> {
        v.iter().map(|&i| ClassId::new(i).unwrap()).collect()
    }

    #[test]
    fn single_tree_equality() {
        let m = model(vec![stump(0.5, [2, 1, 1], [0, 1, 3])]);
        let x = [0.0, 1.0, 2.0];
        let y = cls(&[0, 2, 1]);
        let r = ensemble_error_report(&m, &FeatureRows::new(&x, &y, 1).unwrap()).unwrap();
        assert_eq!(r.ensemble_brier, r.tree_brier[0]);
        assert_eq!(r.mean_tree_brier, r.tree_brier[0]);
    }

    #[test]
    fn identical_trees_equality() {
        let t = stump(1.5, [1, 2, 0], [0, 0, 4]);
        let m = model(vec![t.clone(), t.clone(), t]);
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = cls(&[1, 0, 2, 2]);
        let r = ensemble_error_report(&m, &FeatureRows::new(&x, &y, 1).unwrap()).unwrap();
        assert!((r.ensemble_brier - r.mean_tree_brier).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_three_trees() {
        let m = model(vec![
            stump(0.5, [1, 1, 0], [0, 0, 1]),
            stump(1.5, [1, 0, 0], [0, 1, 1]),
            stump(2.5, [0, 1, 0], [1, 0, 1]),
        ]);
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = cls(&[0, 1, 2, 2, 0]);
        // Per-point leaf distributions (classes 0..3):
        //   x=0: t0 [.5,.5,0] t1 [1,0,0]   t2 [0,1,0]
        //   x=1: t0 [0,0,1]   t1 [1,0,0]   t2 [0,1,0]
        //   x=2: t0 [0,0,1]   t1 [0,.5,.5] t2 [0,1,0]
        //   x=3: t0 [0,0,1]   t1 [0,.5,.5] t2 [.5,0,.5]
        //   x=4: same as x=3
        // Tree 0 Brier per point: .5, 2, 0, 0, 2          -> 4.5/5
        // Tree 1: 0, 2, .5, .5, 1.5                        -> 4.5/5
        // Tree 2: 2, 0, 2, .5, .5                          -> 5/5
        let want_tree = [0.9, 0.9, 1.0];
        // Averages: x0 [1.5,1.5,0]/3, x1 [1,1,1]/3, x2 [0,1.5,1.5]/3,
        //           x3 [.5,.5,2]/3, x4 same.
        // Brier: x0 1/4+1/4+0 = .5, x1 1/9+4/9+1/9 = 2/3, x2 0+1/4+1/4 = .5,
        //        x3 and x4 below.
        let b3 = (0.5f64 / 3.0).powi(2) + (0.5f64 / 3.0).powi(2) + (1.0 - 2.0 / 3.0f64).powi(2);
        let b4 = (1.0 - 0.5 / 3.0f64).powi(2) + (0.5f64 / 3.0).powi(2) + (2.0f64 / 3.0).powi(2);
        let want_ens = (0.5 + 2.0 / 3.0 + 0.5 + b3 + b4) / 5.0;

        let r = ensemble_error_report(&m, &FeatureRows::new(&x, &y, 1).unwrap()).unwrap();
        for (a, b) in r.tree_brier.iter().zip(want_tree) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((r.mean_tree_brier - 2.8 / 3.0).abs() < 1e-12);
        assert!((r.ensemble_brier - want_ens).abs() < 1e-12);
        assert!(r.jensen_holds(1e-12));
        assert_eq!(r.accuracy_curve.len(), 3);
    }

    #[test]
    fn empty_test_rejected() {
        let m = model(vec![stump(0.5, [1, 0, 0], [0, 1, 0])]);
        let rows = FeatureRows::new(&[], &[], 1).unwrap();
        assert!(ensemble_error_report(&m, &rows).is_err());
    }
}

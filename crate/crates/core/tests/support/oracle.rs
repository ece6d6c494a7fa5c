//! Brute-force split search used as an independent check on `best_split`.

use vsr_fault::forest::{ClassId, FeatureRows};

/// Exhaustive search over every (feature, midpoint) pair.
///
/// Returns `(feature, threshold, weighted_gini)` for the lowest impurity,
/// preferring the lowest feature and then the lowest threshold among values
/// within 1e-12 of each other, or `None` when nothing beats the parent.
pub fn brute_force_split(
    rows: &FeatureRows<'_>,
    candidates: &[usize],
) -> Option<(usize, f64, f64)> {
    let n = rows.len();
    let labels: Vec<ClassId> = (0..n).map(|i| rows.label(i)).collect();
    let gini_of = |members: &[usize]| -> f64 {
        let mut counts = std::collections::HashMap::new();
        for &i in members {
            *counts.entry(labels[i]).or_insert(0usize) += 1;
        }
        let m = members.len() as f64;
        1.0 - counts
            .values()
            .map(|&c| (c as f64 / m).powi(2))
            .sum::<f64>()
    };
    let all: Vec<usize> = (0..n).collect();
    let parent = gini_of(&all);

    let mut feats = candidates.to_vec();
    feats.sort();
    feats.dedup();
    let mut best: Option<(usize, f64, f64)> = None;
    for f in feats {
        let mut values: Vec<f64> = (0..n).map(|i| rows.row(i)[f]).collect();
        values.sort_by(|a, b| a.total_cmp(b));
        values.dedup();
        for pair in values.windows(2) {
            let t = (pair[0] + pair[1]) / 2.0;
            let left: Vec<usize> = (0..n).filter(|&i| rows.row(i)[f] <= t).collect();
            let right: Vec<usize> = (0..n).filter(|&i| rows.row(i)[f] > t).collect();
            let w = left.len() as f64 / n as f64 * gini_of(&left)
                + right.len() as f64 / n as f64 * gini_of(&right);
            let better = match best {
                None => true,
                Some((_, _, b)) => w < b - 1e-12,
            };
            if better {
                best = Some((f, t, w));
            }
        }
    }
    best.filter(|&(_, _, w)| w < parent - 1e-12)
}

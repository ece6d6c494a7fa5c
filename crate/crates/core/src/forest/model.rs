//! Bagged forests: bootstrap resampling, training, and voting.

use rand::Rng;
use rayon::prelude::*;

use super::labels::{ClassId, N_CLASSES};
use super::params::TrainParams;
use super::tree::{train_tree, DecisionTree, FeatureRows};
use crate::error::{Error, Result};
use crate::features::FeatureKind;
use crate::seed;

pub const FORMAT_VERSION: u32 = 1;

/// `n` row indices drawn uniformly with replacement.
pub fn bootstrap<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// A trained ensemble of CART trees.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<DecisionTree>,
    params: TrainParams,
    feature_kind: FeatureKind,
    dim: usize,
}

/// Trains `params.n_trees` trees, each on its own bootstrap sample.
///
/// Tree `j` draws both its bootstrap and its split candidates from a stream
/// derived from `(params.seed, j)`, so the model is identical whatever the
/// size of the rayon pool running it.
pub fn train_forest(
    data: &FeatureRows<'_>,
    params: &TrainParams,
    feature_kind: FeatureKind,
) -> Result<ForestModel> {
    if data.is_empty() {
        return Err(Error::InvalidInput(
            "cannot train on an empty dataset".into(),
        ));
    }
    params.validate(data.dim())?;
    let n = data.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|j| {
            let mut rng = seed::rng_for(params.seed, j as u64);
            let sample = bootstrap(n, &mut rng);
            train_tree(data, &sample, params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        params: params.clone(),
        feature_kind,
        dim: data.dim(),
    })
}

impl ForestModel {
    /// Assembles a model from prebuilt trees; `params.n_trees` must match.
    pub fn from_trees(
        trees: Vec<DecisionTree>,
        params: TrainParams,
        feature_kind: FeatureKind,
        dim: usize,
    ) -> Result<Self> {
        if trees.len() != params.n_trees {
            return Err(Error::InvalidInput(format!(
                "{} trees given but params say {}",
                trees.len(),
                params.n_trees
            )));
        }
        params.validate(dim)?;
        if let Some(f) = trees.iter().filter_map(|t| t.max_feature()).max() {
            if f >= dim {
                return Err(Error::InvalidInput(format!(
                    "tree splits on feature {f} but dimension is {dim}"
                )));
            }
        }
        Ok(Self {
            trees,
            params,
            feature_kind,
            dim,
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn params(&self) -> &TrainParams {
        &self.params
    }

    pub fn feature_kind(&self) -> FeatureKind {
        self.feature_kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// The forest formed by the first `k` trees. Per-tree seeding makes it
    /// identical to training `k` trees directly.
    pub fn truncated(&self, k: usize) -> Result<ForestModel> {
        if k == 0 || k > self.trees.len() {
            return Err(Error::InvalidInput(format!(
                "cannot keep {k} of {} trees",
                self.trees.len()
            )));
        }
        Ok(ForestModel {
            trees: self.trees[..k].to_vec(),
            params: TrainParams {
                n_trees: k,
                ..self.params.clone()
            },
            feature_kind: self.feature_kind,
            dim: self.dim,
        })
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Per-class tree votes for `x`.
    pub fn votes(&self, x: &[f64]) -> Result<[u32; N_CLASSES]> {
        self.check_dim(x)?;
        let mut votes = [0u32; N_CLASSES];
        for t in &self.trees {
            votes[t.predict(x).index()] += 1;
        }
        Ok(votes)
    }

    /// Majority vote and the vote histogram; ties go to the lowest class id.
    pub fn predict_class(&self, x: &[f64]) -> Result<(ClassId, [u32; N_CLASSES])> {
        let votes = self.votes(x)?;
        Ok((argmax_low(&votes), votes))
    }

    /// Mean of the trees' normalized leaf histograms.
    pub fn predict_proba(&self, x: &[f64]) -> Result<[f64; N_CLASSES]> {
        self.check_dim(x)?;
        let mut acc = [0.0; N_CLASSES];
        for t in &self.trees {
            for (a, p) in acc.iter_mut().zip(t.predict_proba(x)) {
                *a += p;
            }
        }
        let k = self.trees.len() as f64;
        Ok(acc.map(|a| a / k))
    }
}

pub(crate) fn argmax_low(votes: &[u32; N_CLASSES]) -> ClassId {
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    ClassId::new(best).expect("index below N_CLASSES")
}

use crate::error::{Error, Result};

/// Forest training hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainParams {
    pub n_trees: usize,
    /// Candidate features drawn at each split.
    pub m_features: usize,
    /// Minimum rows in each child of a split.
    pub min_leaf: usize,
    /// Depth cap; `None` grows until another rule stops.
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl TrainParams {
    pub const DEFAULT_TREES: usize = 200;

    /// Defaults for a feature space of `dim` columns: 200 trees,
    /// `ceil(sqrt(dim))` candidates, unit leaves, unlimited depth, seed 0.
    pub fn new(dim: usize) -> Self {
        Self {
            n_trees: Self::DEFAULT_TREES,
            m_features: ((dim as f64).sqrt().ceil() as usize).clamp(1, dim.max(1)),
            min_leaf: 1,
            max_depth: None,
            seed: 0,
        }
    }

    pub fn with_trees(mut self, n_trees: usize) -> Self {
        self.n_trees = n_trees;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
        }
        if self.m_features == 0 || self.m_features > dim {
            return Err(Error::InvalidConfig(format!(
                "m_features {} must lie in 1..={dim}",
                self.m_features
            )));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidConfig("min_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let p = TrainParams::new(18);
        assert_eq!(
            (p.n_trees, p.m_features, p.min_leaf, p.max_depth),
            (200, 5, 1, None)
        );
        assert!(p.validate(18).is_ok());
        assert!(p.validate(4).is_err());
        assert!(TrainParams::new(18).with_trees(0).validate(18).is_err());
        let mut p = TrainParams::new(18);
        p.min_leaf = 0;
        assert!(p.validate(18).is_err());
    }
}

//! Current-sensor fault diagnosis for three-phase PWM voltage-source
//! rectifiers.
//!
//! The crate covers the whole experiment:
//!
//! * [`signal`] synthesizes balanced three-phase currents as seen through
//!   healthy, soft-faulted (gain drift) or hard-faulted sensors.
//! * [`features`] condenses one grid cycle into an 18-value texture vector
//!   (mean, std, smoothness, skewness, kurtosis and rms per phase), or keeps
//!   the raw samples as a baseline.
//! * [`forest`] is a CART/bagging random forest written from scratch, with
//!   the ten-state label encoding and a Brier-score ensemble error report.
//! * [`dataset`] generates labeled datasets and runs the split, repeat and
//!   tree-count sweep protocol.
//! * [`diagnosis`] classifies a stream cycle by cycle.
//!
//! ```
//! use vsr_fault::dataset::{build_dataset, evaluate, split};
//! use vsr_fault::features::FeatureKind;
//! use vsr_fault::forest::{train_forest, TrainParams};
//! use vsr_fault::signal::SignalConfig;
//!
//! let cfg = SignalConfig::default();
//! let data = build_dataset(&cfg, 20, FeatureKind::Texture, 7)?;
//! let (train, test) = split(&data, 0.7, 7)?;
//! let params = TrainParams::new(data.dim()).with_trees(25).with_seed(7);
//! let model = train_forest(&train.rows(), &params, FeatureKind::Texture)?;
//! assert!(evaluate(&model, &test)?.overall_accuracy() > 0.9);
//! # Ok::<(), vsr_fault::Error>(())
//! ```

pub mod dataset;
pub mod diagnosis;
pub mod error;
pub mod features;
pub mod forest;
pub mod seed;
pub mod signal;

pub use error::{Error, Result};

// Guide chapters compiled as doctests so their snippets stay current.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/signals.md")]
    mod signals {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/forest.md")]
    mod forest {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/diagnosis.md")]
    mod diagnosis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

//! Random forest classifier over the ten sensor states.

pub mod format;
pub mod labels;
pub mod model;
pub mod params;
pub mod report;
pub mod tree;

pub use format::{model_to_string, read_model, write_model};
pub use labels::{class_to_labels, ClassId, LabelVector, N_CLASSES};
pub use model::{bootstrap, train_forest, ForestModel};
pub use params::TrainParams;
pub use report::{brier, ensemble_error_report, EnsembleErrorReport};
pub use tree::{
    best_split, gini, majority, train_tree, ClassCounts, DecisionTree, FeatureRows, Node, Split,
};

//! Filter feature selection, selector ensembles and bagged polynomial-kernel
//! SVMs for tabular classification.
//!
//! The pipeline: load a dataset ([`data`]), score or search feature subsets
//! ([`filters`], [`search`]), combine selectors ([`selection`]), train one-vs-one
//! SVMs by SMO ([`svm`]) optionally under bagging ([`bagging`]), and report
//! confusion matrices and accuracies ([`report`]). [`experiment`] wires the
//! stages into reproducible runs.

pub mod bagging;
pub mod data;
pub mod error;
pub mod experiment;
pub mod filters;
pub mod report;
pub mod search;
pub mod selection;
pub mod svm;

pub use bagging::{bagging_train, bootstrap_sample, majority_vote, member_agreement, EnsembleConfig, EnsembleModel, VoteRule};
pub use data::{load_dataset, select_features, stratified_split, AttributeSpec, Dataset, FileFormat, LoadOptions, SplitSpec};
pub use error::{Error, Result};
pub use experiment::{Experiment, ExperimentConfig, ExperimentId};
pub use report::{accuracy, evaluate, render, ConfusionMatrix, EvaluationReport, OutputFormat, Partition};
pub use selection::{aggregate, run_selector, AggregationMode, FeatureSelection, SelectorCode, SelectorId};
pub use svm::{smo_train, train_multiclass, BinarySvm, KernelSpec, SvmConfig, SvmModel};

//! Rashomon sets of tree-based classifiers trained on tabular demographic
//! data, and how much their variable-importance orderings disagree.
//!
//! The crate is organised by stage:
//!
//! * [`dataset`]: loading, target setups, stratified split, one-hot encoding,
//!   planted-signal synthetic data.
//! * [`trees`] and [`ensembles`]: CART, random forests, gradient boosting.
//! * [`search`]: random search and Bayesian optimisation building the model space.
//! * [`rashomon`]: reference model and epsilon-Rashomon set.
//! * [`importance`]: permutation variable importance.
//! * [`discrepancy`]: rankings, Kendall's tau and VIOD.
//! * [`pipeline`]: end-to-end runs and the run directory.

pub mod config;
pub mod dataset;
pub mod discrepancy;
pub mod ensembles;
pub mod error;
pub mod importance;
pub mod pipeline;
pub mod rashomon;
pub mod search;
pub mod seed;
pub mod trees;

pub use config::{validate_config, RunConfig};
pub use dataset::{EncodedMatrix, TabularDataset, TargetMode};
pub use discrepancy::{kendall_tau, viod, ViodMode, ViodReport};
pub use ensembles::{Family, TrainedModel};
pub use error::{Error, Result};
pub use importance::{pvi_over_set, PviConfig, PviReport};
pub use pipeline::{run_pipeline, RunOptions, Stage};
pub use rashomon::{extract_rashomon, RashomonSet};
pub use search::{build_model_space, ModelSpace, ParamSpace, SearchConfig};

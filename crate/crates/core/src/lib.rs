//! Core library for studying how feature and outcome imbalance affect
//! feature selection in tabular data.
//!
//! The crate has three layers:
//!
//! - generators: [`datagen`] builds 2x2 cell probabilities from marginal
//!   imbalances and an odds ratio, and samples synthetic datasets from them;
//!   [`dataset`] holds the column-typed data model and its CSV/JSON
//!   serialization.
//! - estimators: [`glm`] (maximum-likelihood logistic regression with Wald
//!   and profile-likelihood intervals), [`penalized`] (Firth, log-F data
//!   augmentation, coordinate-descent elastic net with cross-validated
//!   tuning) and [`forest`] (CART random forest and conditional-inference
//!   forest with Gini / permutation / AUC importances).
//! - protocols: [`bench`] runs the simulation benchmark over a dataset grid
//!   and [`audit`] runs the same machinery over a real CSV with injected
//!   noise features. [`stats`] carries the shared statistical utilities.
//!
//! Everything is seeded: identical specs and seeds produce identical output
//! regardless of thread count.

pub mod audit;
pub mod bench;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod forest;
pub mod glm;
pub mod penalized;
pub mod stats;

mod dist;
mod linalg;
pub mod seeding;

pub use dataset::{Dataset, Feature, FeatureKind};
pub use error::{Error, Result};

//! Primal support vector machines for bag-of-words text classification.
//!
//! Three optimizers train a homogeneous hyperplane (or kernel expansion) directly in the
//! primal:
//!
//! * [`optim::gd_train`]: full-batch gradient descent on the quadratic hinge loss,
//! * [`optim::newton_train`]: kernel Newton iterations over a shrinking working set,
//!   warm-started from recursive half-size solves,
//! * [`optim::pegasos_train`]: Pegasos stochastic subgradient with ball projection.
//!
//! [`svm`] turns their output into binary classifiers (with a post-hoc bias for the linear
//! ones) and into an ordinal five-class model built from four adjacent-pair classifiers and
//! a sign-pattern count table. [`corpus`] handles the phrase TSV format and featurization,
//! [`eval`] runs repeated random-holdout cross-validation and parameter sweeps.

pub mod corpus;
pub mod eval;
pub mod numerics;
pub mod optim;
pub mod svm;

pub use corpus::{Document, FeatureMode, Instance, RawRecord, Vocabulary};
pub use eval::{cross_validate, CvConfig, CvReport, ExperimentSpec, Task};
pub use numerics::{KernelSpec, SparseVector};
pub use optim::{GdConfig, NewtonConfig, OptimizerConfig, PegasosConfig, Problem};
pub use svm::{BinarySvm, Classifier, MulticlassSvm};

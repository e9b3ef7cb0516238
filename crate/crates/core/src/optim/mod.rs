//! Training algorithms for the homogeneous primal SVM.
//!
//! All three optimizers see the hyperplane without a bias term; linear models get their
//! bias fitted afterwards (see [`crate::svm::fit_bias`]).

mod gd;
mod loss;
mod newton;
mod pegasos;

use std::fmt;
use std::time::Duration;

use thiserror::Error;

use crate::numerics::{KernelSpec, NumericsError, SparseVector};

pub use gd::{gd_train, GdConfig};
pub use loss::{
    hinge_loss, pegasos_objective, quad_hinge_grad, quad_hinge_loss, quad_hinge_objective,
};
pub use newton::{newton_train, NewtonConfig};
pub use pegasos::{
    pegasos_step, pegasos_train, pegasos_train_observed, project_to_ball, PegasosConfig,
    StepNormalization,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyData,
    #[error("labels must be -1 or +1, found {0}")]
    BadLabel(f64),
    #[error("feature index {index} outside dimension {dim}")]
    BadFeature { index: usize, dim: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("objective diverged (non-finite) at iteration {iteration}; reduce the learning rate")]
    Diverged { iteration: usize },
    #[error(
        "newton training refused: {n} instances exceeds the cap of {cap} \
         (cost grows cubically with the support set; full-corpus runs do not finish in reasonable time)"
    )]
    TooLarge { n: usize, cap: usize },
    #[error("subset size k = {k} exceeds the {n} training instances")]
    SubsetTooLarge { k: usize, n: usize },
    #[error("{context}: {source}")]
    Numerics {
        context: String,
        #[source]
        source: NumericsError,
    },
}

/// Binary training problem: borrowed feature vectors with ±1 labels over a fixed dimension.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    xs: Vec<&'a SparseVector>,
    ys: Vec<f64>,
    dim: usize,
}

impl<'a> Problem<'a> {
    pub fn new(xs: Vec<&'a SparseVector>, ys: Vec<f64>, dim: usize) -> Result<Self, TrainError> {
        if xs.is_empty() {
            return Err(TrainError::EmptyData);
        }
        if xs.len() != ys.len() {
            return Err(TrainError::InvalidConfig(format!(
                "{} feature vectors but {} labels",
                xs.len(),
                ys.len()
            )));
        }
        if let Some(&y) = ys.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(TrainError::BadLabel(y));
        }
        if let Some(x) = xs.iter().find(|x| x.min_dim() > dim) {
            return Err(TrainError::BadFeature {
                index: x.min_dim() - 1,
                dim,
            });
        }
        Ok(Problem { xs, ys, dim })
    }

    pub fn from_pairs<I>(pairs: I, dim: usize) -> Result<Self, TrainError>
    where
        I: IntoIterator<Item = (&'a SparseVector, f64)>,
    {
        let (xs, ys) = pairs.into_iter().unzip();
        Self::new(xs, ys, dim)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn xs(&self) -> &[&'a SparseVector] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'a SparseVector, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }
}

/// Output of the linear optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTrainResult {
    pub w: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub wall_time: Duration,
}

/// Output of the kernel Newton optimizer.
///
/// `beta` covers every training instance and is exactly zero off `sv_indices`.
/// `support_vectors[k]` is the training vector at `sv_indices[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTrainResult {
    pub beta: Vec<f64>,
    pub sv_indices: Vec<usize>,
    pub kernel: KernelSpec,
    pub support_vectors: Vec<SparseVector>,
    pub converged: bool,
    pub iterations: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Gd,
    Newton,
    Pegasos,
}

impl Algorithm {
    /// Short name used in report rows.
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Gd => "GD",
            Algorithm::Newton => "NM",
            Algorithm::Pegasos => "SSG",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerConfig {
    Gd(GdConfig),
    Newton(NewtonConfig),
    Pegasos(PegasosConfig),
}

impl OptimizerConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            OptimizerConfig::Gd(_) => Algorithm::Gd,
            OptimizerConfig::Newton(_) => Algorithm::Newton,
            OptimizerConfig::Pegasos(_) => Algorithm::Pegasos,
        }
    }

    /// Returns a copy whose stochastic components are reseeded with `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            OptimizerConfig::Pegasos(c) => {
                OptimizerConfig::Pegasos(PegasosConfig { seed, ..c.clone() })
            }
            other => other.clone(),
        }
    }
}

impl From<GdConfig> for OptimizerConfig {
    fn from(c: GdConfig) -> Self {
        OptimizerConfig::Gd(c)
    }
}

impl From<NewtonConfig> for OptimizerConfig {
    fn from(c: NewtonConfig) -> Self {
        OptimizerConfig::Newton(c)
    }
}

impl From<PegasosConfig> for OptimizerConfig {
    fn from(c: PegasosConfig) -> Self {
        OptimizerConfig::Pegasos(c)
    }
}

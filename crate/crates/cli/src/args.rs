use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use primal_svm::corpus::FeatureMode;
use primal_svm::eval::{CvConfig, ExperimentSpec, Task};
use primal_svm::numerics::KernelSpec;
use primal_svm::optim::{
    GdConfig, NewtonConfig, OptimizerConfig, PegasosConfig, StepNormalization,
};

use crate::error::CliError;

/// Default for `--seed` in every command.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(
    name = "primal-svm",
    version,
    about = "Primal SVM training and evaluation on phrase sentiment data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus statistics of a labelled phrase file.
    Stats {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Train on a labelled phrase file and save the model.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict labels for a phrase file with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Write predictions here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated random-holdout cross-validation.
    Cv {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        cv: CvArgs,
        #[arg(long)]
        json: bool,
    },
    /// Cross-validate once per value of a parameter grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        cv: CvArgs,
        /// Parameter to vary: eta, iters, reg, lambda, k, T or sigma.
        #[arg(long)]
        param: String,
        /// `standard` for the built-in eta or lambda grid, or a comma-separated list of values.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic labelled phrase file.
    Synth {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        pos: usize,
        #[arg(long, default_value_t = 50)]
        neg: usize,
        #[arg(long, default_value_t = 200)]
        neutral: usize,
        #[arg(long, default_value_t = 3)]
        min_len: usize,
        #[arg(long, default_value_t = 12)]
        max_len: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgArg {
    Gd,
    Newton,
    Pegasos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Bin,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeaturesArg {
    Bin,
    Freq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Batch,
    Violators,
}

/// Data, task and optimizer settings shared by train, cv and sweep.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "pegasos")]
    pub alg: AlgArg,
    #[arg(long, value_enum, default_value = "bin")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "bin")]
    pub features: FeaturesArg,
    /// Seed for splits, subsampling and Pegasos batches.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Use a random subset of this many phrases.
    #[arg(long)]
    pub subsample: Option<usize>,

    /// GD learning rate.
    #[arg(long)]
    pub eta: Option<f64>,
    /// GD iterations, or Newton iterations per level.
    #[arg(long)]
    pub iters: Option<usize>,
    /// GD `reg * ‖w‖²` coefficient.
    #[arg(long)]
    pub gd_reg: Option<f64>,
    /// Pegasos or Newton regularization.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Pegasos batch size.
    #[arg(long)]
    pub k: Option<usize>,
    /// Pegasos iterations.
    #[arg(long = "T")]
    pub t: Option<usize>,
    /// Pegasos step divisor.
    #[arg(long, value_enum)]
    pub pegasos_norm: Option<NormArg>,
    /// Newton kernel.
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// RBF width.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Lift the Newton size cap.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[arg(long, default_value_t = 10)]
    pub rounds: usize,
    /// Fraction of phrases held out per round.
    #[arg(long, default_value_t = 0.1)]
    pub holdout: f64,
}

impl RunArgs {
    fn reject_foreign(&self) -> Result<(), CliError> {
        let given: [(&str, bool, &[AlgArg]); 10] = [
            ("--eta", self.eta.is_some(), &[AlgArg::Gd]),
            ("--gd-reg", self.gd_reg.is_some(), &[AlgArg::Gd]),
            (
                "--iters",
                self.iters.is_some(),
                &[AlgArg::Gd, AlgArg::Newton],
            ),
            (
                "--lambda",
                self.lambda.is_some(),
                &[AlgArg::Pegasos, AlgArg::Newton],
            ),
            ("--k", self.k.is_some(), &[AlgArg::Pegasos]),
            ("--T", self.t.is_some(), &[AlgArg::Pegasos]),
            (
                "--pegasos-norm",
                self.pegasos_norm.is_some(),
                &[AlgArg::Pegasos],
            ),
            ("--kernel", self.kernel.is_some(), &[AlgArg::Newton]),
            ("--sigma", self.sigma.is_some(), &[AlgArg::Newton]),
            ("--force", self.force, &[AlgArg::Newton]),
        ];
        for (flag, set, algs) in given {
            if set && !algs.contains(&self.alg) {
                return Err(CliError::Usage(format!(
                    "{flag} does not apply to --alg {}",
                    self.alg.to_possible_value().unwrap().get_name()
                )));
            }
        }
        if self.kernel == Some(KernelArg::Linear) && self.sigma.is_some() {
            return Err(CliError::Usage(
                "--sigma applies only to the rbf kernel".into(),
            ));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> Result<OptimizerConfig, CliError> {
        self.reject_foreign()?;
        Ok(match self.alg {
            AlgArg::Gd => {
                let d = GdConfig::default();
                GdConfig {
                    eta: self.eta.unwrap_or(d.eta),
                    max_iters: self.iters.unwrap_or(d.max_iters),
                    reg: self.gd_reg.unwrap_or(d.reg),
                    ..d
                }
                .into()
            }
            AlgArg::Newton => {
                let d = NewtonConfig::default();
                let kernel = match (self.kernel, self.sigma) {
                    (Some(KernelArg::Linear), _) => KernelSpec::Linear,
                    (_, Some(sigma)) => KernelSpec::Rbf { sigma },
                    _ => d.kernel,
                };
                NewtonConfig {
                    lambda: self.lambda.unwrap_or(d.lambda),
                    kernel,
                    max_newton_iters: self.iters.unwrap_or(d.max_newton_iters),
                    max_n: if self.force { usize::MAX } else { d.max_n },
                    ..d
                }
                .into()
            }
            AlgArg::Pegasos => {
                let d = PegasosConfig::default();
                PegasosConfig {
                    lambda: self.lambda.unwrap_or(d.lambda),
                    k: self.k.unwrap_or(d.k),
                    iters: self.t.unwrap_or(d.iters),
                    seed: self.seed,
                    normalization: match self.pegasos_norm {
                        Some(NormArg::Violators) => StepNormalization::Violators,
                        _ => StepNormalization::Batch,
                    },
                    ..d
                }
                .into()
            }
        })
    }

    pub fn spec(&self) -> Result<ExperimentSpec, CliError> {
        Ok(ExperimentSpec {
            optimizer: self.optimizer()?,
            task: match self.mode {
                ModeArg::Bin => Task::Binary,
                ModeArg::Multi => Task::Multi,
            },
            features: match self.features {
                FeaturesArg::Bin => FeatureMode::Binary,
                FeaturesArg::Freq => FeatureMode::Frequency,
            },
        })
    }
}

impl CvArgs {
    pub fn config(&self, seed: u64, threads: usize) -> CvConfig {
        CvConfig {
            rounds: self.rounds,
            holdout_fraction: self.holdout,
            seed,
            threads,
        }
    }
}

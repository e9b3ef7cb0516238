//! Repeated random-holdout cross-validation and parameter sweeps.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{featurize_all, CorpusError, Document, FeatureMode, Instance, Vocabulary};
use crate::optim::{OptimizerConfig, Problem, TrainError};
use crate::svm::{train_binary, train_multiclass, Classifier, SvmError};

/// Learning rates swept for gradient descent.
pub const ETA_GRID: [f64; 15] = [
    0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0,
];
/// Regularization values swept for Pegasos.
pub const LAMBDA_GRID: [f64; 5] = [0.001, 0.01, 0.1, 1.0, 10.0];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error("length mismatch: {0} predictions vs {1} truths")]
    LengthMismatch(usize, usize),
    #[error("{0}")]
    Invalid(String),
}

/// Binary (±1) or five-way ordinal classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Task {
    #[default]
    Binary,
    Multi,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Binary => "bin",
            Task::Multi => "multi",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bin" | "binary" => Ok(Task::Binary),
            "multi" | "multiclass" => Ok(Task::Multi),
            other => Err(EvalError::Invalid(format!(
                "unknown mode `{other}` (expected bin or multi)"
            ))),
        }
    }
}

/// What to train: optimizer settings, task and feature representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub optimizer: OptimizerConfig,
    pub task: Task,
    pub features: FeatureMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub rounds: usize,
    pub holdout_fraction: f64,
    pub seed: u64,
    /// Worker threads for rounds and nested training work; 0 and 1 both run sequentially.
    pub threads: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            rounds: 10,
            holdout_fraction: 0.1,
            seed: 0,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundResult {
    pub accuracy: f64,
    pub train_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub per_round: Vec<RoundResult>,
    pub mean_accuracy: f64,
    pub mean_time: Duration,
    pub spec: ExperimentSpec,
    pub config: CvConfig,
}

/// Seeded permutation of `0..n` split into `(train, test)`; the test part holds the first
/// `max(1, floor(n * holdout_fraction))` indices.
pub fn split_round(
    n: usize,
    round_seed: u64,
    holdout_fraction: f64,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if n < 2 {
        return Err(EvalError::Invalid(format!(
            "need at least 2 instances to split, have {n}"
        )));
    }
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(EvalError::Invalid(format!(
            "holdout fraction must lie in (0, 1), got {holdout_fraction}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(round_seed));
    let n_test = ((n as f64 * holdout_fraction).floor() as usize).clamp(1, n - 1);
    let train = perm.split_off(n_test);
    Ok((train, perm))
}

pub fn accuracy<T: PartialEq>(predictions: &[T], truths: &[T]) -> Result<f64, EvalError> {
    if predictions.len() != truths.len() {
        return Err(EvalError::LengthMismatch(predictions.len(), truths.len()));
    }
    if predictions.is_empty() {
        return Err(EvalError::Invalid("accuracy of an empty set".into()));
    }
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Data that can be split into featurized train/test parts.
pub trait CvData: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Returns `(train, test, dim)`.
    fn materialize(
        &self,
        train: &[usize],
        test: &[usize],
        mode: FeatureMode,
    ) -> Result<(Vec<Instance>, Vec<Instance>, usize), EvalError>;
}

/// Tokenized phrases; each split builds its vocabulary from the train part only.
impl CvData for [Document] {
    fn len(&self) -> usize {
        <[Document]>::len(self)
    }

    fn materialize(
        &self,
        train: &[usize],
        test: &[usize],
        mode: FeatureMode,
    ) -> Result<(Vec<Instance>, Vec<Instance>, usize), EvalError> {
        let pick = |idx: &[usize]| idx.iter().map(|&i| self[i].clone()).collect::<Vec<_>>();
        let (train_docs, test_docs) = (pick(train), pick(test));
        let vocab = Vocabulary::from_tokens(train_docs.iter().map(|d| &d.tokens))?;
        Ok((
            featurize_all(&train_docs, &vocab, mode)?,
            featurize_all(&test_docs, &vocab, mode)?,
            vocab.len(),
        ))
    }
}

/// Instances already featurized over a fixed dimension; the feature mode is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizedSet {
    pub instances: Vec<Instance>,
    pub dim: usize,
}

impl CvData for FeaturizedSet {
    fn len(&self) -> usize {
        self.instances.len()
    }

    fn materialize(
        &self,
        train: &[usize],
        test: &[usize],
        _mode: FeatureMode,
    ) -> Result<(Vec<Instance>, Vec<Instance>, usize), EvalError> {
        let pick = |idx: &[usize]| {
            idx.iter()
                .map(|&i| self.instances[i].clone())
                .collect::<Vec<_>>()
        };
        Ok((pick(train), pick(test), self.dim))
    }
}

/// Trains a classifier for `spec` on `train`. Stochastic parts use `seed`.
pub fn fit(
    train: &[Instance],
    dim: usize,
    spec: &ExperimentSpec,
    seed: u64,
) -> Result<Classifier, EvalError> {
    let optimizer = spec.optimizer.with_seed(seed);
    Ok(match spec.task {
        Task::Binary => {
            let problem = Problem::from_pairs(
                train.iter().map(|i| (&i.features, i.binary_label as f64)),
                dim,
            )?;
            Classifier::Binary(train_binary(&problem, &optimizer)?)
        }
        Task::Multi => Classifier::Multi(train_multiclass(train, dim, &optimizer, seed)?),
    })
}

/// `k` distinct indices drawn uniformly from `0..n`, returned in increasing order.
pub fn subsample(n: usize, k: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    if k == 0 || k > n {
        return Err(EvalError::Invalid(format!(
            "subsample size {k} must lie in 1..={n}"
        )));
    }
    let mut idx = rand::seq::index::sample(&mut ChaCha8Rng::seed_from_u64(seed), n, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Label the classifier is scored against for `task`.
pub fn truth(inst: &Instance, task: Task) -> i8 {
    match task {
        Task::Binary => inst.binary_label,
        Task::Multi => inst.sentiment as i8,
    }
}

pub fn score(model: &Classifier, test: &[Instance], task: Task) -> Result<f64, EvalError> {
    let preds: Vec<i8> = test.iter().map(|i| model.predict(&i.features)).collect();
    let truths: Vec<i8> = test.iter().map(|i| truth(i, task)).collect();
    accuracy(&preds, &truths)
}

fn run_round<D: CvData + ?Sized>(
    data: &D,
    spec: &ExperimentSpec,
    cfg: &CvConfig,
    round: usize,
) -> Result<RoundResult, EvalError> {
    let round_seed = cfg.seed.wrapping_add(round as u64);
    let (train_idx, test_idx) = split_round(data.len(), round_seed, cfg.holdout_fraction)?;
    let (train, test, dim) = data.materialize(&train_idx, &test_idx, spec.features)?;
    let start = Instant::now();
    let model = fit(&train, dim, spec, round_seed)?;
    let train_time = start.elapsed();
    Ok(RoundResult {
        accuracy: score(&model, &test, spec.task)?,
        train_time,
    })
}

fn check_newton_cap(n: usize, spec: &ExperimentSpec, fraction: f64) -> Result<(), EvalError> {
    if let OptimizerConfig::Newton(c) = &spec.optimizer {
        let n_test = ((n as f64 * fraction).floor() as usize).clamp(1, n.saturating_sub(1).max(1));
        let n_train = n - n_test;
        if n_train > c.max_n {
            return Err(TrainError::TooLarge {
                n: n_train,
                cap: c.max_n,
            }
            .into());
        }
    }
    Ok(())
}

/// Runs `cfg.rounds` independent holdout rounds. Round `r` uses seed `cfg.seed + r` for
/// its split and its optimizer; only the training call is timed.
pub fn cross_validate<D: CvData + ?Sized>(
    data: &D,
    spec: &ExperimentSpec,
    cfg: &CvConfig,
) -> Result<CvReport, EvalError> {
    if cfg.rounds == 0 {
        return Err(EvalError::Invalid("rounds must be at least 1".into()));
    }
    if data.len() < 2 {
        return Err(EvalError::Invalid(format!(
            "need at least 2 instances, have {}",
            data.len()
        )));
    }
    check_newton_cap(data.len(), spec, cfg.holdout_fraction)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .map_err(|e| EvalError::Invalid(format!("thread pool: {e}")))?;
    let per_round: Vec<RoundResult> = pool.install(|| {
        (0..cfg.rounds)
            .into_par_iter()
            .map(|r| run_round(data, spec, cfg, r))
            .collect::<Result<_, _>>()
    })?;
    let k = per_round.len() as f64;
    let mean_accuracy = per_round.iter().map(|r| r.accuracy).sum::<f64>() / k;
    let mean_time =
        per_round.iter().map(|r| r.train_time).sum::<Duration>() / per_round.len() as u32;
    Ok(CvReport {
        per_round,
        mean_accuracy,
        mean_time,
        spec: spec.clone(),
        config: cfg.clone(),
    })
}

/// Parameters a sweep can override.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Eta,
    Iters,
    Reg,
    Lambda,
    K,
    T,
    Sigma,
}

impl SweepParam {
    pub const NAMES: [&'static str; 7] = ["eta", "iters", "reg", "lambda", "k", "T", "sigma"];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::Iters => "iters",
            SweepParam::Reg => "reg",
            SweepParam::Lambda => "lambda",
            SweepParam::K => "k",
            SweepParam::T => "T",
            SweepParam::Sigma => "sigma",
        }
    }

    /// Built-in grid for this parameter, where one exists.
    pub fn standard_grid(self) -> Option<Vec<f64>> {
        match self {
            SweepParam::Eta => Some(ETA_GRID.to_vec()),
            SweepParam::Lambda => Some(LAMBDA_GRID.to_vec()),
            _ => None,
        }
    }

    /// Copy of `spec` with this parameter set to `value`.
    pub fn apply(self, spec: &ExperimentSpec, value: f64) -> Result<ExperimentSpec, EvalError> {
        let as_count = || -> Result<usize, EvalError> {
            if value >= 1.0 && value.fract() == 0.0 && value.is_finite() {
                Ok(value as usize)
            } else {
                Err(EvalError::Invalid(format!(
                    "{} must be a positive integer, got {value}",
                    self.name()
                )))
            }
        };
        let mut out = spec.clone();
        match (&mut out.optimizer, self) {
            (OptimizerConfig::Gd(c), SweepParam::Eta) => c.eta = value,
            (OptimizerConfig::Gd(c), SweepParam::Iters) => c.max_iters = as_count()?,
            (OptimizerConfig::Gd(c), SweepParam::Reg) => c.reg = value,
            (OptimizerConfig::Pegasos(c), SweepParam::Lambda) => c.lambda = value,
            (OptimizerConfig::Pegasos(c), SweepParam::K) => c.k = as_count()?,
            (OptimizerConfig::Pegasos(c), SweepParam::T) => c.iters = as_count()?,
            (OptimizerConfig::Newton(c), SweepParam::Lambda) => c.lambda = value,
            (OptimizerConfig::Newton(c), SweepParam::Iters) => c.max_newton_iters = as_count()?,
            (OptimizerConfig::Newton(c), SweepParam::Sigma) => {
                c.kernel = crate::numerics::KernelSpec::Rbf { sigma: value }
            }
            (opt, p) => {
                return Err(EvalError::Invalid(format!(
                    "parameter `{}` does not apply to {}",
                    p.name(),
                    opt.algorithm()
                )))
            }
        }
        Ok(out)
    }
}

impl FromStr for SweepParam {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "eta" => SweepParam::Eta,
            "iters" => SweepParam::Iters,
            "reg" | "gd-reg" => SweepParam::Reg,
            "lambda" => SweepParam::Lambda,
            "k" => SweepParam::K,
            "T" | "t" => SweepParam::T,
            "sigma" => SweepParam::Sigma,
            other => {
                return Err(EvalError::Invalid(format!(
                    "unknown parameter `{other}`; valid: {}",
                    SweepParam::NAMES.join(", ")
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl SweepGrid {
    pub fn new(param: SweepParam, values: Vec<f64>) -> Result<Self, EvalError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::Invalid(
                "grid values must be a non-empty list of finite numbers".into(),
            ));
        }
        Ok(SweepGrid { param, values })
    }
}

#[derive(Debug)]
pub struct SweepCell {
    pub value: f64,
    pub result: Result<CvReport, EvalError>,
}

#[derive(Debug)]
pub struct SweepReport {
    pub param: SweepParam,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    /// Grid value with the highest mean accuracy; the earliest wins ties.
    pub fn best(&self) -> Option<(f64, f64)> {
        self.cells
            .iter()
            .filter_map(|c| c.result.as_ref().ok().map(|r| (c.value, r.mean_accuracy)))
            .fold(None, |best, (v, a)| match best {
                Some((_, ba)) if ba >= a => best,
                _ => Some((v, a)),
            })
    }
}

/// One cross-validation per grid value, in grid order. Failing cells are recorded and the
/// sweep moves on.
pub fn sweep<D: CvData + ?Sized>(
    data: &D,
    base: &ExperimentSpec,
    grid: &SweepGrid,
    cfg: &CvConfig,
) -> SweepReport {
    let cells = grid
        .values
        .iter()
        .map(|&value| SweepCell {
            value,
            result: grid
                .param
                .apply(base, value)
                .and_then(|spec| cross_validate(data, &spec, cfg)),
        })
        .collect();
    SweepReport {
        param: grid.param,
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{GdConfig, NewtonConfig, PegasosConfig};

    #[test]
    fn split_sizes() {
        let (tr, te) = split_round(10, 1, 0.1).unwrap();
        assert_eq!((tr.len(), te.len()), (9, 1));
        let (tr, te) = split_round(5, 1, 0.1).unwrap();
        assert_eq!((tr.len(), te.len()), (4, 1));
        assert_eq!(
            split_round(10, 4, 0.1).unwrap(),
            split_round(10, 4, 0.1).unwrap()
        );
        assert!(split_round(1, 0, 0.1).is_err());
        assert!(split_round(10, 0, 1.0).is_err());
        assert!(split_round(10, 0, 0.0).is_err());
    }

    #[test]
    fn subsample_is_sorted_and_distinct() {
        let idx = subsample(100, 10, 3).unwrap();
        assert_eq!(idx.len(), 10);
        assert!(idx.windows(2).all(|w| w[0] < w[1]) && idx[9] < 100);
        assert_eq!(idx, subsample(100, 10, 3).unwrap());
        assert_eq!(subsample(5, 5, 0).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(subsample(5, 6, 0).is_err() && subsample(5, 0, 0).is_err());
    }

    #[test]
    fn split_is_a_partition() {
        for seed in 0..50 {
            let (mut tr, te) = split_round(37, seed, 0.25).unwrap();
            assert_eq!(te.len(), 9);
            tr.extend(&te);
            tr.sort_unstable();
            assert_eq!(tr, (0..37).collect::<Vec<_>>());
        }
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 0]).unwrap(), 0.75);
        assert_eq!(accuracy(&[1, 1], &[1, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert!(matches!(
            accuracy(&[1], &[1, 2]),
            Err(EvalError::LengthMismatch(1, 2))
        ));
        assert!(accuracy::<i8>(&[], &[]).is_err());
    }

    #[test]
    fn sweep_param_parsing_and_application() {
        assert_eq!("eta".parse::<SweepParam>().unwrap(), SweepParam::Eta);
        let err = "gamma".parse::<SweepParam>().unwrap_err().to_string();
        assert!(err.contains("eta") && err.contains("lambda"));
        assert_eq!(SweepParam::Eta.standard_grid().unwrap().len(), 15);
        assert_eq!(
            SweepParam::Lambda.standard_grid().unwrap(),
            vec![0.001, 0.01, 0.1, 1.0, 10.0]
        );

        let gd = ExperimentSpec {
            optimizer: GdConfig::default().into(),
            task: Task::Binary,
            features: FeatureMode::Binary,
        };
        match SweepParam::Eta.apply(&gd, 0.3).unwrap().optimizer {
            OptimizerConfig::Gd(c) => assert_eq!(c.eta, 0.3),
            _ => unreachable!(),
        }
        assert!(SweepParam::Lambda.apply(&gd, 0.3).is_err());
        let peg = ExperimentSpec {
            optimizer: PegasosConfig::default().into(),
            ..gd.clone()
        };
        assert!(SweepParam::K.apply(&peg, 2.5).is_err());
        match SweepParam::T.apply(&peg, 40.0).unwrap().optimizer {
            OptimizerConfig::Pegasos(c) => assert_eq!(c.iters, 40),
            _ => unreachable!(),
        }
        let nm = ExperimentSpec {
            optimizer: NewtonConfig::default().into(),
            ..gd
        };
        assert!(SweepParam::Sigma.apply(&nm, 2.0).is_ok());
    }

    #[test]
    fn grid_validation() {
        assert!(SweepGrid::new(SweepParam::Eta, vec![]).is_err());
        assert!(SweepGrid::new(SweepParam::Eta, vec![f64::NAN]).is_err());
    }

    #[test]
    fn task_parsing() {
        assert_eq!("bin".parse::<Task>().unwrap(), Task::Binary);
        assert_eq!("multi".parse::<Task>().unwrap(), Task::Multi);
        assert!("tri".parse::<Task>().is_err());
    }
}

//! Binary and ordinal multiclass SVM models built on the optimizers.

mod multiclass;
mod persist;

use thiserror::Error;

use crate::numerics::{KernelSpec, SparseVector};
use crate::optim::{
    gd_train, newton_train, pegasos_train, KernelTrainResult, OptimizerConfig, Problem, TrainError,
};

pub use multiclass::{
    build_pattern_table, predict_multiclass, train_multiclass, MulticlassSvm, PatternTable,
    SignPattern, N_PAIRS,
};
pub use persist::{
    load_model, read_model, save_model, write_model, ModelFileError, SavedModel, FORMAT_VERSION,
};

#[derive(Debug, Error)]
pub enum SvmError {
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("pair ({lo},{hi}) has no training instances labelled {missing}")]
    MissingClass { lo: u8, hi: u8, missing: u8 },
    #[error("no training instances")]
    Empty,
}

/// A retained training vector with its expansion coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    /// Position in the training set the model was fitted on.
    pub index: usize,
    pub beta: f64,
    pub x: SparseVector,
}

/// Kernel expansion `f(x) = Σ β_i K(x_i, x)` over the support vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    pub kernel: KernelSpec,
    pub n_train: usize,
    pub support: Vec<SupportVector>,
}

impl From<KernelTrainResult> for KernelModel {
    fn from(r: KernelTrainResult) -> Self {
        let support = r
            .sv_indices
            .iter()
            .zip(r.support_vectors)
            .map(|(&index, x)| SupportVector {
                index,
                beta: r.beta[index],
                x,
            })
            .collect();
        KernelModel {
            kernel: r.kernel,
            n_train: r.beta.len(),
            support,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BinarySvm {
    Linear { w: Vec<f64>, b: f64 },
    Kernel(KernelModel),
}

impl BinarySvm {
    pub fn zero(dim: usize) -> Self {
        BinarySvm::Linear {
            w: vec![0.0; dim],
            b: 0.0,
        }
    }
}

/// Bias from the margin violators `{i : y_i (w·x_i) < 1}`: the mean of `y_i - w·x_i`.
/// Zero when every margin is at least one.
pub fn fit_bias(w: &[f64], data: &Problem<'_>) -> f64 {
    let (sum, count) = data
        .iter()
        .map(|(x, y)| (x.dot_dense(w), y))
        .filter(|&(f, y)| y * f < 1.0)
        .fold((0.0, 0usize), |(s, c), (f, y)| (s + (y - f), c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Signed score; features beyond the model dimension contribute nothing.
pub fn decision_value(model: &BinarySvm, x: &SparseVector) -> f64 {
    match model {
        BinarySvm::Linear { w, b } => {
            x.entries()
                .iter()
                .filter(|&&(i, _)| i < w.len())
                .map(|&(i, v)| v * w[i])
                .sum::<f64>()
                + b
        }
        BinarySvm::Kernel(k) => k
            .support
            .iter()
            .map(|s| s.beta * k.kernel.eval(&s.x, x))
            .sum(),
    }
}

/// `+1` iff the decision value is non-negative.
pub fn predict_binary(model: &BinarySvm, x: &SparseVector) -> i8 {
    sign(decision_value(model, x))
}

#[inline]
pub(crate) fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// Trains with the chosen optimizer; linear optimizers get a fitted bias.
pub fn train_binary(data: &Problem<'_>, cfg: &OptimizerConfig) -> Result<BinarySvm, TrainError> {
    let w = match cfg {
        OptimizerConfig::Gd(c) => gd_train(data, c)?.w,
        OptimizerConfig::Pegasos(c) => pegasos_train(data, c)?.w,
        OptimizerConfig::Newton(c) => return Ok(BinarySvm::Kernel(newton_train(data, c)?.into())),
    };
    let b = fit_bias(&w, data);
    Ok(BinarySvm::Linear { w, b })
}

/// A trained classifier of either task.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Classifier {
    Binary(BinarySvm),
    Multi(MulticlassSvm),
}

impl Classifier {
    /// Binary models answer in {-1, +1}; multiclass models in {0..4}.
    pub fn predict(&self, x: &SparseVector) -> i8 {
        match self {
            Classifier::Binary(m) => predict_binary(m, x),
            Classifier::Multi(m) => predict_multiclass(m, x) as i8,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{NewtonConfig, PegasosConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sv(e: &[(usize, f64)]) -> SparseVector {
        SparseVector::new(e.to_vec()).unwrap()
    }

    #[test]
    fn fit_bias_examples() {
        let far = sv(&[(0, 2.0)]);
        let p = Problem::from_pairs([(&far, 1.0)], 1).unwrap();
        assert_eq!(fit_bias(&[1.0], &p), 0.0);

        let x = sv(&[(0, 0.4)]);
        let p = Problem::from_pairs([(&x, 1.0)], 1).unwrap();
        assert!((fit_bias(&[1.0], &p) - 0.6).abs() < 1e-15);

        let neg = sv(&[(0, -0.4)]);
        let p = Problem::from_pairs([(&x, 1.0), (&neg, -1.0)], 1).unwrap();
        assert_eq!(fit_bias(&[1.0], &p), 0.0);
    }

    #[test]
    fn fit_bias_symmetric_pairs_are_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut xs = Vec::new();
        for _ in 0..20 {
            let d: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            xs.push((SparseVector::from_dense(&d), 1.0));
            xs.push((SparseVector::from_dense(&neg), -1.0));
        }
        let p = Problem::from_pairs(xs.iter().map(|(x, y)| (x, *y)), 6).unwrap();
        assert!(fit_bias(&w, &p).abs() < 1e-12);
    }

    #[test]
    fn decision_values() {
        let m = BinarySvm::Linear {
            w: vec![1.0, -1.0],
            b: 0.5,
        };
        assert_eq!(decision_value(&m, &sv(&[(0, 1.0)])), 1.5);
        // unseen feature index beyond w is ignored
        assert_eq!(decision_value(&m, &sv(&[(0, 1.0), (7, 3.0)])), 1.5);

        let x0 = sv(&[(0, 1.0)]);
        let p = Problem::from_pairs([(&x0, 1.0)], 1).unwrap();
        let cfg = OptimizerConfig::Newton(NewtonConfig {
            lambda: 1.0,
            kernel: KernelSpec::Linear,
            ..Default::default()
        });
        let k = train_binary(&p, &cfg).unwrap();
        assert_eq!(decision_value(&k, &x0), 0.5);

        let zero = BinarySvm::zero(3);
        assert_eq!(decision_value(&zero, &sv(&[(1, 4.0)])), 0.0);
    }

    #[test]
    fn predict_binary_boundary() {
        assert_eq!(sign(0.0), 1);
        assert_eq!(sign(-0.001), -1);
        assert_eq!(sign(3.2), 1);
        assert_eq!(predict_binary(&BinarySvm::zero(2), &sv(&[(0, 1.0)])), 1);
    }

    #[test]
    fn predict_agrees_with_decision_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = BinarySvm::Linear {
            w: (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            b: 0.1,
        };
        for _ in 0..1000 {
            let d: Vec<f64> = (0..8)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        rng.gen_range(-2.0..2.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let x = SparseVector::from_dense(&d);
            let v = decision_value(&m, &x);
            assert_eq!(predict_binary(&m, &x), if v >= 0.0 { 1 } else { -1 });
        }
    }

    #[test]
    fn train_binary_dispatches() {
        let a = sv(&[(0, 1.0)]);
        let b = sv(&[(1, 1.0)]);
        let p = Problem::from_pairs([(&a, 1.0), (&b, -1.0)], 2).unwrap();
        let cfg = OptimizerConfig::Pegasos(PegasosConfig {
            lambda: 0.1,
            k: 2,
            iters: 50,
            ..Default::default()
        });
        let m = train_binary(&p, &cfg).unwrap();
        assert!(matches!(m, BinarySvm::Linear { .. }));
        assert_eq!(predict_binary(&m, &a), 1);
        assert_eq!(predict_binary(&m, &b), -1);
    }
}

use std::time::Instant;

use crate::numerics::{gram, solve_spd, GramMatrix, KernelSpec};

use super::{KernelTrainResult, Problem, TrainError};

/// Primal Newton on the kernel expansion `f(x) = Σ β_i K(x_i, x)` with quadratic hinge loss.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    pub lambda: f64,
    pub kernel: KernelSpec,
    /// Problems above this size first solve their first half to seed the working set.
    pub base_size: usize,
    pub max_newton_iters: usize,
    /// Hard cap on the training set size.
    pub max_n: usize,
    /// When false the working set always starts from every index.
    pub recursive: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            lambda: 1.0,
            kernel: KernelSpec::default(),
            base_size: 1000,
            max_newton_iters: 5,
            max_n: 4000,
            recursive: true,
        }
    }
}

impl NewtonConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(TrainError::InvalidConfig(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.base_size == 0 || self.max_newton_iters == 0 {
            return Err(TrainError::InvalidConfig(
                "base_size and max_newton_iters must be at least 1".into(),
            ));
        }
        self.kernel
            .validate()
            .map_err(|source| TrainError::Numerics {
                context: "kernel".into(),
                source,
            })
    }
}

struct Level {
    beta: Vec<f64>,
    sv: Vec<usize>,
    converged: bool,
    iterations: usize,
}

/// Indices `i < n` with `y_i (Kβ)_i < 1`, where β is supported on `sv`.
fn margin_violators(k: &GramMatrix, y: &[f64], n: usize, sv: &[usize], beta: &[f64]) -> Vec<usize> {
    (0..n)
        .filter(|&i| {
            let row = k.row(i);
            let f: f64 = sv.iter().map(|&j| row[j] * beta[j]).sum();
            y[i] * f < 1.0
        })
        .collect()
}

/// Solves the prefix problem on instances `0..n`.
fn solve_prefix(
    k: &GramMatrix,
    y: &[f64],
    n: usize,
    cfg: &NewtonConfig,
) -> Result<Level, TrainError> {
    let mut sv: Vec<usize> = if cfg.recursive && n > cfg.base_size {
        let half = solve_prefix(k, y, n / 2, cfg)?;
        (0..half.beta.len())
            .filter(|&i| half.beta[i] != 0.0)
            .collect()
    } else {
        (0..n).collect()
    };
    let mut beta = vec![0.0; n];
    for iteration in 1..=cfg.max_newton_iters {
        beta.iter_mut().for_each(|b| *b = 0.0);
        if !sv.is_empty() {
            let system = k.principal(&sv, cfg.lambda);
            let rhs: Vec<f64> = sv.iter().map(|&i| y[i]).collect();
            let sol = solve_spd(&system, &rhs).map_err(|source| TrainError::Numerics {
                context: format!(
                    "newton step {iteration} on {n} instances ({} in working set)",
                    sv.len()
                ),
                source,
            })?;
            for (&i, b) in sv.iter().zip(sol) {
                beta[i] = b;
            }
        }
        let next = margin_violators(k, y, n, &sv, &beta);
        if next == sv {
            return Ok(Level {
                beta,
                sv,
                converged: true,
                iterations: iteration,
            });
        }
        if iteration == cfg.max_newton_iters {
            return Ok(Level {
                beta,
                sv,
                converged: false,
                iterations: iteration,
            });
        }
        sv = next;
    }
    unreachable!("max_newton_iters >= 1")
}

/// Trains with working-set Newton iterations. The Gram matrix is built once; recursive
/// warm starts reuse its leading principal blocks.
pub fn newton_train(
    data: &Problem<'_>,
    cfg: &NewtonConfig,
) -> Result<KernelTrainResult, TrainError> {
    cfg.validate()?;
    let n = data.len();
    if n > cfg.max_n {
        return Err(TrainError::TooLarge { n, cap: cfg.max_n });
    }
    let start = Instant::now();
    let k = gram(cfg.kernel, data.xs());
    let level = solve_prefix(&k, data.ys(), n, cfg)?;
    let support_vectors = level.sv.iter().map(|&i| data.xs()[i].clone()).collect();
    Ok(KernelTrainResult {
        beta: level.beta,
        sv_indices: level.sv,
        kernel: cfg.kernel,
        support_vectors,
        converged: level.converged,
        iterations: level.iterations,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SparseVector;

    fn linear(lambda: f64) -> NewtonConfig {
        NewtonConfig {
            lambda,
            kernel: KernelSpec::Linear,
            ..NewtonConfig::default()
        }
    }

    #[test]
    fn single_point_linear_kernel() {
        let x = SparseVector::new(vec![(0, 1.0)]).unwrap();
        let p = Problem::from_pairs([(&x, 1.0)], 1).unwrap();
        let r = newton_train(&p, &linear(1.0)).unwrap();
        // (1 + 1) β = 1
        assert_eq!(r.beta, vec![0.5]);
        assert_eq!(r.sv_indices, vec![0]);
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.support_vectors, vec![x.clone()]);
    }

    #[test]
    fn duplicate_points_opposite_labels() {
        let x = SparseVector::new(vec![(0, 1.0), (2, 1.0)]).unwrap();
        let p = Problem::from_pairs([(&x, 1.0), (&x, -1.0)], 3).unwrap();
        let r = newton_train(&p, &linear(1.0)).unwrap();
        // [[3,2],[2,3]] β = (1,-1) → β = (1,-1)
        assert!((r.beta[0] - 1.0).abs() < 1e-12);
        assert!((r.beta[1] + 1.0).abs() < 1e-12);
        assert!(r.beta.iter().all(|b| b.is_finite()));
    }

    #[test]
    fn refuses_above_cap() {
        let x = SparseVector::new(vec![(0, 1.0)]).unwrap();
        let p = Problem::from_pairs((0..5).map(|i| (&x, if i % 2 == 0 { 1.0 } else { -1.0 })), 1)
            .unwrap();
        let cfg = NewtonConfig {
            max_n: 4,
            ..linear(1.0)
        };
        assert!(matches!(
            newton_train(&p, &cfg),
            Err(TrainError::TooLarge { n: 5, cap: 4 })
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let x = SparseVector::new(vec![(0, 1.0)]).unwrap();
        let p = Problem::from_pairs([(&x, 1.0)], 1).unwrap();
        assert!(newton_train(&p, &linear(0.0)).is_err());
        let bad_sigma = NewtonConfig {
            kernel: KernelSpec::Rbf { sigma: 0.0 },
            ..NewtonConfig::default()
        };
        assert!(newton_train(&p, &bad_sigma).is_err());
    }

    #[test]
    fn well_separated_points_leave_working_set() {
        // Far-out point gets margin >= 1 after the first solve and drops out.
        let a = SparseVector::new(vec![(0, 1.0)]).unwrap();
        let b = SparseVector::new(vec![(0, 10.0)]).unwrap();
        let p = Problem::from_pairs([(&a, 1.0), (&b, 1.0)], 1).unwrap();
        let r = newton_train(&p, &linear(0.01)).unwrap();
        assert!(r.converged);
        for (i, &b) in r.beta.iter().enumerate() {
            if !r.sv_indices.contains(&i) {
                assert_eq!(b, 0.0);
            }
        }
    }
}

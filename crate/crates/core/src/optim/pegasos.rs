use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numerics::{norm, SparseVector};

use super::loss::pegasos_objective;
use super::{LinearTrainResult, Problem, TrainError};

/// Divisor applied to the summed `y·x` of the margin violators in a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepNormalization {
    /// Divide by the batch size `k`: an unbiased subgradient of `λ/2 ‖w‖² + mean hinge`.
    #[default]
    Batch,
    /// Divide by the number of violators `|M|`. Its fixed point is not the minimizer of
    /// the regularized hinge objective once some batch members satisfy their margin.
    Violators,
}

/// Pegasos stochastic subgradient with projection onto the `1/√λ` ball.
#[derive(Debug, Clone, PartialEq)]
pub struct PegasosConfig {
    pub lambda: f64,
    /// Instances drawn per iteration, without replacement.
    pub k: usize,
    /// Number of iterations.
    pub iters: usize,
    pub seed: u64,
    /// Record the full-data objective after every iteration (costs one pass per step).
    pub trace: bool,
    pub normalization: StepNormalization,
}

impl Default for PegasosConfig {
    fn default() -> Self {
        PegasosConfig {
            lambda: 1e-3,
            k: 100,
            iters: 5000,
            seed: 0,
            trace: false,
            normalization: StepNormalization::Batch,
        }
    }
}

impl PegasosConfig {
    fn validate(&self, n: usize) -> Result<(), TrainError> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(TrainError::InvalidConfig(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.k == 0 || self.iters == 0 {
            return Err(TrainError::InvalidConfig(
                "k and T must be at least 1".into(),
            ));
        }
        if self.k > n {
            return Err(TrainError::SubsetTooLarge { k: self.k, n });
        }
        Ok(())
    }
}

/// Scales `w` onto the ball of radius `1/√λ` when it lies outside.
pub fn project_to_ball(w: &mut [f64], lambda: f64) {
    let len = norm(w);
    if len == 0.0 {
        return;
    }
    let scale = (1.0 / (lambda.sqrt() * len)).min(1.0);
    if scale < 1.0 {
        w.iter_mut().for_each(|v| *v *= scale);
    }
}

/// In-place step; `batch` yields `(x, y)` pairs.
fn step_in_place<'a, I>(
    w: &mut [f64],
    batch: I,
    t: usize,
    lambda: f64,
    norm: StepNormalization,
    active: &mut Vec<(&'a SparseVector, f64)>,
) where
    I: IntoIterator<Item = (&'a SparseVector, f64)>,
{
    active.clear();
    let mut k = 0;
    active.extend(
        batch
            .into_iter()
            .inspect(|_| k += 1)
            .filter(|(x, y)| 1.0 - y * x.dot_dense(w) > 0.0),
    );
    // w - (1/λt)(λw - g) = (1 - 1/t) w + g/(λt), g = normalized sum of y·x over violators
    let eta = 1.0 / (lambda * t as f64);
    let shrink = 1.0 - 1.0 / t as f64;
    w.iter_mut().for_each(|v| *v *= shrink);
    if !active.is_empty() {
        let divisor = match norm {
            StepNormalization::Batch => k,
            StepNormalization::Violators => active.len(),
        };
        let scale = eta / divisor as f64;
        for &(x, y) in active.iter() {
            x.axpy_into(scale * y, w);
        }
    }
    project_to_ball(w, lambda);
}

/// One Pegasos iteration: subgradient step over the margin-violating part of `batch`,
/// followed by projection. An empty violating set contributes only the `λw` term.
pub fn pegasos_step(
    w: &[f64],
    batch: &[(&SparseVector, f64)],
    t: usize,
    lambda: f64,
    norm: StepNormalization,
) -> Vec<f64> {
    assert!(t >= 1, "iterations are 1-based");
    let mut out = w.to_vec();
    let mut active = Vec::with_capacity(batch.len());
    step_in_place(
        &mut out,
        batch.iter().copied(),
        t,
        lambda,
        norm,
        &mut active,
    );
    out
}

/// Like [`pegasos_train`], calling `observe(t, w_{t+1})` after every iteration.
pub fn pegasos_train_observed<F>(
    data: &Problem<'_>,
    cfg: &PegasosConfig,
    mut observe: F,
) -> Result<LinearTrainResult, TrainError>
where
    F: FnMut(usize, &[f64]),
{
    let n = data.len();
    cfg.validate(n)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = vec![0.0; data.dim()];
    let mut trace = Vec::new();
    let mut active = Vec::with_capacity(cfg.k);
    let (xs, ys) = (data.xs(), data.ys());
    for t in 1..=cfg.iters {
        let picks = sample(&mut rng, n, cfg.k);
        step_in_place(
            &mut w,
            picks.iter().map(|i| (xs[i], ys[i])),
            t,
            cfg.lambda,
            cfg.normalization,
            &mut active,
        );
        observe(t, &w);
        if cfg.trace {
            trace.push(pegasos_objective(&w, data, cfg.lambda));
        }
    }
    Ok(LinearTrainResult {
        w,
        objective_trace: trace,
        wall_time: start.elapsed(),
    })
}

/// Runs `cfg.iters` Pegasos iterations from `w = 0` and returns the last iterate.
pub fn pegasos_train(
    data: &Problem<'_>,
    cfg: &PegasosConfig,
) -> Result<LinearTrainResult, TrainError> {
    pegasos_train_observed(data, cfg, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e0() -> SparseVector {
        SparseVector::new(vec![(0, 1.0)]).unwrap()
    }

    #[test]
    fn first_step_is_projected() {
        let x = e0();
        let w = pegasos_step(&[0.0, 0.0], &[(&x, 1.0)], 1, 0.5, StepNormalization::Batch);
        // half step (2, 0), radius 1/√0.5
        assert!((w[0] - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!((w[0] * 1e6).round(), 1_414_214.0);
        assert_eq!(w[1], 0.0);
    }

    #[test]
    fn satisfied_batch_only_shrinks() {
        let x = e0();
        let w = pegasos_step(&[2.0, 0.0], &[(&x, 1.0)], 1, 0.1, StepNormalization::Batch);
        assert_eq!(w, vec![0.0, 0.0]);
        let w = pegasos_step(
            &[2.0, 1.0],
            &[(&x, 1.0)],
            4,
            0.1,
            StepNormalization::Violators,
        );
        assert!((w[0] - 1.5).abs() < 1e-15 && (w[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn normalization_variants() {
        // one violator (x, +1) and one satisfied point: the violator's y·x is divided by 2
        // under Batch and by 1 under Violators
        let x = e0();
        let far = SparseVector::new(vec![(1, 10.0)]).unwrap();
        let w = [0.0, 0.5];
        let batch = [(&x, 1.0), (&far, 1.0)];
        let b = pegasos_step(&w, &batch, 2, 1.0, StepNormalization::Batch);
        let v = pegasos_step(&w, &batch, 2, 1.0, StepNormalization::Violators);
        assert!((b[0] - 0.25).abs() < 1e-15 && (b[1] - 0.25).abs() < 1e-15);
        assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn steps_shrink_with_t() {
        let x = e0();
        let w = [0.3, 0.0];
        let d = |t| {
            let next = pegasos_step(&w, &[(&x, 1.0)], t, 0.5, StepNormalization::Batch);
            ((next[0] - w[0]).powi(2) + (next[1] - w[1]).powi(2)).sqrt()
        };
        assert!(d(10_000) < d(100));
        assert!(d(100) < d(10));
    }

    #[test]
    fn projection_examples() {
        let mut w = [3.0, 4.0];
        project_to_ball(&mut w, 1.0);
        assert!((w[0] - 0.6).abs() < 1e-15 && (w[1] - 0.8).abs() < 1e-15);
        let mut w = [3.0, 4.0];
        project_to_ball(&mut w, 0.01);
        assert_eq!(w, [3.0, 4.0]);
        let mut w = [0.3, 0.4];
        project_to_ball(&mut w, 4.0);
        assert_eq!(w, [0.3, 0.4]);
        let mut z = [0.0, 0.0];
        project_to_ball(&mut z, 100.0);
        assert_eq!(z, [0.0, 0.0]);
    }

    #[test]
    fn train_is_deterministic_and_bounded() {
        let xs: Vec<SparseVector> = (0..30)
            .map(|i| SparseVector::new(vec![(i % 5, 1.0 + i as f64 / 10.0)]).unwrap())
            .collect();
        let p = Problem::from_pairs(
            xs.iter()
                .enumerate()
                .map(|(i, x)| (x, if i % 3 == 0 { 1.0 } else { -1.0 })),
            5,
        )
        .unwrap();
        let cfg = PegasosConfig {
            lambda: 0.1,
            k: 4,
            iters: 300,
            seed: 9,
            trace: true,
            ..Default::default()
        };
        let mut norms = Vec::new();
        let a = pegasos_train_observed(&p, &cfg, |_, w| norms.push(norm(w))).unwrap();
        let b = pegasos_train(&p, &cfg).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.objective_trace.len(), 300);
        assert_eq!(norms.len(), 300);
        assert!(norms.iter().all(|&n| n <= 1.0 / 0.1f64.sqrt() + 1e-9));
    }

    #[test]
    fn rejects_oversized_subset() {
        let x = e0();
        let p = Problem::from_pairs([(&x, 1.0)], 1).unwrap();
        let cfg = PegasosConfig {
            k: 2,
            ..Default::default()
        };
        assert!(matches!(
            pegasos_train(&p, &cfg),
            Err(TrainError::SubsetTooLarge { k: 2, n: 1 })
        ));
    }
}

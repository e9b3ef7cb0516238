use std::time::Instant;

use super::loss::{quad_hinge_grad, quad_hinge_objective};
use super::{LinearTrainResult, Problem, TrainError};

/// Full-batch gradient descent on the summed quadratic hinge loss.
#[derive(Debug, Clone, PartialEq)]
pub struct GdConfig {
    /// Learning rate.
    pub eta: f64,
    pub max_iters: usize,
    /// Stop once `|obj_t - obj_{t-1}| <= rel_tol * (1 + obj_{t-1})`.
    pub rel_tol: f64,
    /// Optional `reg * ‖w‖²` term added to the objective. Zero reproduces the plain loss.
    pub reg: f64,
}

impl Default for GdConfig {
    fn default() -> Self {
        GdConfig {
            eta: 0.001,
            max_iters: 100,
            rel_tol: 1e-6,
            reg: 0.0,
        }
    }
}

impl GdConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(TrainError::InvalidConfig(format!(
                "eta must be > 0, got {}",
                self.eta
            )));
        }
        if self.max_iters == 0 {
            return Err(TrainError::InvalidConfig(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.rel_tol >= 0.0 && self.reg >= 0.0) {
            return Err(TrainError::InvalidConfig(
                "rel_tol and reg must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

fn objective(w: &[f64], data: &Problem<'_>, reg: f64) -> f64 {
    let mut obj = quad_hinge_objective(w, data);
    if reg > 0.0 {
        obj += reg * w.iter().map(|v| v * v).sum::<f64>();
    }
    obj
}

/// Runs `w <- w - eta * grad` from `w = 0`. The trace holds the objective after each step.
pub fn gd_train(data: &Problem<'_>, cfg: &GdConfig) -> Result<LinearTrainResult, TrainError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut w = vec![0.0; data.dim()];
    let mut prev = objective(&w, data, cfg.reg);
    let mut trace = Vec::new();
    for iteration in 1..=cfg.max_iters {
        let mut g = quad_hinge_grad(&w, data);
        if cfg.reg > 0.0 {
            for (gi, wi) in g.iter_mut().zip(&w) {
                *gi += 2.0 * cfg.reg * wi;
            }
        }
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= cfg.eta * gi;
        }
        let obj = objective(&w, data, cfg.reg);
        if !obj.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(TrainError::Diverged { iteration });
        }
        trace.push(obj);
        if (obj - prev).abs() <= cfg.rel_tol * (1.0 + prev) {
            break;
        }
        prev = obj;
    }
    Ok(LinearTrainResult {
        w,
        objective_trace: trace,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SparseVector;

    #[test]
    fn one_step_from_zero() {
        let x = SparseVector::new(vec![(0, 1.0)]).unwrap();
        let p = Problem::from_pairs([(&x, 1.0)], 2).unwrap();
        let cfg = GdConfig {
            max_iters: 1,
            ..GdConfig::default()
        };
        let r = gd_train(&p, &cfg).unwrap();
        assert!((r.w[0] - 0.002).abs() < 1e-15);
        assert_eq!(r.w[1], 0.0);
        assert_eq!(r.objective_trace.len(), 1);
    }

    #[test]
    fn diverges_with_huge_step() {
        let a = SparseVector::new(vec![(0, 10.0)]).unwrap();
        let b = SparseVector::new(vec![(0, 5.0)]).unwrap();
        let p = Problem::from_pairs([(&a, 1.0), (&b, -1.0)], 1).unwrap();
        let cfg = GdConfig {
            eta: 1e3,
            max_iters: 10_000,
            rel_tol: 0.0,
            reg: 0.0,
        };
        assert!(matches!(
            gd_train(&p, &cfg),
            Err(TrainError::Diverged { .. })
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let x = SparseVector::new(vec![(0, 1.0)]).unwrap();
        let p = Problem::from_pairs([(&x, 1.0)], 1).unwrap();
        for cfg in [
            GdConfig {
                eta: 0.0,
                ..Default::default()
            },
            GdConfig {
                max_iters: 0,
                ..Default::default()
            },
            GdConfig {
                reg: -1.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                gd_train(&p, &cfg),
                Err(TrainError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn regularized_gradient_shrinks_weights() {
        let x = SparseVector::new(vec![(0, 1.0)]).unwrap();
        let p = Problem::from_pairs([(&x, 1.0)], 1).unwrap();
        let base = gd_train(
            &p,
            &GdConfig {
                eta: 0.1,
                max_iters: 200,
                ..Default::default()
            },
        )
        .unwrap();
        let reg = gd_train(
            &p,
            &GdConfig {
                eta: 0.1,
                max_iters: 200,
                reg: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(reg.w[0] < base.w[0]);
        // stationary point of (1-w)^2 + w^2 is w = 0.5
        assert!((reg.w[0] - 0.5).abs() < 1e-3);
    }
}

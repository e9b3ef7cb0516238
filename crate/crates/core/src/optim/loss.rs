use crate::numerics::SparseVector;

use super::Problem;

/// `max(0, 1 - y (w·x))²`.
#[inline]
pub fn quad_hinge_loss(w: &[f64], x: &SparseVector, y: f64) -> f64 {
    let slack = (1.0 - y * x.dot_dense(w)).max(0.0);
    slack * slack
}

/// `max(0, 1 - y (w·x))`.
#[inline]
pub fn hinge_loss(w: &[f64], x: &SparseVector, y: f64) -> f64 {
    (1.0 - y * x.dot_dense(w)).max(0.0)
}

/// Summed quadratic hinge loss over the problem.
pub fn quad_hinge_objective(w: &[f64], data: &Problem<'_>) -> f64 {
    data.iter().map(|(x, y)| quad_hinge_loss(w, x, y)).sum()
}

/// Gradient of [`quad_hinge_objective`]. Instances are accumulated in order.
pub fn quad_hinge_grad(w: &[f64], data: &Problem<'_>) -> Vec<f64> {
    let mut g = vec![0.0; w.len()];
    for (x, y) in data.iter() {
        let slack = 1.0 - y * x.dot_dense(w);
        if slack > 0.0 {
            x.axpy_into(-2.0 * slack * y, &mut g);
        }
    }
    g
}

/// `λ/2 ‖w‖² + mean hinge loss`, the objective Pegasos minimizes.
pub fn pegasos_objective(w: &[f64], data: &Problem<'_>, lambda: f64) -> f64 {
    let reg = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    let loss: f64 = data.iter().map(|(x, y)| hinge_loss(w, x, y)).sum();
    reg + loss / data.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(e: &[(usize, f64)]) -> SparseVector {
        SparseVector::new(e.to_vec()).unwrap()
    }

    #[test]
    fn loss_examples() {
        let x = sv(&[(0, 1.0)]);
        assert_eq!(quad_hinge_loss(&[0.0, 0.0], &x, 1.0), 1.0);
        assert_eq!(quad_hinge_loss(&[2.0, 0.0], &x, 1.0), 0.0);
        assert_eq!(quad_hinge_loss(&[-0.5, 0.0], &x, 1.0), 2.25);
        assert_eq!(hinge_loss(&[-0.5, 0.0], &x, 1.0), 1.5);
    }

    #[test]
    fn grad_examples() {
        let x = sv(&[(0, 1.0)]);
        let p = Problem::from_pairs([(&x, 1.0)], 2).unwrap();
        assert_eq!(quad_hinge_grad(&[0.0, 0.0], &p), vec![-2.0, 0.0]);
        // central differences on the summed loss
        let h = 1e-5;
        let fd = (quad_hinge_objective(&[h, 0.0], &p) - quad_hinge_objective(&[-h, 0.0], &p))
            / (2.0 * h);
        assert!((fd + 2.0).abs() < 1e-8);

        assert_eq!(quad_hinge_grad(&[3.0, 0.0], &p), vec![0.0, 0.0]);

        let y = sv(&[(0, 0.5), (1, 2.0)]);
        let sym = Problem::from_pairs([(&y, 1.0), (&y, -1.0)], 2).unwrap();
        assert_eq!(quad_hinge_grad(&[0.0, 0.0], &sym), vec![0.0, 0.0]);
    }

    #[test]
    fn pegasos_objective_value() {
        let x = sv(&[(0, 1.0)]);
        let p = Problem::from_pairs([(&x, 1.0), (&x, -1.0)], 1).unwrap();
        // 0.5 * 0.5 * 0.25 + (0.5 + 1.5) / 2
        assert!((pegasos_objective(&[0.5], &p, 0.5) - 1.0625).abs() < 1e-15);
    }
}

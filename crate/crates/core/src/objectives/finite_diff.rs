use super::{ClientObjective, FlProblem};
use crate::error::Result;
use crate::model::ModelVector;

/// Compares the analytic gradient against central differences.
///
/// Returns true iff `‖g_fd − g‖ ≤ tol · max(1, ‖g‖, ‖g_fd‖)`. The step for
/// coordinate `j` is `1e-6 · max(1, |v_j|)`.
pub fn finite_diff_check(c: &dyn ClientObjective, v: &[f64], tol: f64) -> bool {
    assert!(tol > 0.0, "tolerance must be positive");
    let analytic = c.grad(v);
    let mut probe = v.to_vec();
    let mut numeric = vec![0.0; v.len()];
    for j in 0..v.len() {
        let h = 1e-6 * v[j].abs().max(1.0);
        probe[j] = v[j] + h;
        let up = c.value(&probe);
        probe[j] = v[j] - h;
        let down = c.value(&probe);
        probe[j] = v[j];
        numeric[j] = (up - down) / (2.0 * h);
    }
    let err: f64 = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale = norm(&analytic).max(norm(&numeric)).max(1.0);
    err <= tol * scale
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Relative error between the central-difference directional derivative of
/// `F` along `dir` (step `h`) and `⟨∇F(x), dir⟩`.
pub fn directional_fd_error(
    problem: &FlProblem,
    x: &ModelVector,
    dir: &ModelVector,
    h: f64,
) -> Result<f64> {
    let mut up = x.clone();
    up.axpy(h, dir);
    let mut down = x.clone();
    down.axpy(-h, dir);
    let numeric = (problem.value(&up)? - problem.value(&down)?) / (2.0 * h);
    let analytic = problem.grad(x)?.dot(dir);
    Ok((numeric - analytic).abs() / analytic.abs().max(1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{LogisticClient, QuadraticClient};

    struct Corrupted<'a>(&'a dyn ClientObjective);

    impl ClientObjective for Corrupted<'_> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn value(&self, v: &[f64]) -> f64 {
            self.0.value(v)
        }
        fn grad_into(&self, v: &[f64], out: &mut [f64]) {
            self.0.grad_into(v, out);
            out[0] += 1.0;
        }
        fn smoothness(&self) -> f64 {
            self.0.smoothness()
        }
        fn strong_convexity(&self) -> f64 {
            self.0.strong_convexity()
        }
    }

    #[test]
    fn quadratic_passes() {
        let q = QuadraticClient::new(2, vec![2.0, 0.3, 0.3, 1.0], vec![0.5, -1.0]).unwrap();
        assert!(finite_diff_check(&q, &[0.7, -2.0], 1e-5));
    }

    #[test]
    fn logistic_passes() {
        let c = LogisticClient::new(
            3,
            vec![0.5, -1.0, 2.0, 1.5, 0.2, -0.3, -0.7, 0.9, 0.1, 0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0, 0.0],
            0.01,
        )
        .unwrap();
        assert!(finite_diff_check(&c, &[0.3, -0.4, 0.25], 1e-4));
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let q = QuadraticClient::new(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(!finite_diff_check(&Corrupted(&q), &[3.0, 4.0], 1e-5));
    }
}

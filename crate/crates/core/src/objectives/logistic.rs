use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ClientObjective;
use crate::error::{Error, Result};

/// Binary logistic regression with an optional ridge term:
/// `f(w) = (1/m) Σ [log(1 + e^{z_j}) − y_j z_j] + (l2/2)‖w‖²`, `z_j = x_jᵀw`.
///
/// The smoothness constant `λ_max(XᵀX)/(4m) + l2` is computed at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticClient {
    m: usize,
    d: usize,
    /// Row-major `m × d`.
    features: Vec<f64>,
    labels: Vec<f64>,
    l2: f64,
    smoothness: f64,
}

impl LogisticClient {
    pub fn new(d: usize, features: Vec<f64>, labels: Vec<f64>, l2: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("logistic client needs d >= 1"));
        }
        let m = labels.len();
        if m == 0 {
            return Err(Error::invalid("logistic client needs at least one sample"));
        }
        if features.len() != m * d {
            return Err(Error::mismatch(m * d, features.len()));
        }
        if labels.iter().any(|y| *y != 0.0 && *y != 1.0) {
            return Err(Error::invalid("logistic labels must be 0 or 1"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logistic features"));
        }
        if !(l2.is_finite() && l2 >= 0.0) {
            return Err(Error::invalid(format!("ridge weight must be >= 0, got {l2}")));
        }
        let x = DMatrix::from_row_slice(m, d, &features);
        let gram = x.transpose() * &x;
        let top = gram.symmetric_eigenvalues().max().max(0.0);
        Ok(Self {
            m,
            d,
            features,
            labels,
            l2,
            smoothness: top / (4.0 * m as f64) + l2,
        })
    }

    pub fn samples(&self) -> usize {
        self.m
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.features.chunks_exact(self.d).zip(self.labels.iter().copied())
    }

    /// Fraction of local samples classified correctly by `w`.
    pub fn accuracy(&self, w: &[f64]) -> f64 {
        accuracy(w, self.d, &self.features, &self.labels)
    }

    /// Unregularized mean log-loss.
    pub fn log_loss(&self, w: &[f64]) -> f64 {
        self.rows()
            .map(|(x, y)| {
                let z = dot(x, w);
                softplus(z) - y * z
            })
            .sum::<f64>()
            / self.m as f64
    }
}

/// Fraction of rows where `sign(xᵀw)` agrees with the 0/1 label.
pub(crate) fn accuracy(w: &[f64], d: usize, features: &[f64], labels: &[f64]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = features
        .chunks_exact(d)
        .zip(labels)
        .filter(|(x, y)| (dot(x, w) > 0.0) == (**y == 1.0))
        .count();
    hits as f64 / labels.len() as f64
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl ClientObjective for LogisticClient {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, w: &[f64]) -> f64 {
        assert_eq!(w.len(), self.d, "logistic client dimension");
        self.log_loss(w) + 0.5 * self.l2 * dot(w, w)
    }

    fn grad_into(&self, w: &[f64], out: &mut [f64]) {
        assert_eq!(w.len(), self.d, "logistic client dimension");
        out.iter_mut().for_each(|o| *o = 0.0);
        for (x, y) in self.rows() {
            let r = sigmoid(dot(x, w)) - y;
            for (o, xi) in out.iter_mut().zip(x) {
                *o += r * xi;
            }
        }
        let inv = 1.0 / self.m as f64;
        for (o, wi) in out.iter_mut().zip(w) {
            *o = *o * inv + self.l2 * wi;
        }
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.l2
    }

    fn weight(&self) -> f64 {
        self.m as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_two_at_origin() {
        let c = LogisticClient::new(2, vec![1.0, 2.0, -3.0, 0.5, 0.0, 1.0], vec![0.0; 3], 0.0).unwrap();
        assert!((c.value(&[0.0, 0.0]) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn smoothness_is_computed() {
        // XᵀX = diag(2, 0) for rows (1, 0), (-1, 0).
        let c = LogisticClient::new(2, vec![1.0, 0.0, -1.0, 0.0], vec![1.0, 0.0], 0.1).unwrap();
        assert!((c.smoothness() - (2.0 / 8.0 + 0.1)).abs() < 1e-14);
        assert_eq!(c.strong_convexity(), 0.1);
        assert_eq!(c.weight(), 2.0);
    }

    #[test]
    fn stable_for_large_margins() {
        let c = LogisticClient::new(1, vec![1.0], vec![1.0], 0.0).unwrap();
        assert!(c.value(&[800.0]).is_finite());
        assert!(c.value(&[-800.0]) > 799.0);
        assert!(c.grad(&[-800.0])[0].is_finite());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(LogisticClient::new(1, vec![1.0], vec![2.0], 0.0).is_err());
        assert!(LogisticClient::new(1, vec![], vec![], 0.0).is_err());
        assert!(LogisticClient::new(2, vec![1.0], vec![1.0], 0.0).is_err());
        assert!(LogisticClient::new(1, vec![1.0], vec![1.0], -1.0).is_err());
    }
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ClientObjective;
use crate::error::{Error, Result};

/// `f(v) = ½ vᵀAv − bᵀv` with `A` symmetric positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticClient {
    d: usize,
    /// Row-major `d × d`.
    a: Vec<f64>,
    b: Vec<f64>,
    eig_min: f64,
    eig_max: f64,
}

impl QuadraticClient {
    pub fn new(d: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("quadratic client needs d >= 1"));
        }
        if a.len() != d * d {
            return Err(Error::mismatch(d * d, a.len()));
        }
        if b.len() != d {
            return Err(Error::mismatch(d, b.len()));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadratic client"));
        }
        let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..d {
            for j in 0..i {
                if (a[i * d + j] - a[j * d + i]).abs() > 1e-12 * scale {
                    return Err(Error::invalid("quadratic client matrix is not symmetric"));
                }
            }
        }
        let eig = DMatrix::from_row_slice(d, d, &a).symmetric_eigenvalues();
        let eig_min = eig.min();
        let eig_max = eig.max();
        if eig_min < -1e-10 * scale {
            return Err(Error::invalid(format!(
                "quadratic client matrix is not PSD (min eigenvalue {eig_min:e})"
            )));
        }
        // Eigenvalues at roundoff level are treated as exact zeros.
        let eig_min = if eig_min <= 1e-12 * scale { 0.0 } else { eig_min };
        Ok(Self {
            d,
            a,
            b,
            eig_min,
            eig_max: eig_max.max(0.0),
        })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.d, &self.a)
    }

    pub fn linear_term(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.b)
    }

    /// `A⁻¹b` when `A` is nonsingular.
    pub fn minimizer(&self) -> Option<Vec<f64>> {
        let sol = self.matrix().cholesky()?.solve(&self.linear_term());
        Some(sol.iter().copied().collect())
    }
}

impl ClientObjective for QuadraticClient {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.d, "quadratic client dimension");
        let mut quad = 0.0;
        for (i, row) in self.a.chunks_exact(self.d).enumerate() {
            let av: f64 = row.iter().zip(v).map(|(a, x)| a * x).sum();
            quad += v[i] * av;
        }
        let lin: f64 = self.b.iter().zip(v).map(|(b, x)| b * x).sum();
        0.5 * quad - lin
    }

    fn grad_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.d, "quadratic client dimension");
        for ((row, o), b) in self.a.chunks_exact(self.d).zip(out.iter_mut()).zip(&self.b) {
            *o = row.iter().zip(v).map(|(a, x)| a * x).sum::<f64>() - b;
        }
    }

    fn smoothness(&self) -> f64 {
        self.eig_max
    }

    fn strong_convexity(&self) -> f64 {
        self.eig_min
    }
}

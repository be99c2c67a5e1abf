//! Model-vector arithmetic and the consensus penalty.
//!
//! A [`ModelVector`] is the stacked iterate `x = (x_1, …, x_n) ∈ ℝ^{nd}`. Parts
//! are stored contiguously in one buffer so that norms and inner products over
//! `ℝ^{nd}` are single reductions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of one client, `x_i ∈ ℝ^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalModel(Vec<f64>);

impl LocalModel {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("local model must have d >= 1"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("local model"));
        }
        Ok(Self(coords))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.0)
    }
}

impl From<LocalModel> for Vec<f64> {
    fn from(m: LocalModel) -> Self {
        m.0
    }
}

/// Stacked client models with `(n, d)` shape metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVector {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl ModelVector {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid("model vector needs n >= 1 and d >= 1"));
        }
        if data.len() != n * d {
            return Err(Error::mismatch(n * d, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model vector"));
        }
        Ok(Self { n, d, data })
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        assert!(n > 0 && d > 0, "model vector needs n >= 1 and d >= 1");
        Self {
            n,
            d,
            data: vec![0.0; n * d],
        }
    }

    pub fn from_parts(parts: &[LocalModel]) -> Result<Self> {
        let d = parts.first().map(LocalModel::dim).unwrap_or(0);
        if parts.iter().any(|p| p.dim() != d) {
            return Err(Error::invalid("all parts must share the same dimension"));
        }
        let data = parts.iter().flat_map(|p| p.0.iter().copied()).collect();
        Self::new(parts.len(), d, data)
    }

    /// The consensus point with every part equal to `v`.
    pub fn consensus(n: usize, v: &[f64]) -> Self {
        let mut data = Vec::with_capacity(n * v.len());
        for _ in 0..n {
            data.extend_from_slice(v);
        }
        Self { n, d: v.len(), data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn part(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn part_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn parts(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn parts_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.data.chunks_exact_mut(self.d)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn check_shape(&self, n: usize, d: usize) -> Result<()> {
        if self.shape() != (n, d) {
            return Err(Error::mismatch(
                format!("({n}, {d})"),
                format!("({}, {})", self.n, self.d),
            ));
        }
        Ok(())
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.data)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &ModelVector) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        dot(&self.data, &other.data)
    }

    /// `‖self − other‖²`.
    pub fn dist_sq(&self, other: &ModelVector) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &ModelVector) {
        debug_assert_eq!(self.shape(), other.shape());
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.data {
            *v *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> ModelVector {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn sub(&self, other: &ModelVector) -> ModelVector {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &ModelVector) -> ModelVector {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    /// Component-wise mean of the parts, `x̄ = (1/n) Σ x_i`.
    ///
    /// Summation runs in client order so the result is bit-stable.
    pub fn average(&self) -> LocalModel {
        let mut acc = vec![0.0; self.d];
        for part in self.parts() {
            for (a, v) in acc.iter_mut().zip(part) {
                *a += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        LocalModel(acc)
    }

    /// `ψ(x) = (1/2n) Σ ‖x_i − x̄‖²`.
    pub fn psi_value(&self) -> f64 {
        let mean = self.average();
        let spread: f64 = self
            .parts()
            .map(|p| p.iter().zip(&mean.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum();
        spread / (2.0 * self.n as f64)
    }

    /// `∇ψ(x)`, whose part `i` is `(1/n)(x_i − x̄)`.
    pub fn psi_grad(&self) -> ModelVector {
        let mean = self.average();
        let inv = 1.0 / self.n as f64;
        let mut out = self.clone();
        for part in out.parts_mut() {
            for (v, m) in part.iter_mut().zip(&mean.0) {
                *v = inv * (*v - m);
            }
        }
        out
    }

    /// True when every part lies within `tol` (max-norm) of the average.
    pub fn is_consensus(&self, tol: f64) -> bool {
        let mean = self.average();
        self.parts()
            .all(|p| p.iter().zip(&mean.0).all(|(a, b)| (a - b).abs() <= tol))
    }
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mv(n: usize, d: usize, data: &[f64]) -> ModelVector {
        ModelVector::new(n, d, data.to_vec()).unwrap()
    }

    #[test]
    fn average_examples() {
        assert_eq!(mv(2, 1, &[0.0, 2.0]).average().as_slice(), &[1.0]);
        assert_eq!(mv(3, 2, &[1.5, -2.0, 1.5, -2.0, 1.5, -2.0]).average().as_slice(), &[1.5, -2.0]);
        assert_eq!(mv(1, 1, &[5.0]).average().as_slice(), &[5.0]);
    }

    #[test]
    fn psi_value_examples() {
        assert_eq!(ModelVector::consensus(4, &[3.0, 1.0]).psi_value(), 0.0);
        assert!((mv(2, 1, &[0.0, 2.0]).psi_value() - 0.5).abs() < 1e-15);
        assert!((mv(4, 1, &[1.0, 1.0, -1.0, -1.0]).psi_value() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn psi_grad_examples() {
        let g = mv(2, 1, &[0.0, 2.0]).psi_grad();
        assert_eq!(g.as_slice(), &[-0.5, 0.5]);
        let g = ModelVector::consensus(3, &[2.0, -7.0]).psi_grad();
        assert!(g.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ModelVector::new(0, 1, vec![]).is_err());
        assert!(ModelVector::new(2, 2, vec![1.0; 3]).is_err());
        assert!(ModelVector::new(1, 1, vec![f64::NAN]).is_err());
        assert!(ModelVector::from_parts(&[LocalModel::zeros(2), LocalModel::zeros(3)]).is_err());
    }

    fn arb_mv() -> impl Strategy<Value = ModelVector> {
        (1usize..6, 1usize..5).prop_flat_map(|(n, d)| {
            prop::collection::vec(-10.0f64..10.0, n * d)
                .prop_map(move |data| ModelVector::new(n, d, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn psi_grad_parts_sum_to_zero(x in arb_mv()) {
            let g = x.psi_grad();
            let total = g.average();
            let scale = x.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for v in total.as_slice() {
                prop_assert!(v.abs() <= 1e-15 * scale * x.n() as f64);
            }
        }

        #[test]
        fn psi_zero_iff_consensus(x in arb_mv()) {
            let psi = x.psi_value();
            prop_assert!(psi >= 0.0);
            let c = ModelVector::consensus(x.n(), x.average().as_slice());
            prop_assert!(c.psi_value() <= 1e-12);
            if !x.is_consensus(1e-6) {
                prop_assert!(psi > 1e-12);
            }
        }

        #[test]
        fn psi_is_one_over_n_smooth(
            (x, y) in (1usize..6, 1usize..5).prop_flat_map(|(n, d)| {
                let v = prop::collection::vec(-10.0f64..10.0, n * d);
                (v.clone(), v).prop_map(move |(a, b)| {
                    (ModelVector::new(n, d, a).unwrap(), ModelVector::new(n, d, b).unwrap())
                })
            })
        ) {
            let lhs = x.psi_grad().dist_sq(&y.psi_grad()).sqrt();
            let rhs = x.dist_sq(&y).sqrt() / x.n() as f64;
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-14);
        }
    }
}

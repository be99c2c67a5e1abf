//! Client objectives and the regularized federated problem.

mod finite_diff;
mod generate;
mod logistic;
mod quadratic;

pub use finite_diff::{directional_fd_error, finite_diff_check};
pub use generate::{make_pl_problem, make_strongly_convex_problem};
pub use logistic::LogisticClient;
pub(crate) use logistic::accuracy as logistic_accuracy;
pub use quadratic::QuadraticClient;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LocalModel, ModelVector};

/// A differentiable per-client loss `f_i : ℝ^d → ℝ`.
///
/// `value` and `grad_into` take raw slices and assume the dimension has been
/// checked; [`client_value`] and [`client_grad`] are the checked entry points.
pub trait ClientObjective {
    fn dim(&self) -> usize;
    fn value(&self, v: &[f64]) -> f64;
    fn grad_into(&self, v: &[f64], out: &mut [f64]);
    /// Smoothness constant `L` of this client.
    fn smoothness(&self) -> f64;
    /// Strong convexity constant `μ` (0 when merely convex).
    fn strong_convexity(&self) -> f64;
    /// Aggregation weight used by sample-weighted baselines.
    fn weight(&self) -> f64 {
        1.0
    }

    fn grad(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.grad_into(v, &mut out);
        out
    }
}

pub fn client_value(c: &dyn ClientObjective, v: &LocalModel) -> Result<f64> {
    if v.dim() != c.dim() {
        return Err(Error::mismatch(c.dim(), v.dim()));
    }
    Ok(c.value(v.as_slice()))
}

pub fn client_grad(c: &dyn ClientObjective, v: &LocalModel) -> Result<LocalModel> {
    if v.dim() != c.dim() {
        return Err(Error::mismatch(c.dim(), v.dim()));
    }
    LocalModel::new(c.grad(v.as_slice()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Client {
    Quadratic(QuadraticClient),
    Logistic(LogisticClient),
}

impl Client {
    pub fn as_quadratic(&self) -> Option<&QuadraticClient> {
        match self {
            Client::Quadratic(q) => Some(q),
            Client::Logistic(_) => None,
        }
    }

    pub fn as_logistic(&self) -> Option<&LogisticClient> {
        match self {
            Client::Logistic(l) => Some(l),
            Client::Quadratic(_) => None,
        }
    }

    fn inner(&self) -> &dyn ClientObjective {
        match self {
            Client::Quadratic(q) => q,
            Client::Logistic(l) => l,
        }
    }
}

impl ClientObjective for Client {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn value(&self, v: &[f64]) -> f64 {
        self.inner().value(v)
    }
    fn grad_into(&self, v: &[f64], out: &mut [f64]) {
        self.inner().grad_into(v, out)
    }
    fn smoothness(&self) -> f64 {
        self.inner().smoothness()
    }
    fn strong_convexity(&self) -> f64 {
        self.inner().strong_convexity()
    }
    fn weight(&self) -> f64 {
        self.inner().weight()
    }
}

impl From<QuadraticClient> for Client {
    fn from(q: QuadraticClient) -> Self {
        Client::Quadratic(q)
    }
}

impl From<LogisticClient> for Client {
    fn from(l: LogisticClient) -> Self {
        Client::Logistic(l)
    }
}

/// `F(x) = f(x) + λψ(x)` with `f(x) = (1/n) Σ f_i(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlProblem {
    clients: Vec<Client>,
    lambda: f64,
    smoothness: f64,
    strong_convexity: f64,
    d: usize,
}

impl FlProblem {
    /// Builds the problem; `L` and `μ` are the max / min over the clients.
    pub fn new(clients: Vec<Client>, lambda: f64) -> Result<Self> {
        let d = clients
            .first()
            .map(|c| c.dim())
            .ok_or_else(|| Error::invalid("problem needs at least one client"))?;
        if let Some(bad) = clients.iter().find(|c| c.dim() != d) {
            return Err(Error::mismatch(d, bad.dim()));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let smoothness = clients.iter().map(|c| c.smoothness()).fold(0.0, f64::max);
        let strong_convexity = clients
            .iter()
            .map(|c| c.strong_convexity())
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        Ok(Self {
            clients,
            lambda,
            smoothness,
            strong_convexity,
            d,
        })
    }

    pub fn n(&self) -> usize {
        self.clients.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Same clients, different penalty weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.clients.clone(), lambda)
    }

    /// `L`: the largest client smoothness constant.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    /// `μ`: the smallest client strong-convexity constant (0 for PL-only problems).
    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    pub fn clients(&self) -> &[Client] {
        &self.clients
    }

    pub fn is_quadratic(&self) -> bool {
        self.clients.iter().all(|c| c.as_quadratic().is_some())
    }

    pub fn zeros(&self) -> ModelVector {
        ModelVector::zeros(self.n(), self.d)
    }

    fn check(&self, x: &ModelVector) -> Result<()> {
        x.check_shape(self.n(), self.d)
    }

    pub fn f_value(&self, x: &ModelVector) -> Result<f64> {
        self.check(x)?;
        let total: f64 = self
            .clients
            .iter()
            .zip(x.parts())
            .map(|(c, xi)| c.value(xi))
            .sum();
        Ok(total / self.n() as f64)
    }

    /// Writes `∇f(x)` (part `i` is `(1/n)∇f_i(x_i)`) into `out`.
    pub fn f_grad_into(&self, x: &ModelVector, out: &mut ModelVector) -> Result<()> {
        self.check(x)?;
        self.check(out)?;
        let inv = 1.0 / self.n() as f64;
        for ((c, xi), gi) in self.clients.iter().zip(x.parts()).zip(out.parts_mut()) {
            c.grad_into(xi, gi);
            gi.iter_mut().for_each(|g| *g *= inv);
        }
        Ok(())
    }

    pub fn f_grad(&self, x: &ModelVector) -> Result<ModelVector> {
        let mut out = self.zeros();
        self.f_grad_into(x, &mut out)?;
        Ok(out)
    }

    /// `F(x) = f(x) + λψ(x)`.
    pub fn value(&self, x: &ModelVector) -> Result<f64> {
        Ok(self.f_value(x)? + self.lambda * x.psi_value())
    }

    /// `∇F(x) = ∇f(x) + λ∇ψ(x)`.
    pub fn grad(&self, x: &ModelVector) -> Result<ModelVector> {
        let mut g = self.f_grad(x)?;
        g.axpy(self.lambda, &x.psi_grad());
        Ok(g)
    }
}

//! Problem constants and the gradient-variance functionals `σ²`, `σ_m²`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::exact::{solution_set, SolutionSet};
use crate::error::{Error, Result};
use crate::model::ModelVector;
use crate::objectives::FlProblem;
use crate::{rng, schedules};

/// `σ_x² = (1/n²) Σ [‖∇f_i(x_i)‖²/(1−p) + (λ²/p)‖x_i − x̄‖²]`.
pub fn sigma_at(problem: &FlProblem, x: &ModelVector, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    x.check_shape(problem.n(), problem.d())?;
    let mean = x.average();
    let lambda = problem.lambda();
    let mut g = vec![0.0; problem.d()];
    let mut total = 0.0;
    for (c, xi) in problem.clients().iter().zip(x.parts()) {
        use crate::objectives::ClientObjective;
        c.grad_into(xi, &mut g);
        let grad_sq: f64 = g.iter().map(|v| v * v).sum();
        let spread: f64 = xi.iter().zip(mean.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
        total += grad_sq / (1.0 - p) + lambda * lambda / p * spread;
    }
    let n = problem.n() as f64;
    Ok(total / (n * n))
}

/// `σ²` at the min-norm solution.
pub fn sigma_sq(problem: &FlProblem, solution: &super::ExactSolution, p: f64) -> Result<f64> {
    sigma_at(problem, &solution.x_star, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaMax {
    /// Largest `σ_x²` seen, including the min-norm point.
    pub value: f64,
    /// `σ_x²` at the min-norm point.
    pub at_min_norm: f64,
    pub radius: f64,
    /// Whether doubling the patch radius raised the estimate (relative
    /// increase above `1e-9`), hinting that the true max may be unbounded.
    pub grows_with_radius: bool,
}

/// Default patch radius factor for [`sigma_m_sq`].
pub const PATCH_FACTOR: f64 = 10.0;

fn sampled_max(problem: &FlProblem, set: &SolutionSet, p: f64, samples: usize, radius: f64, seed: u64) -> Result<f64> {
    let mut best = sigma_at(problem, &set.solution.x_star, p)?;
    let r = set.null_dim();
    if r == 0 {
        return Ok(best);
    }
    let mut rng = rng::stream(seed, "sigma-m");
    for _ in 0..samples {
        // Uniform in the r-ball: Gaussian direction, radius ∝ U^{1/r}.
        let dir: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = radius * rng.random::<f64>().powf(1.0 / r as f64) / norm;
        let coeffs: Vec<f64> = dir.iter().map(|v| v * scale).collect();
        best = best.max(sigma_at(problem, &set.point(&coeffs), p)?);
    }
    Ok(best)
}

/// `σ_m²`: max of `σ_x²` over `samples` points of the solution set drawn in a
/// ball of radius `PATCH_FACTOR · ‖x_min‖` (radius 1 when `x_min = 0`) around
/// the min-norm solution, plus the min-norm point itself.
pub fn sigma_m_sq(problem: &FlProblem, set: &SolutionSet, p: f64, samples: usize, seed: u64) -> Result<SigmaMax> {
    let norm = set.solution.x_star.norm();
    let radius = PATCH_FACTOR * if norm > 0.0 { norm } else { 1.0 };
    let at_min_norm = sigma_at(problem, &set.solution.x_star, p)?;
    let value = sampled_max(problem, set, p, samples, radius, seed)?;
    let wider = sampled_max(problem, set, p, samples, 2.0 * radius, seed)?;
    Ok(SigmaMax {
        value,
        at_min_norm,
        radius,
        grows_with_radius: wider > value * (1.0 + 1e-9),
    })
}

/// Every constant the step caps and bounds need, for one `(problem, p)`.
///
/// Fields that need an exact solution (quadratic problems only) or a positive
/// curvature constant are `None` when unavailable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub lambda: f64,
    /// Client smoothness `L`.
    pub l: f64,
    /// Client strong convexity `μ`.
    pub mu: f64,
    pub calligraphic_l: f64,
    pub zeta: f64,
    pub l_f: f64,
    /// `μ/n`, when `μ > 0`.
    pub mu_f: Option<f64>,
    pub mu_pl: Option<f64>,
    pub sigma_sq: Option<f64>,
    pub sigma_m_sq: Option<f64>,
    pub sigma_m_grows: Option<bool>,
    pub convex_cap: f64,
    pub pl_cap: Option<f64>,
    pub f_star: Option<f64>,
}

/// Samples used for `σ_m²` in [`constants_report`].
pub const SIGMA_M_SAMPLES: usize = 256;

pub fn constants_report(problem: &FlProblem, p: f64, seed: u64) -> Result<ConstantsReport> {
    let (n, lambda, l, mu) = (problem.n(), problem.lambda(), problem.smoothness(), problem.strong_convexity());
    let mut report = ConstantsReport {
        n,
        d: problem.d(),
        p,
        lambda,
        l,
        mu,
        calligraphic_l: schedules::calligraphic_l(p, lambda, l, n)?,
        zeta: schedules::zeta(p, lambda, l, n)?,
        l_f: schedules::smoothness_of_objective(l, lambda, n),
        mu_f: (mu > 0.0).then(|| mu / n as f64),
        mu_pl: None,
        sigma_sq: None,
        sigma_m_sq: None,
        sigma_m_grows: None,
        convex_cap: schedules::convex_cap(p, lambda, l, n)?,
        pl_cap: None,
        f_star: None,
    };
    if problem.is_quadratic() {
        let set = solution_set(problem)?;
        let mu_pl = set.mu_pl();
        let sm = sigma_m_sq(problem, &set, p, SIGMA_M_SAMPLES, seed)?;
        report.mu_pl = Some(mu_pl);
        report.sigma_sq = Some(sm.at_min_norm);
        report.sigma_m_sq = Some(sm.value);
        report.sigma_m_grows = Some(sm.grows_with_radius);
        report.pl_cap = Some(schedules::pl_cap(p, lambda, l, n, mu_pl)?);
        report.f_star = Some(set.solution.f_star);
    }
    Ok(report)
}

//! Pointwise lemma checks: second moments of the stochastic gradient and the
//! curvature inequalities used by the analysis.

use nalgebra::DVector;

use super::exact::{assemble_hessian, SolutionSet};
use crate::error::{Error, Result};
use crate::model::ModelVector;
use crate::objectives::FlProblem;

/// Exact `E‖G(x)‖²` over the coin: `‖∇f(x)‖²/(1−p) + λ²‖∇ψ(x)‖²/p`.
pub fn second_moment(problem: &FlProblem, x: &ModelVector, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    let gf = problem.f_grad(x)?;
    let gp = x.psi_grad();
    let lambda = problem.lambda();
    Ok(gf.norm_sq() / (1.0 - p) + lambda * lambda * gp.norm_sq() / p)
}

/// `4𝓛(F(x) − F*) + 18σ²`.
pub fn convex_second_moment_bound(calligraphic_l: f64, gap: f64, sigma_sq: f64) -> f64 {
    4.0 * calligraphic_l * gap + 18.0 * sigma_sq
}

/// `(4ζ/μ)(F(x) − F*) + 18σ_m²`.
pub fn pl_second_moment_bound(zeta: f64, mu_pl: f64, gap: f64, sigma_m_sq: f64) -> f64 {
    4.0 * zeta / mu_pl * gap + 18.0 * sigma_m_sq
}

/// Extreme eigenvalues of the Hessian of a quadratic `F`.
pub fn hessian_extremes(problem: &FlProblem) -> Result<(f64, f64)> {
    let h = assemble_hessian(problem)?;
    let e = h.symmetric_eigenvalues();
    Ok((e.min(), e.max()))
}

/// `F(x) − F* − (μ_PL/2) dist(x, X*)²`; nonnegative under quadratic growth.
pub fn quadratic_growth_slack(problem: &FlProblem, set: &SolutionSet, x: &ModelVector) -> Result<f64> {
    let gap = problem.value(x)? - set.solution.f_star;
    Ok(gap - 0.5 * set.mu_pl() * set.dist_sq(x))
}

/// `D_F(x, y) − ‖∇F(x) − ∇F(y)‖²/(2L_F)`; nonnegative for convex `L_F`-smooth `F`.
pub fn bregman_slack(problem: &FlProblem, x: &ModelVector, y: &ModelVector, l_f: f64) -> Result<f64> {
    let gy = problem.grad(y)?;
    let gx = problem.grad(x)?;
    let breg = problem.value(x)? - problem.value(y)? - gy.dot(&x.sub(y));
    Ok(breg - gx.dist_sq(&gy) / (2.0 * l_f))
}

/// `½ eᵀHe` for `e = x − x*`, the exact F-gap of a quadratic problem.
pub fn quadratic_gap(set: &SolutionSet, hessian: &nalgebra::DMatrix<f64>, x: &ModelVector) -> f64 {
    let e = DVector::from_column_slice(x.sub(&set.solution.x_star).as_slice());
    0.5 * e.dot(&(hessian * &e))
}

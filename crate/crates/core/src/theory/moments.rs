//! Exact first and second moments of the iterates on quadratic problems.
//!
//! With `e^k = x^k − x(λ)` the update reads `e^{k+1} = (I − α_k B_ξ) e^k − α_k g_ξ`
//! where `B_0 = H_f/(1−p)`, `B_1 = λH_ψ/p` and `g_ξ = G_ξ(x(λ))`. Averaging over
//! the coin gives a closed recursion for `m = E e` and `S = E eeᵀ`, so
//! `E‖x^k − x(λ)‖² = tr S` and `E[F(x^k) − F*] = ½ tr(HS)` are available without
//! sampling.

use nalgebra::{DMatrix, DVector};

use super::exact::{assemble_data_hessian, assemble_hessian, assemble_penalty_hessian, ExactSolution};
use crate::error::{Error, Result};
use crate::model::ModelVector;
use crate::objectives::FlProblem;
use crate::schedules::StepSchedule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedPoint {
    /// Iterations completed.
    pub k: u64,
    pub sq_dist: f64,
    pub f_gap: f64,
}

/// Expected squared distance and F-gap after each multiple of `record_every`
/// iterations, from a deterministic start.
pub fn expected_trajectory(
    problem: &FlProblem,
    solution: &ExactSolution,
    p: f64,
    schedule: &StepSchedule,
    start: &ModelVector,
    iterations: u64,
    record_every: u64,
) -> Result<Vec<ExpectedPoint>> {
    if !(p > 0.0 && p < 1.0) || record_every == 0 {
        return Err(Error::invalid("need p in (0, 1) and record_every >= 1"));
    }
    let h = assemble_hessian(problem)?;
    let b0 = assemble_data_hessian(problem)? / (1.0 - p);
    let b1 = assemble_penalty_hessian(problem.n(), problem.d()) * (problem.lambda() / p);
    let xs = &solution.x_star;
    let g0 = DVector::from_column_slice(problem.f_grad(xs)?.as_slice()) / (1.0 - p);
    let g1 = DVector::from_column_slice(xs.psi_grad().as_slice()) * (problem.lambda() / p);
    let nd = h.nrows();
    let id = DMatrix::<f64>::identity(nd, nd);

    let mut m = DVector::from_column_slice(start.sub(xs).as_slice());
    let mut s = &m * m.transpose();
    let mut out = Vec::new();
    for k in 1..=iterations {
        let alpha = schedule.step_at(k)?;
        let mut s_next = DMatrix::zeros(nd, nd);
        let mut m_next = DVector::zeros(nd);
        for (prob, b, g) in [(1.0 - p, &b0, &g0), (p, &b1, &g1)] {
            let t = &id - b * alpha;
            let tm = &t * &m;
            let cross = &tm * g.transpose() * alpha;
            s_next += (&t * &s * t.transpose() - &cross - cross.transpose() + g * g.transpose() * (alpha * alpha)) * prob;
            m_next += (tm - g * alpha) * prob;
        }
        s = s_next;
        m = m_next;
        if k % record_every == 0 {
            out.push(ExpectedPoint {
                k,
                sq_dist: s.trace(),
                f_gap: 0.5 * (&h * &s).trace(),
            });
        }
    }
    Ok(out)
}

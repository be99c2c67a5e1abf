//! FedAvg, FedProx and the full-batch reference solver.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{make_record, Evaluation, Record, Trace};
use crate::error::{Error, Result};
use crate::model::ModelVector;
use crate::objectives::{ClientObjective, FlProblem};
use crate::rng;
use crate::schedules;
use crate::theory::ExactSolution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FedConfig {
    pub rounds: u64,
    /// Full-batch local gradient steps per round.
    pub local_epochs: u32,
    /// Fraction of clients sampled per round; at least one client is used.
    pub client_fraction: f64,
    pub lr: f64,
    /// Proximal weight; 0 gives FedAvg.
    pub prox_mu: f64,
    pub seed: u64,
    pub record_every: u64,
}

impl FedConfig {
    fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.local_epochs == 0 || self.record_every == 0 {
            return Err(Error::invalid("rounds, local_epochs and record_every must be >= 1"));
        }
        if !(self.client_fraction > 0.0 && self.client_fraction <= 1.0) {
            return Err(Error::invalid("client_fraction must lie in (0, 1]"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.prox_mu >= 0.0 && self.prox_mu.is_finite()) {
            return Err(Error::invalid("lr must be > 0 and prox_mu >= 0"));
        }
        Ok(())
    }
}

pub fn run_fedavg(
    problem: &FlProblem,
    config: &FedConfig,
    start: &[f64],
    oracle: Option<&ExactSolution>,
    eval: Option<&Evaluation>,
) -> Result<Trace> {
    let mut cfg = *config;
    cfg.prox_mu = 0.0;
    run_federated(problem, &cfg, start, oracle, eval)
}

pub fn run_fedprox(
    problem: &FlProblem,
    config: &FedConfig,
    start: &[f64],
    oracle: Option<&ExactSolution>,
    eval: Option<&Evaluation>,
) -> Result<Trace> {
    run_federated(problem, config, start, oracle, eval)
}

/// Each round the sampled clients start from the global model `w`, run
/// `local_epochs` gradient steps on `f_i(v) + (prox_mu/2)‖v − w‖²`, and the
/// server takes the client-weight average. Metrics are evaluated at the
/// consensus point `(w, …, w)`; one communication round is charged per round.
fn run_federated(
    problem: &FlProblem,
    config: &FedConfig,
    start: &[f64],
    oracle: Option<&ExactSolution>,
    eval: Option<&Evaluation>,
) -> Result<Trace> {
    config.validate()?;
    let (n, d) = (problem.n(), problem.d());
    if start.len() != d {
        return Err(Error::mismatch(d, start.len()));
    }
    let per_round = ((config.client_fraction * n as f64).round() as usize).clamp(1, n);
    let mut rng = rng::stream(config.seed, rng::CLIENTS);
    let mut w = start.to_vec();
    let mut local = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut acc = vec![0.0; d];
    let initial = make_record(problem, &ModelVector::consensus(n, &w), 0, 0.0, None, 0, oracle, eval)?;
    let mut records: Vec<Record> = Vec::new();
    for round in 1..=config.rounds {
        let mut chosen = if per_round == n {
            (0..n).collect::<Vec<_>>()
        } else {
            index::sample(&mut rng, n, per_round).into_vec()
        };
        chosen.sort_unstable();
        acc.iter_mut().for_each(|a| *a = 0.0);
        let mut total_weight = 0.0;
        for &i in &chosen {
            let client = &problem.clients()[i];
            local.copy_from_slice(&w);
            for _ in 0..config.local_epochs {
                client.grad_into(&local, &mut grad);
                for ((v, g), w0) in local.iter_mut().zip(&grad).zip(&w) {
                    *v -= config.lr * (g + config.prox_mu * (*v - w0));
                }
            }
            let weight = client.weight();
            total_weight += weight;
            for (a, v) in acc.iter_mut().zip(&local) {
                *a += weight * v;
            }
        }
        for (wv, a) in w.iter_mut().zip(&acc) {
            *wv = a / total_weight;
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("global model"));
        }
        if round % config.record_every == 0 {
            let x = ModelVector::consensus(n, &w);
            records.push(make_record(problem, &x, round, config.lr, None, round, oracle, eval)?);
        }
    }
    Ok(Trace {
        initial,
        records,
        coins: Vec::new(),
        aggregation_steps: config.rounds,
        communication_rounds: config.rounds,
        final_x: ModelVector::consensus(n, &w),
    })
}

/// Settings for [`reference_gd`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGd {
    pub max_iters: u64,
    /// Stop once `‖∇F(x)‖` falls to this level.
    pub grad_tol: f64,
}

impl Default for ReferenceGd {
    fn default() -> Self {
        Self {
            max_iters: 2_000_000,
            grad_tol: 1e-10,
        }
    }
}

/// Full-batch gradient descent on `F` with step `1/L_F`, from zero, until the
/// gradient norm reaches `grad_tol`. Returns the point reached with its
/// measured gradient norm as residual; errors if the budget runs out first.
pub fn reference_gd(problem: &FlProblem, settings: &ReferenceGd) -> Result<ExactSolution> {
    let l_f = schedules::smoothness_of_objective(problem.smoothness(), problem.lambda(), problem.n());
    let step = 1.0 / l_f;
    let mut x = problem.zeros();
    for _ in 0..settings.max_iters {
        let g = problem.grad(&x)?;
        if g.norm() <= settings.grad_tol {
            return ExactSolution::from_point(problem, x);
        }
        x.axpy(-step, &g);
    }
    let sol = ExactSolution::from_point(problem, x)?;
    if sol.residual_norm <= settings.grad_tol {
        Ok(sol)
    } else {
        Err(Error::invalid(format!(
            "reference descent stopped at gradient norm {:e} after {} iterations",
            sol.residual_norm, settings.max_iters
        )))
    }
}

//! The L2GDV loop, its constant-step special case, and the FedAvg / FedProx
//! baselines.
//!
//! One Bernoulli(`p`) coin `ξ_k` per iteration is shared by every client. On
//! `ξ_k = 0` each client takes a local gradient step
//! `x_i ← x_i − α_k/(n(1−p)) ∇f_i(x_i)`; on `ξ_k = 1` each client moves towards
//! the average, `x_i ← x_i − α_k λ/(np) (x_i − x̄)`. Stacked, this is
//! `x ← x − α_k G(x)` with `G` the unbiased two-branch estimator of `∇F`.
//!
//! A communication round is charged at each boundary with `ξ_k = 0`,
//! `ξ_{k+1} = 1`, when local models have to be shipped for averaging.

mod baselines;

pub use baselines::{reference_gd, run_fedavg, run_fedprox, FedConfig, ReferenceGd};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::model::ModelVector;
use crate::objectives::{ClientObjective, FlProblem};
use crate::rng::{self, StreamRng};
use crate::schedules::StepSchedule;
use crate::theory::ExactSolution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub p: f64,
    pub schedule: StepSchedule,
    /// Iteration budget `K`.
    pub iterations: u64,
    pub seed: u64,
    pub record_every: u64,
}

impl RunConfig {
    pub fn new(p: f64, schedule: StepSchedule, iterations: u64, seed: u64, record_every: u64) -> Result<Self> {
        let cfg = Self {
            p,
            schedule,
            iterations,
            seed,
            record_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::invalid(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iteration budget must be >= 1"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be >= 1"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Data used to score classification accuracy during a run.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation<'a> {
    pub data: &'a Dataset,
    /// One-vs-rest class for multiclass data; `None` for two-class data.
    pub positive_class: Option<u32>,
}

impl Evaluation<'_> {
    /// Accuracy of `x̄` and mean accuracy of the local models.
    fn score(&self, x: &ModelVector) -> Result<(f64, f64)> {
        let avg = self.data.binary_accuracy(x.average().as_slice(), self.positive_class)?;
        let mut local = 0.0;
        for part in x.parts() {
            local += self.data.binary_accuracy(part, self.positive_class)?;
        }
        Ok((avg, local / x.n() as f64))
    }
}

/// Metrics after `k` iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub k: u64,
    /// Step used by iteration `k` (0 for the initial record).
    pub alpha: f64,
    /// `ξ_k`; `None` for the initial record and for baselines.
    pub coin: Option<bool>,
    pub sq_dist: Option<f64>,
    pub f_gap: Option<f64>,
    /// `F(x)`, the training loss.
    pub objective: f64,
    pub test_acc_avg: Option<f64>,
    pub test_acc_local: Option<f64>,
    /// Communication rounds charged during iterations `1..=k`.
    pub comm_rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub initial: Record,
    /// Records at every `k` divisible by `record_every`.
    pub records: Vec<Record>,
    /// Every coin drawn, `ξ_1, …, ξ_K` (empty for baselines).
    pub coins: Vec<bool>,
    /// Iterations with `ξ_k = 1` (rounds, for baselines).
    pub aggregation_steps: u64,
    pub communication_rounds: u64,
    pub final_x: ModelVector,
}

impl Trace {
    pub fn last(&self) -> &Record {
        self.records.last().unwrap_or(&self.initial)
    }
}

/// Counts the `0 → 1` transitions `(ξ_k, ξ_{k+1}) = (0, 1)`.
pub fn count_communications(coins: &[bool]) -> u64 {
    coins.windows(2).filter(|w| !w[0] && w[1]).count() as u64
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// `G(x)`: `∇f(x)/(1−p)` on coin 0, `λ∇ψ(x)/p` on coin 1.
pub fn stochastic_gradient(problem: &FlProblem, x: &ModelVector, p: f64, coin: bool) -> Result<ModelVector> {
    check_p(p)?;
    if coin {
        x.check_shape(problem.n(), problem.d())?;
        Ok(x.psi_grad().scaled(problem.lambda() / p))
    } else {
        Ok(problem.f_grad(x)?.scaled(1.0 / (1.0 - p)))
    }
}

/// In-place update for one iteration given the coin and step.
///
/// The runner is generic over this so alternative update rules can be run
/// through the same loop and harness checks.
pub trait StepRule: Sync {
    fn apply(&self, problem: &FlProblem, x: &mut ModelVector, alpha: f64, p: f64, coin: bool, scratch: &mut [f64]);
}

/// The per-client branch formulas.
#[derive(Debug, Clone, Copy, Default)]
pub struct L2gdvStep;

impl StepRule for L2gdvStep {
    fn apply(&self, problem: &FlProblem, x: &mut ModelVector, alpha: f64, p: f64, coin: bool, scratch: &mut [f64]) {
        let n = problem.n() as f64;
        if coin {
            let mean = x.average();
            let factor = alpha * problem.lambda() / (n * p);
            for part in x.parts_mut() {
                for (v, m) in part.iter_mut().zip(mean.as_slice()) {
                    *v -= factor * (*v - m);
                }
            }
        } else {
            let factor = alpha / (n * (1.0 - p));
            for (c, part) in problem.clients().iter().zip(x.parts_mut()) {
                c.grad_into(part, scratch);
                for (v, g) in part.iter_mut().zip(scratch.iter()) {
                    *v -= factor * g;
                }
            }
        }
    }
}

/// One iteration: draws `ξ_k`, applies the branch update, returns
/// `(x^{k+1}, ξ_k, α_k)`.
pub fn l2gdv_step(
    problem: &FlProblem,
    x: &ModelVector,
    k: u64,
    config: &RunConfig,
    rng: &mut StreamRng,
) -> Result<(ModelVector, bool, f64)> {
    config.validate()?;
    x.check_shape(problem.n(), problem.d())?;
    let alpha = config.schedule.step_at(k)?;
    let coin = rng.random_bool(config.p);
    let mut next = x.clone();
    let mut scratch = vec![0.0; problem.d()];
    L2gdvStep.apply(problem, &mut next, alpha, config.p, coin, &mut scratch);
    Ok((next, coin, alpha))
}

/// Where a run starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StartPoint {
    Zero,
    /// `x(λ) + radius · u` for a unit direction `u` drawn from `seed`; needs
    /// an oracle solution.
    Warm { radius: f64, seed: u64 },
    Explicit(ModelVector),
}

impl StartPoint {
    pub fn resolve(&self, problem: &FlProblem, oracle: Option<&ExactSolution>) -> Result<ModelVector> {
        match self {
            StartPoint::Zero => Ok(problem.zeros()),
            StartPoint::Explicit(x) => {
                x.check_shape(problem.n(), problem.d())?;
                Ok(x.clone())
            }
            StartPoint::Warm { radius, seed } => {
                let sol = oracle.ok_or_else(|| Error::invalid("a warm start needs an oracle solution"))?;
                let mut rng = rng::stream(*seed, rng::START);
                let dir: Vec<f64> = (0..problem.n() * problem.d())
                    .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                    .collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut x = sol.x_star.clone();
                for (v, u) in x.as_mut_slice().iter_mut().zip(&dir) {
                    *v += radius * u / norm;
                }
                Ok(x)
            }
        }
    }
}

pub(crate) fn make_record(
    problem: &FlProblem,
    x: &ModelVector,
    k: u64,
    alpha: f64,
    coin: Option<bool>,
    comm_rounds: u64,
    oracle: Option<&ExactSolution>,
    eval: Option<&Evaluation>,
) -> Result<Record> {
    let objective = problem.value(x)?;
    let (test_acc_avg, test_acc_local) = match eval {
        Some(e) => {
            let (a, l) = e.score(x)?;
            (Some(a), Some(l))
        }
        None => (None, None),
    };
    Ok(Record {
        k,
        alpha,
        coin,
        sq_dist: oracle.map(|o| x.dist_sq(&o.x_star)),
        f_gap: oracle.map(|o| objective - o.f_star),
        objective,
        test_acc_avg,
        test_acc_local,
        comm_rounds,
    })
}

/// Runs `K` iterations from `start`.
pub fn run_l2gdv(
    problem: &FlProblem,
    config: &RunConfig,
    start: &ModelVector,
    oracle: Option<&ExactSolution>,
    eval: Option<&Evaluation>,
) -> Result<Trace> {
    run_with_rule(&L2gdvStep, problem, config, start, oracle, eval)
}

/// [`run_l2gdv`] with a constant step: `θ` is forced to 0.
pub fn run_l2gd(
    problem: &FlProblem,
    config: &RunConfig,
    start: &ModelVector,
    oracle: Option<&ExactSolution>,
    eval: Option<&Evaluation>,
) -> Result<Trace> {
    let mut cfg = *config;
    cfg.schedule = StepSchedule::constant(config.schedule.alpha1())?;
    run_l2gdv(problem, &cfg, start, oracle, eval)
}

/// The L2GDV loop with a caller-supplied update rule.
pub fn run_with_rule(
    rule: &dyn StepRule,
    problem: &FlProblem,
    config: &RunConfig,
    start: &ModelVector,
    oracle: Option<&ExactSolution>,
    eval: Option<&Evaluation>,
) -> Result<Trace> {
    config.validate()?;
    start.check_shape(problem.n(), problem.d())?;
    let mut rng = rng::stream(config.seed, rng::COINS);
    let mut x = start.clone();
    let mut scratch = vec![0.0; problem.d()];
    let initial = make_record(problem, &x, 0, 0.0, None, 0, oracle, eval)?;
    let capacity = (config.iterations / config.record_every) as usize;
    let mut records = Vec::with_capacity(capacity);
    let mut coins = Vec::with_capacity(config.iterations as usize);
    let mut comm = 0u64;
    let mut aggregations = 0u64;
    let mut prev = None;
    for k in 1..=config.iterations {
        let alpha = config.schedule.alpha(k);
        let coin = rng.random_bool(config.p);
        rule.apply(problem, &mut x, alpha, config.p, coin, &mut scratch);
        if coin {
            aggregations += 1;
            if prev == Some(false) {
                comm += 1;
            }
        }
        prev = Some(coin);
        coins.push(coin);
        if k % config.record_every == 0 {
            if !x.is_finite() {
                return Err(Error::NonFinite("iterate"));
            }
            records.push(make_record(problem, &x, k, alpha, Some(coin), comm, oracle, eval)?);
        }
    }
    Ok(Trace {
        initial,
        records,
        coins,
        aggregation_steps: aggregations,
        communication_rounds: comm,
        final_x: x,
    })
}

#[cfg(test)]
mod tests;

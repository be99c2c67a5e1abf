//! The acceptance checks, each returning measured values against targets.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{run_prepared, AggregateTrace, AlgorithmSpec, PartitionSpec, Prepared, ProblemSpec, StartSpec, StepSpec};
use crate::error::Result;
use crate::model::ModelVector;
use crate::objectives::{make_strongly_convex_problem, FlProblem};
use crate::optimizer::{count_communications, stochastic_gradient, FedConfig, L2gdvStep, RunConfig, StepRule};
use crate::rng::{self, StreamRng};
use crate::schedules::StepSchedule;
use crate::theory::{
    self, convex_second_moment_bound, fit_rate, lemma4_check, lemma4_gap, logspace, pl_second_moment_bound,
    second_moment, sigma_at,
};

pub const ALL_CRITERIA: [u8; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

/// Distance of a start point from `x(λ)` for the warm-started rate checks.
const WARM_RADIUS: f64 = 0.1;
pub const FIT_WINDOW: (f64, f64) = (1e2, 1e4);
pub const FIT_POINTS: usize = 40;

static DEFAULT_RULE: L2gdvStep = L2gdvStep;

#[derive(Clone, Copy)]
pub struct VerifySettings<'a> {
    /// Seeds `M` for Monte Carlo expectations.
    pub seeds: usize,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    /// Seed of every generated problem and dataset.
    pub problem_seed: u64,
    /// Update rule used by every optimizer run.
    pub rule: &'a dyn StepRule,
}

impl Default for VerifySettings<'_> {
    fn default() -> Self {
        Self {
            seeds: 200,
            jobs: 0,
            problem_seed: 0,
            rule: &DEFAULT_RULE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// `|measured − target| ≤ tolerance`.
    Within,
    /// `measured ≤ target + tolerance`.
    AtMost,
    /// `measured ≥ target − tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub label: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Part {
    fn new(label: impl Into<String>, measured: f64, relation: Relation, target: f64, tolerance: f64) -> Self {
        let passed = match relation {
            Relation::Within => (measured - target).abs() <= tolerance,
            Relation::AtMost => measured <= target + tolerance,
            Relation::AtLeast => measured >= target - tolerance,
        };
        Self {
            label: label.into(),
            measured,
            target,
            tolerance,
            relation,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub parts: Vec<Part>,
    pub error: Option<String>,
    pub runtime_secs: f64,
    pub runtime_limit_secs: f64,
}

impl CheckResult {
    pub fn summary_line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut details: Vec<String> = self
            .parts
            .iter()
            .map(|p| {
                let rel = match p.relation {
                    Relation::Within => format!("{} ± {}", p.target, p.tolerance),
                    Relation::AtMost => format!("<= {}", p.target + p.tolerance),
                    Relation::AtLeast => format!(">= {}", p.target - p.tolerance),
                };
                format!("{} {:.4e} ({rel}){}", p.label, p.measured, if p.passed { "" } else { " !" })
            })
            .collect();
        if let Some(e) = &self.error {
            details.push(format!("error: {e}"));
        }
        format!(
            "[{status}] {:>2} {}: {} [{:.2} s / {} s]",
            self.id,
            self.name,
            details.join("; "),
            self.runtime_secs,
            self.runtime_limit_secs
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub results: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

fn name_and_limit(id: u8) -> (&'static str, f64) {
    match id {
        1 => ("unbiased stochastic gradient", 1.0),
        2 => ("exact oracle residual", 5.0),
        3 => ("convex fixed-step bound", 60.0),
        4 => ("variance floor vs decay", 120.0),
        5 => ("convex rate exponent", 300.0),
        6 => ("theta = 1 regime", 120.0),
        7 => ("PL bound and rate", 180.0),
        8 => ("second-moment lemmas", 10.0),
        9 => ("exponential vs power lemma", 1.0),
        10 => ("communication accounting", 1.0),
        11 => ("end-to-end logistic regression", 180.0),
        _ => ("unknown criterion", 0.0),
    }
}

/// Runs the listed criteria in order.
pub fn verify(settings: &VerifySettings, criteria: &[u8]) -> VerifyReport {
    let results = criteria
        .iter()
        .map(|&id| {
            let (name, limit) = name_and_limit(id);
            let start = Instant::now();
            let outcome = match id {
                1 => unbiasedness(settings),
                2 => oracle_residuals(settings),
                3 => convex_bound(settings),
                4 => floor_vs_decay(settings),
                5 => convex_rates(settings),
                6 => theta_one(settings),
                7 => pl_setting(settings),
                8 => second_moments(settings),
                9 => lemma4(),
                10 => communications(settings),
                11 => end_to_end(settings),
                _ => Err(crate::Error::invalid(format!("no criterion {id}"))),
            };
            let runtime = start.elapsed().as_secs_f64();
            let (parts, error) = match outcome {
                Ok(parts) => (parts, None),
                Err(e) => (Vec::new(), Some(e.to_string())),
            };
            let passed = error.is_none() && !parts.is_empty() && parts.iter().all(|p| p.passed) && runtime <= limit;
            CheckResult {
                id,
                name: name.to_string(),
                passed,
                parts,
                error,
                runtime_secs: runtime,
                runtime_limit_secs: limit,
            }
        })
        .collect();
    VerifyReport { results }
}

fn standard_problem(settings: &VerifySettings) -> ProblemSpec {
    ProblemSpec::StronglyConvex {
        n: 10,
        d: 5,
        mu: 0.1,
        l: 1.0,
        lambda: 1.0,
        seed: settings.problem_seed,
    }
}

fn pl_problem(settings: &VerifySettings) -> ProblemSpec {
    ProblemSpec::Pl {
        n: 10,
        d: 6,
        rank: 4,
        l: 1.0,
        lambda: 1.0,
        seed: settings.problem_seed,
    }
}

fn l2gdv(alpha1: StepSpec, theta: f64, iterations: u64, record_every: u64) -> AlgorithmSpec {
    AlgorithmSpec::L2gdv {
        p: 0.5,
        alpha1,
        theta,
        iterations,
        record_every,
    }
}

fn warm(settings: &VerifySettings) -> StartSpec {
    StartSpec::Warm {
        radius: WARM_RADIUS,
        seed: settings.problem_seed,
    }
}

fn run(settings: &VerifySettings, prep: &Prepared, alg: AlgorithmSpec, start: StartSpec) -> Result<AggregateTrace> {
    let seeds: Vec<u64> = (0..settings.seeds as u64).collect();
    run_prepared(prep, &alg, &start, &seeds, settings.jobs, settings.rule)
}

/// Thins a curve to about `count` log-spaced points inside `[lo, hi]`, so
/// that each decade carries equal weight in the fit.
pub fn log_thin(curve: &[(f64, f64)], lo: f64, hi: f64, count: usize) -> Vec<(f64, f64)> {
    let window: Vec<(f64, f64)> = curve.iter().copied().filter(|(k, _)| *k >= lo && *k <= hi).collect();
    let mut picked: Vec<(f64, f64)> = Vec::new();
    for target in logspace(lo, hi, count) {
        let best = window
            .iter()
            .min_by(|a, b| (a.0.ln() - target.ln()).abs().total_cmp(&(b.0.ln() - target.ln()).abs()));
        if let Some(&pt) = best {
            if picked.last().is_none_or(|last| last.0 != pt.0) {
                picked.push(pt);
            }
        }
    }
    picked
}

/// Rate fit over the acceptance window on log-spaced points.
pub fn fitted_exponent(curve: &[(f64, f64)]) -> Result<f64> {
    let (lo, hi) = FIT_WINDOW;
    fit_rate(&log_thin(curve, lo, hi, FIT_POINTS), lo, hi)
}

fn random_point(problem: &FlProblem, scale: f64, rng: &mut StreamRng) -> ModelVector {
    let data = (0..problem.n() * problem.d())
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    ModelVector::new(problem.n(), problem.d(), data).expect("finite coordinates")
}

fn unbiasedness(settings: &VerifySettings) -> Result<Vec<Part>> {
    let mut rng = rng::stream(settings.problem_seed, "verify-unbiased");
    let mut worst = 0.0f64;
    for t in 0..100u64 {
        let n = rng.random_range(1..=20);
        let d = rng.random_range(1..=10);
        let lambda = rng.random_range(0.0..10.0);
        let mu: f64 = rng.random_range(0.01..1.0);
        let l = if n * d < 2 { mu } else { 1.0 + mu };
        let problem = make_strongly_convex_problem(n, d, mu, l, lambda, settings.problem_seed + t)?;
        let x = random_point(&problem, 5.0, &mut rng);
        let p = rng.random_range(0.01..0.99);
        let mut avg = stochastic_gradient(&problem, &x, p, false)?.scaled(1.0 - p);
        avg.axpy(p, &stochastic_gradient(&problem, &x, p, true)?);
        let g = problem.grad(&x)?;
        worst = worst.max(avg.dist_sq(&g).sqrt() / g.norm().max(f64::MIN_POSITIVE));
    }
    Ok(vec![Part::new("max relative error", worst, Relation::AtMost, 0.0, 1e-12)])
}

fn oracle_residuals(settings: &VerifySettings) -> Result<Vec<Part>> {
    let mut rng = rng::stream(settings.problem_seed, "verify-oracle");
    let mut worst = 0.0f64;
    for t in 0..20u64 {
        let n = rng.random_range(1..=20);
        let d = rng.random_range(1..=10);
        let mu = rng.random_range(0.01..1.0);
        let l = mu + rng.random_range(0.0..10.0);
        let l = if n * d < 2 { mu } else { l };
        let lambda = rng.random_range(0.0..10.0);
        let problem = make_strongly_convex_problem(n, d, mu, l, lambda, settings.problem_seed + t)?;
        let sol = theory::solve_exact(&problem)?;
        worst = worst.max(problem.grad(&sol.x_star)?.norm());
    }
    Ok(vec![Part::new("max ‖∇F(x(λ))‖", worst, Relation::AtMost, 0.0, 1e-10)])
}

/// Largest `mean / (bound + 3 SE)` over the recorded iterations.
fn bound_ratio(agg: &AggregateTrace, use_gap: bool) -> Result<f64> {
    let mut worst = 0.0f64;
    for r in &agg.rows {
        let (mean, se) = if use_gap {
            (r.mean_f_gap, r.se_f_gap)
        } else {
            (r.mean_sq_dist, r.se_sq_dist)
        };
        let (mean, se, bound) = match (mean, se, r.bound) {
            (Some(m), Some(s), Some(b)) => (m, s, b),
            _ => return Err(crate::Error::invalid("bound comparison needs oracle and bound columns")),
        };
        worst = worst.max(mean / (bound + 3.0 * se));
    }
    Ok(worst)
}

fn convex_bound(settings: &VerifySettings) -> Result<Vec<Part>> {
    let prep = standard_problem(settings).prepare(Some(0.5))?;
    let agg = run(settings, &prep, l2gdv(StepSpec::ConvexCap { scale: 1.0 }, 0.0, 5000, 10), StartSpec::Zero)?;
    Ok(vec![Part::new(
        "max mean/(bound+3SE)",
        bound_ratio(&agg, false)?,
        Relation::AtMost,
        1.0,
        0.0,
    )])
}

fn floor_vs_decay(settings: &VerifySettings) -> Result<Vec<Part>> {
    let prep = standard_problem(settings).prepare(Some(0.5))?;
    let cap = StepSpec::ConvexCap { scale: 1.0 };
    let fixed = run(settings, &prep, l2gdv(cap, 0.0, 5000, 10), warm(settings))?;
    let decay = run(settings, &prep, l2gdv(cap, 0.7, 5000, 10), warm(settings))?;
    let tail: Vec<f64> = fixed
        .sq_dist_curve()
        .into_iter()
        .filter(|(k, _)| *k >= 500.0)
        .map(|(_, e)| e)
        .collect();
    let floor = tail.iter().sum::<f64>() / tail.len() as f64;
    let at = |agg: &AggregateTrace, k| agg.row_at(k).and_then(|r| r.mean_sq_dist).unwrap_or(f64::NAN);
    let end = at(&decay, 5000);
    Ok(vec![
        Part::new("floor(θ=0)/err(θ=0.7, k=5000)", floor / end, Relation::AtLeast, 10.0, 0.0),
        Part::new("err(5000)/err(50), θ=0.7", end / at(&decay, 50), Relation::AtMost, 0.1, 0.0),
    ])
}

fn convex_rates(settings: &VerifySettings) -> Result<Vec<Part>> {
    let prep = standard_problem(settings).prepare(Some(0.5))?;
    let mut parts = Vec::new();
    for theta in [0.3, 0.5, 0.7] {
        let agg = run(
            settings,
            &prep,
            l2gdv(StepSpec::ConvexCap { scale: 1.0 }, theta, 10_000, 10),
            warm(settings),
        )?;
        parts.push(Part::new(
            format!("θ={theta} exponent"),
            fitted_exponent(&agg.sq_dist_curve())?,
            Relation::Within,
            theta,
            0.15,
        ));
    }
    Ok(parts)
}

fn theta_one(settings: &VerifySettings) -> Result<Vec<Part>> {
    let prep = standard_problem(settings).prepare(Some(0.5))?;
    let c = prep.constants.clone().expect("constants requested");
    let alpha1 = c.convex_cap;
    let regime = theory::bound_rate_exponent(1.0, alpha1, c.mu / c.n as f64)?;
    let agg = run(settings, &prep, l2gdv(StepSpec::Value(alpha1), 1.0, 10_000, 10), StartSpec::Zero)?;
    Ok(vec![Part::new(
        "θ=1 exponent",
        fitted_exponent(&agg.sq_dist_curve())?,
        Relation::Within,
        regime.exponent(),
        0.15,
    )])
}

fn pl_setting(settings: &VerifySettings) -> Result<Vec<Part>> {
    let prep = pl_problem(settings).prepare(Some(0.5))?;
    let cap = StepSpec::PlCap { scale: 1.0 };
    let fixed = run(settings, &prep, l2gdv(cap, 0.0, 5000, 10), StartSpec::Zero)?;
    let decay = run(settings, &prep, l2gdv(cap, 0.5, 10_000, 10), warm(settings))?;
    Ok(vec![
        Part::new("max gap/(bound+3SE)", bound_ratio(&fixed, true)?, Relation::AtMost, 1.0, 0.0),
        Part::new("θ=0.5 gap exponent", fitted_exponent(&decay.f_gap_curve())?, Relation::Within, 0.5, 0.15),
    ])
}

/// `count` iterates of a decaying run from a far start, one every `stride`.
fn iterates(settings: &VerifySettings, problem: &FlProblem, alpha1: f64, count: usize, stride: u64) -> Result<Vec<ModelVector>> {
    let cfg = RunConfig::new(0.5, StepSchedule::new(alpha1, 0.5)?, 1, settings.problem_seed, 1)?;
    let mut rng = rng::stream(settings.problem_seed, rng::COINS);
    let mut x = random_point(problem, 5.0, &mut rng::stream(settings.problem_seed, rng::START));
    let mut out = Vec::with_capacity(count);
    let mut scratch = vec![0.0; problem.d()];
    let mut k = 0u64;
    while out.len() < count {
        k += 1;
        let coin = rng.random_bool(cfg.p);
        settings
            .rule
            .apply(problem, &mut x, cfg.schedule.step_at(k)?, cfg.p, coin, &mut scratch);
        if k.is_multiple_of(stride) {
            out.push(x.clone());
        }
    }
    Ok(out)
}

fn second_moments(settings: &VerifySettings) -> Result<Vec<Part>> {
    let p = 0.5;
    let sc = standard_problem(settings).prepare(Some(p))?;
    let c = sc.constants.clone().expect("constants requested");
    let sol = sc.oracle.as_ref().expect("quadratic oracle");
    let sigma_sq = c.sigma_sq.expect("quadratic constants");
    let mut worst_convex = 0.0f64;
    for x in iterates(settings, &sc.problem, c.convex_cap, 100, 10)? {
        let lhs = second_moment(&sc.problem, &x, p)?;
        let gap = sc.problem.value(&x)? - sol.f_star;
        worst_convex = worst_convex.max(lhs / convex_second_moment_bound(c.calligraphic_l, gap, sigma_sq));
    }

    let pl = pl_problem(settings).prepare(Some(p))?;
    let c = pl.constants.clone().expect("constants requested");
    let set = theory::solution_set(&pl.problem)?;
    let (mu_pl, sigma_m_sq) = (c.mu_pl.expect("quadratic"), c.sigma_m_sq.expect("quadratic"));
    let mut worst_pl = 0.0f64;
    for x in iterates(settings, &pl.problem, c.convex_cap, 100, 10)? {
        let lhs = second_moment(&pl.problem, &x, p)?;
        let gap = pl.problem.value(&x)? - set.solution.f_star;
        // The bound needs σ² at the projection onto the solution set.
        let sm = sigma_m_sq.max(sigma_at(&pl.problem, &set.project(&x), p)?);
        worst_pl = worst_pl.max(lhs / pl_second_moment_bound(c.zeta, mu_pl, gap, sm));
    }
    Ok(vec![
        Part::new("convex max E‖G‖²/bound", worst_convex, Relation::AtMost, 1.0, 0.0),
        Part::new("PL max E‖G‖²/bound", worst_pl, Relation::AtMost, 1.0, 0.0),
    ])
}

fn lemma4() -> Result<Vec<Part>> {
    let grid = [0.1, 1.0, 10.0];
    let xs = logspace(1e-3, 1e3, 200);
    let mut violations = 0u32;
    let mut worst_eq = 0.0f64;
    for v in grid {
        for a in grid {
            violations += xs.iter().filter(|&&x| !lemma4_check(v, a, &[x])).count() as u32;
            worst_eq = worst_eq.max(lemma4_gap(v, a, a / v).abs());
        }
    }
    Ok(vec![
        Part::new("violations", f64::from(violations), Relation::AtMost, 0.0, 0.0),
        Part::new("max |gap| at x=a/v", worst_eq, Relation::AtMost, 0.0, 1e-12),
    ])
}

fn communications(settings: &VerifySettings) -> Result<Vec<Part>> {
    let cases: [(&[u8], u64); 5] = [
        (&[0, 0, 1, 1, 0, 1], 2),
        (&[1, 1, 1, 1], 0),
        (&[0, 0, 0], 0),
        (&[0, 1, 0, 1, 0, 1, 0], 3),
        (&[1, 0, 0, 1, 1, 0, 1, 1], 2),
    ];
    let mismatches = cases
        .iter()
        .filter(|(seq, hand)| {
            let coins: Vec<bool> = seq.iter().map(|v| *v == 1).collect();
            count_communications(&coins) != *hand
        })
        .count();
    let (p, k) = (0.5, 10_000u64);
    let mut rng = rng::stream(settings.problem_seed, rng::COINS);
    let coins: Vec<bool> = (0..k).map(|_| rng.random_bool(p)).collect();
    let frac = coins.iter().filter(|c| **c).count() as f64 / k as f64;
    let sd = (p * (1.0 - p) / k as f64).sqrt();
    Ok(vec![
        Part::new("hand-count mismatches", mismatches as f64, Relation::AtMost, 0.0, 0.0),
        Part::new("ξ=1 fraction", frac, Relation::Within, p, 3.0 * sd),
    ])
}

/// Synthetic two-class problem of the end-to-end check.
pub fn end_to_end_problem(seed: u64) -> ProblemSpec {
    ProblemSpec::LogisticSynth {
        samples: 2000,
        features: 2,
        classes: 2,
        separation: 10.0,
        n: 20,
        partition: PartitionSpec::NonIid { shards_per_client: 2 },
        l2: 0.01,
        lambda: 1.0,
        bias: true,
        positive_class: None,
        seed,
    }
}

fn end_to_end(settings: &VerifySettings) -> Result<Vec<Part>> {
    let p = 0.5;
    let prep = end_to_end_problem(settings.problem_seed).prepare(Some(p))?;
    let seeds: Vec<u64> = (0..settings.seeds.min(20) as u64).collect();
    let alg = l2gdv(StepSpec::ConvexCap { scale: 1.0 }, 0.3, 5000, 50);
    let agg = run_prepared(&prep, &alg, &StartSpec::Zero, &seeds, settings.jobs, settings.rule)?;
    let last = agg.rows.last().expect("recorded rows");
    let fed = FedConfig {
        rounds: 200,
        local_epochs: 5,
        client_fraction: 0.5,
        lr: 0.1,
        prox_mu: 0.0,
        seed: 0,
        record_every: 10,
    };
    let avg = run_prepared(&prep, &AlgorithmSpec::FedAvg(fed), &StartSpec::Zero, &seeds, settings.jobs, settings.rule)?;
    let prox = run_prepared(
        &prep,
        &AlgorithmSpec::FedProx(FedConfig { prox_mu: 0.1, ..fed }),
        &StartSpec::Zero,
        &seeds,
        settings.jobs,
        settings.rule,
    )?;
    let acc = |a: &AggregateTrace| a.rows.last().and_then(|r| r.test_acc_mean).unwrap_or(f64::NAN);
    Ok(vec![
        Part::new("L2GDV F-gap at K", last.mean_f_gap.unwrap_or(f64::NAN), Relation::AtMost, 1e-2, 0.0),
        Part::new("L2GDV train accuracy (x̄)", acc(&agg), Relation::AtLeast, 0.99, 0.0),
        Part::new("FedAvg train accuracy", acc(&avg), Relation::AtLeast, 0.99, 0.0),
        Part::new("FedProx train accuracy", acc(&prox), Relation::AtLeast, 0.99, 0.0),
    ])
}

//! Experiment orchestration: specs, multi-seed runs, aggregation, output and
//! the acceptance checks.

mod config;
mod output;
mod verify;

pub use config::{parse_seeds, Config, ENV_PREFIX, KNOWN_KEYS};
pub use output::{emit_csv, emit_json, read_csv, CsvRow, CSV_HEADER};
pub use verify::{
    end_to_end_problem, fitted_exponent, log_thin, verify, CheckResult, Part, Relation, VerifyReport, VerifySettings,
    ALL_CRITERIA, FIT_POINTS, FIT_WINDOW,
};

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{self, Dataset};
use crate::error::{Error, Result};
use crate::model::ModelVector;
use crate::objectives::{make_pl_problem, make_strongly_convex_problem, FlProblem};
use crate::optimizer::{
    self, reference_gd, Evaluation, FedConfig, L2gdvStep, ReferenceGd, RunConfig, StartPoint, StepRule, Trace,
};
use crate::schedules::StepSchedule;
use crate::theory::{self, bound_convex_fixed, bound_pl_fixed, constants_report, ConstantsReport, ExactSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PartitionSpec {
    Iid,
    NonIid { shards_per_client: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProblemSpec {
    StronglyConvex {
        n: usize,
        d: usize,
        mu: f64,
        l: f64,
        lambda: f64,
        seed: u64,
    },
    Pl {
        n: usize,
        d: usize,
        rank: usize,
        l: f64,
        lambda: f64,
        seed: u64,
    },
    LogisticSynth {
        samples: usize,
        features: usize,
        classes: u32,
        separation: f64,
        n: usize,
        partition: PartitionSpec,
        l2: f64,
        lambda: f64,
        bias: bool,
        positive_class: Option<u32>,
        seed: u64,
    },
    LogisticIdx {
        images: PathBuf,
        labels: PathBuf,
        limit: Option<usize>,
        n: usize,
        partition: PartitionSpec,
        l2: f64,
        lambda: f64,
        bias: bool,
        positive_class: Option<u32>,
        seed: u64,
    },
}

/// How `α_1` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSpec {
    Value(f64),
    /// `scale / (2𝓛)`.
    ConvexCap { scale: f64 },
    /// `scale · μ²/(2ζL_F)`.
    PlCap { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlgorithmSpec {
    L2gdv {
        p: f64,
        alpha1: StepSpec,
        theta: f64,
        iterations: u64,
        record_every: u64,
    },
    FedAvg(FedConfig),
    FedProx(FedConfig),
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::L2gdv { theta, .. } if *theta == 0.0 => "l2gd",
            AlgorithmSpec::L2gdv { .. } => "l2gdv",
            AlgorithmSpec::FedAvg(_) => "fedavg",
            AlgorithmSpec::FedProx(_) => "fedprox",
        }
    }

    fn p(&self) -> Option<f64> {
        match self {
            AlgorithmSpec::L2gdv { p, .. } => Some(*p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StartSpec {
    Zero,
    Warm { radius: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub algorithm: AlgorithmSpec,
    pub seeds: Vec<u64>,
    pub start: StartSpec,
    pub out: Option<PathBuf>,
}

fn partition_from(config: &Config) -> Result<PartitionSpec> {
    match config.get("partition").unwrap_or("iid") {
        "iid" => Ok(PartitionSpec::Iid),
        "noniid" | "non-iid" => Ok(PartitionSpec::NonIid {
            shards_per_client: config.or("shards_per_client", 2)?,
        }),
        other => Err(Error::Config(format!("unknown partition `{other}`"))),
    }
}

fn step_from(config: &Config) -> Result<StepSpec> {
    let scale = config.or("alpha_scale", 1.0)?;
    match config.get("alpha1").unwrap_or("convex_cap") {
        "convex_cap" => Ok(StepSpec::ConvexCap { scale }),
        "pl_cap" => Ok(StepSpec::PlCap { scale }),
        _ => Ok(StepSpec::Value(config.require::<f64>("alpha1")? * scale)),
    }
}

impl ExperimentSpec {
    /// Builds a spec from a flat config; see `KNOWN_KEYS` and the README for
    /// the keys and their defaults.
    pub fn from_config(config: &Config) -> Result<Self> {
        config.check_known()?;
        let seed = config.or("problem_seed", 0u64)?;
        let lambda = config.or("lambda", 1.0)?;
        let problem = match config.get("problem").unwrap_or("strongly_convex") {
            "strongly_convex" => ProblemSpec::StronglyConvex {
                n: config.or("n", 10)?,
                d: config.or("d", 5)?,
                mu: config.or("mu", 0.1)?,
                l: config.or("L", 1.0)?,
                lambda,
                seed,
            },
            "pl" => ProblemSpec::Pl {
                n: config.or("n", 10)?,
                d: config.or("d", 6)?,
                rank: config.or("rank", 4)?,
                l: config.or("L", 1.0)?,
                lambda,
                seed,
            },
            "logistic_synth" => ProblemSpec::LogisticSynth {
                samples: config.or("samples", 2000)?,
                features: config.or("features", 2)?,
                classes: config.or("classes", 2)?,
                separation: config.or("separation", 10.0)?,
                n: config.or("n", 20)?,
                partition: partition_from(config)?,
                l2: config.or("l2", 0.01)?,
                lambda,
                bias: config.or("bias", true)?,
                positive_class: config.parsed("positive_class")?,
                seed,
            },
            "logistic_idx" => {
                let images: PathBuf = config.require::<String>("images")?.into();
                let labels: PathBuf = config.require::<String>("labels")?.into();
                for path in [&images, &labels] {
                    if !path.exists() {
                        return Err(Error::Config(format!("file {} does not exist", path.display())));
                    }
                }
                ProblemSpec::LogisticIdx {
                    images,
                    labels,
                    limit: config.parsed("limit")?,
                    n: config.or("n", 100)?,
                    partition: partition_from(config)?,
                    l2: config.or("l2", 0.01)?,
                    lambda,
                    bias: config.or("bias", true)?,
                    positive_class: config.parsed("positive_class")?,
                    seed,
                }
            }
            other => return Err(Error::Config(format!("unknown problem `{other}`"))),
        };
        let record_every = config.or("record_every", 10)?;
        let fed = |prox: f64| -> Result<FedConfig> {
            Ok(FedConfig {
                rounds: config.or("rounds", 200)?,
                local_epochs: config.or("local_epochs", 5)?,
                client_fraction: config.or("client_fraction", 1.0)?,
                lr: config.or("lr", 0.1)?,
                prox_mu: prox,
                seed: 0,
                record_every,
            })
        };
        let algorithm = match config.get("algorithm").unwrap_or("l2gdv") {
            name @ ("l2gdv" | "l2gd") => AlgorithmSpec::L2gdv {
                p: config.or("p", 0.5)?,
                alpha1: step_from(config)?,
                theta: if name == "l2gd" { 0.0 } else { config.or("theta", 0.5)? },
                iterations: config.or("K", 5000)?,
                record_every,
            },
            "fedavg" => AlgorithmSpec::FedAvg(fed(0.0)?),
            "fedprox" => AlgorithmSpec::FedProx(fed(config.or("prox_mu", 0.1)?)?),
            other => return Err(Error::Config(format!("unknown algorithm `{other}`"))),
        };
        let start = match config.get("start").unwrap_or("zero") {
            "zero" => StartSpec::Zero,
            "warm" => StartSpec::Warm {
                radius: config.or("start_radius", 0.1)?,
                seed: config.or("start_seed", 0)?,
            },
            other => return Err(Error::Config(format!("unknown start `{other}`"))),
        };
        let seeds = parse_seeds(config.get("seeds").unwrap_or("0..10"))?;
        Ok(Self {
            problem,
            algorithm,
            seeds,
            start,
            out: config.parsed::<String>("out")?.map(PathBuf::from),
        })
    }
}

/// A problem with everything a run needs precomputed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: FlProblem,
    /// Exact solution for quadratics, reference descent point for logistic.
    pub oracle: Option<ExactSolution>,
    pub constants: Option<ConstantsReport>,
    /// Training data, scored for accuracy during runs.
    pub train: Option<(Dataset, Option<u32>)>,
}

fn logistic_from(
    ds: Dataset,
    n: usize,
    partition: PartitionSpec,
    l2: f64,
    lambda: f64,
    bias: bool,
    positive_class: Option<u32>,
    seed: u64,
) -> Result<(FlProblem, Dataset)> {
    let ds = if bias { ds.with_bias() } else { ds };
    let part = match partition {
        PartitionSpec::Iid => dataio::partition_iid(&ds, n, seed)?,
        PartitionSpec::NonIid { shards_per_client } => dataio::partition_noniid(&ds, n, shards_per_client, seed)?,
    };
    let problem = dataio::logistic_problem(&ds, &part, l2, lambda, positive_class)?;
    Ok((problem, ds))
}

impl ProblemSpec {
    /// Builds the problem, its oracle and (given `p`) its constants.
    pub fn prepare(&self, p: Option<f64>) -> Result<Prepared> {
        let (problem, train) = match self {
            ProblemSpec::StronglyConvex { n, d, mu, l, lambda, seed } => {
                (make_strongly_convex_problem(*n, *d, *mu, *l, *lambda, *seed)?, None)
            }
            ProblemSpec::Pl { n, d, rank, l, lambda, seed } => (make_pl_problem(*n, *d, *rank, *l, *lambda, *seed)?, None),
            ProblemSpec::LogisticSynth {
                samples,
                features,
                classes,
                separation,
                n,
                partition,
                l2,
                lambda,
                bias,
                positive_class,
                seed,
            } => {
                let ds = dataio::synth_gaussian_classes(*samples, *features, *classes, *separation, *seed)?;
                let (problem, ds) = logistic_from(ds, *n, *partition, *l2, *lambda, *bias, *positive_class, *seed)?;
                (problem, Some((ds, *positive_class)))
            }
            ProblemSpec::LogisticIdx {
                images,
                labels,
                limit,
                n,
                partition,
                l2,
                lambda,
                bias,
                positive_class,
                seed,
            } => {
                let mut ds = dataio::load_idx(images, labels)?;
                if let Some(limit) = limit {
                    let keep: Vec<usize> = (0..(*limit).min(ds.len())).collect();
                    ds = ds.subset(&keep)?;
                }
                let (problem, ds) = logistic_from(ds, *n, *partition, *l2, *lambda, *bias, *positive_class, *seed)?;
                (problem, Some((ds, *positive_class)))
            }
        };
        let oracle = if problem.is_quadratic() {
            Some(theory::solve_exact(&problem)?)
        } else {
            Some(reference_gd(&problem, &ReferenceGd::default())?)
        };
        let constants = p.map(|p| constants_report(&problem, p, 0)).transpose()?;
        Ok(Prepared {
            problem,
            oracle,
            constants,
            train,
        })
    }
}

/// Which quantity the `bound` column refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    /// Strongly convex fixed step: bounds `E‖x^k − x(λ)‖²`.
    SqDist,
    /// PL fixed step: bounds `E[F(x^k) − F*]`.
    FGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub k: u64,
    pub alpha_k: f64,
    pub mean_sq_dist: Option<f64>,
    pub se_sq_dist: Option<f64>,
    pub mean_f_gap: Option<f64>,
    pub se_f_gap: Option<f64>,
    pub bound: Option<f64>,
    pub comm_rounds_mean: f64,
    pub test_acc_mean: Option<f64>,
    pub test_acc_local_mean: Option<f64>,
    pub objective_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateTrace {
    pub algorithm: String,
    pub seeds: Vec<u64>,
    pub alpha1: f64,
    pub theta: Option<f64>,
    pub constants: Option<ConstantsReport>,
    pub bound_kind: Option<BoundKind>,
    pub initial_sq_dist: Option<f64>,
    pub initial_f_gap: Option<f64>,
    pub rows: Vec<AggregateRow>,
}

impl AggregateTrace {
    pub fn row_at(&self, k: u64) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    /// `(k, mean ‖x^k − x(λ)‖²)` pairs.
    pub fn sq_dist_curve(&self) -> Vec<(f64, f64)> {
        self.rows.iter().filter_map(|r| Some((r.k as f64, r.mean_sq_dist?))).collect()
    }

    /// `(k, mean F-gap)` pairs.
    pub fn f_gap_curve(&self) -> Vec<(f64, f64)> {
        self.rows.iter().filter_map(|r| Some((r.k as f64, r.mean_f_gap?))).collect()
    }
}

/// Mean and standard error `s/√M`, summed in the given order.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn optional_mean_se(values: Option<Vec<f64>>) -> (Option<f64>, Option<f64>) {
    match values {
        Some(v) => {
            let (m, s) = mean_se(&v);
            (Some(m), Some(s))
        }
        None => (None, None),
    }
}

/// Per-`k` mean and standard error over traces (in the order given).
pub fn aggregate(traces: &[Trace]) -> Result<Vec<AggregateRow>> {
    let first = traces.first().ok_or_else(|| Error::invalid("nothing to aggregate"))?;
    if traces.iter().any(|t| t.records.len() != first.records.len()) {
        return Err(Error::invalid("traces record different iterations"));
    }
    let mut rows = Vec::with_capacity(first.records.len());
    for (j, rec) in first.records.iter().enumerate() {
        let at: Vec<&optimizer::Record> = traces.iter().map(|t| &t.records[j]).collect();
        if at.iter().any(|r| r.k != rec.k) {
            return Err(Error::invalid("traces record different iterations"));
        }
        let collect = |f: fn(&optimizer::Record) -> Option<f64>| -> Option<Vec<f64>> { at.iter().map(|r| f(r)).collect() };
        let (mean_sq_dist, se_sq_dist) = optional_mean_se(collect(|r| r.sq_dist));
        let (mean_f_gap, se_f_gap) = optional_mean_se(collect(|r| r.f_gap));
        let comm: Vec<f64> = at.iter().map(|r| r.comm_rounds as f64).collect();
        let objective: Vec<f64> = at.iter().map(|r| r.objective).collect();
        rows.push(AggregateRow {
            k: rec.k,
            alpha_k: rec.alpha,
            mean_sq_dist,
            se_sq_dist,
            mean_f_gap,
            se_f_gap,
            bound: None,
            comm_rounds_mean: mean_se(&comm).0,
            test_acc_mean: collect(|r| r.test_acc_avg).map(|v| mean_se(&v).0),
            test_acc_local_mean: collect(|r| r.test_acc_local).map(|v| mean_se(&v).0),
            objective_mean: mean_se(&objective).0,
        });
    }
    Ok(rows)
}

/// Resolves the start point of an L2GDV-type run.
pub fn start_point(prep: &Prepared, start: &StartSpec) -> Result<ModelVector> {
    let sp = match *start {
        StartSpec::Zero => StartPoint::Zero,
        StartSpec::Warm { radius, seed } => StartPoint::Warm { radius, seed },
    };
    sp.resolve(&prep.problem, prep.oracle.as_ref())
}

fn resolve_alpha(spec: StepSpec, constants: Option<&ConstantsReport>) -> Result<f64> {
    let need = || Error::Config("step cap requested but constants are unavailable".into());
    match spec {
        StepSpec::Value(v) => Ok(v),
        StepSpec::ConvexCap { scale } => Ok(scale * constants.ok_or_else(need)?.convex_cap),
        StepSpec::PlCap { scale } => Ok(scale * constants.and_then(|c| c.pl_cap).ok_or_else(need)?),
    }
}

fn run_seeds<F>(seeds: &[u64], jobs: usize, run: F) -> Result<Vec<Trace>>
where
    F: Fn(u64) -> Result<Trace> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<Trace>> = pool.install(|| seeds.par_iter().map(|&s| run(s)).collect());
    seeds
        .iter()
        .zip(results)
        .map(|(&seed, r)| r.map_err(|e| Error::Seed { seed, source: Box::new(e) }))
        .collect()
}

/// Runs every seed of `algorithm` on a prepared problem and aggregates.
///
/// `jobs = 0` uses all cores. Results depend on neither `jobs` nor the order
/// of `seeds`; duplicate seeds count once.
pub fn run_prepared(
    prep: &Prepared,
    algorithm: &AlgorithmSpec,
    start: &StartSpec,
    seeds: &[u64],
    jobs: usize,
    rule: &dyn StepRule,
) -> Result<AggregateTrace> {
    if seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    // sums run in seed order whatever order the list was given in
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    let seeds = &seeds[..];
    let x0 = start_point(prep, start)?;
    let eval = prep.train.as_ref().map(|(data, positive_class)| Evaluation {
        data,
        positive_class: *positive_class,
    });
    let oracle = prep.oracle.as_ref();
    let initial_sq_dist = oracle.map(|o| x0.dist_sq(&o.x_star));
    let initial_f_gap = oracle.map(|o| prep.problem.value(&x0).map(|v| v - o.f_star)).transpose()?;
    let (alpha1, theta, traces) = match algorithm {
        AlgorithmSpec::L2gdv {
            p,
            alpha1,
            theta,
            iterations,
            record_every,
        } => {
            let alpha1 = resolve_alpha(*alpha1, prep.constants.as_ref())?;
            let base = RunConfig::new(*p, StepSchedule::new(alpha1, *theta)?, *iterations, 0, *record_every)?;
            let traces = run_seeds(seeds, jobs, |s| {
                optimizer::run_with_rule(rule, &prep.problem, &base.with_seed(s), &x0, oracle, eval.as_ref())
            })?;
            (alpha1, Some(*theta), traces)
        }
        AlgorithmSpec::FedAvg(cfg) | AlgorithmSpec::FedProx(cfg) => {
            let w0 = x0.average();
            let prox = matches!(algorithm, AlgorithmSpec::FedProx(_));
            let traces = run_seeds(seeds, jobs, |s| {
                let c = FedConfig { seed: s, ..*cfg };
                if prox {
                    optimizer::run_fedprox(&prep.problem, &c, w0.as_slice(), oracle, eval.as_ref())
                } else {
                    optimizer::run_fedavg(&prep.problem, &c, w0.as_slice(), oracle, eval.as_ref())
                }
            })?;
            (cfg.lr, None, traces)
        }
    };
    let mut rows = aggregate(&traces)?;
    let mut bound_kind = None;
    if let (Some(0.0), Some(c)) = (theta, prep.constants.as_ref()) {
        if let (Some(mu_f), Some(sigma_sq), Some(init)) = (c.mu_f, c.sigma_sq, initial_sq_dist) {
            bound_kind = Some(BoundKind::SqDist);
            for r in &mut rows {
                r.bound = Some(bound_convex_fixed(r.k, alpha1, mu_f, sigma_sq, init));
            }
        } else if let (Some(mu_pl), Some(sigma_m_sq), Some(gap)) = (c.mu_pl, c.sigma_m_sq, initial_f_gap) {
            bound_kind = Some(BoundKind::FGap);
            for r in &mut rows {
                r.bound = Some(bound_pl_fixed(r.k, alpha1, mu_pl, c.l_f, sigma_m_sq, gap));
            }
        }
    }
    Ok(AggregateTrace {
        algorithm: algorithm.name().to_string(),
        seeds: seeds.to_vec(),
        alpha1,
        theta,
        constants: prep.constants.clone(),
        bound_kind,
        initial_sq_dist,
        initial_f_gap,
        rows,
    })
}

/// Prepares the problem of `spec` and runs all its seeds.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<AggregateTrace> {
    let prep = spec.problem.prepare(spec.algorithm.p())?;
    run_prepared(&prep, &spec.algorithm, &spec.start, &spec.seeds, jobs, &L2gdvStep)
}

#[cfg(test)]
mod tests;

use super::*;
use crate::objectives::FlProblem;
use crate::theory::bound_convex_fixed;

fn small_convex() -> ProblemSpec {
    ProblemSpec::StronglyConvex {
        n: 4,
        d: 3,
        mu: 0.2,
        l: 1.0,
        lambda: 1.0,
        seed: 3,
    }
}

fn l2gd(iterations: u64, record_every: u64) -> AlgorithmSpec {
    AlgorithmSpec::L2gdv {
        p: 0.5,
        alpha1: StepSpec::ConvexCap { scale: 1.0 },
        theta: 0.0,
        iterations,
        record_every,
    }
}

fn run_small(seeds: &[u64], jobs: usize) -> AggregateTrace {
    let prep = small_convex().prepare(Some(0.5)).unwrap();
    run_prepared(&prep, &l2gd(100, 10), &StartSpec::Zero, seeds, jobs, &L2gdvStep).unwrap()
}

#[test]
fn mean_se_examples() {
    assert_eq!(mean_se(&[3.0]), (3.0, 0.0));
    assert_eq!(mean_se(&[2.0, 2.0, 2.0, 2.0]), (2.0, 0.0));
    let (m, s) = mean_se(&[1.0, 3.0]);
    assert_eq!(m, 2.0);
    // sample sd sqrt(2), over sqrt(2)
    assert!((s - 1.0).abs() < 1e-15);
}

#[test]
fn single_seed_has_zero_standard_error() {
    let agg = run_small(&[7], 1);
    assert!(agg.rows.iter().all(|r| r.se_sq_dist == Some(0.0) && r.se_f_gap == Some(0.0)));
}

#[test]
fn record_cadence_and_bound_column() {
    let agg = run_small(&[0, 1, 2], 1);
    assert_eq!(agg.rows.len(), 10);
    assert_eq!(agg.rows.iter().map(|r| r.k).collect::<Vec<_>>(), (1..=10).map(|i| i * 10).collect::<Vec<_>>());
    assert_eq!(agg.bound_kind, Some(BoundKind::SqDist));

    // recompute from scratch, without going through the harness
    let prep = small_convex().prepare(Some(0.5)).unwrap();
    let c = prep.constants.as_ref().unwrap();
    let x_star = &prep.oracle.as_ref().unwrap().x_star;
    let init = x_star.norm_sq();
    for r in &agg.rows {
        let want = bound_convex_fixed(r.k, c.convex_cap, c.mu_f.unwrap(), c.sigma_sq.unwrap(), init);
        assert_eq!(r.bound, Some(want));
        assert!(r.mean_sq_dist.unwrap() <= want);
    }
}

#[test]
fn decaying_schedule_has_no_bound_column() {
    let prep = small_convex().prepare(Some(0.5)).unwrap();
    let alg = AlgorithmSpec::L2gdv {
        p: 0.5,
        alpha1: StepSpec::Value(0.1),
        theta: 0.5,
        iterations: 50,
        record_every: 10,
    };
    let agg = run_prepared(&prep, &alg, &StartSpec::Zero, &[0], 1, &L2gdvStep).unwrap();
    assert!(agg.bound_kind.is_none() && agg.rows.iter().all(|r| r.bound.is_none()));
    assert_eq!(agg.algorithm, "l2gdv");
}

#[test]
fn csv_round_trip() {
    let agg = run_small(&[0, 1], 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    emit_csv(&agg, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let rows = read_csv(&path).unwrap();
    assert_eq!(rows.len(), agg.rows.len());
    for (csv, row) in rows.iter().zip(&agg.rows) {
        assert_eq!(csv.k, row.k);
        assert_eq!(csv.values[0], Some(row.alpha_k));
        assert_eq!(csv.values[1], row.mean_sq_dist);
        assert_eq!(csv.values[2], row.se_sq_dist);
        assert_eq!(csv.values[5], row.bound);
        // no evaluation data on a quadratic
        assert_eq!(csv.values[7], None);
    }
}

#[test]
fn csv_rejects_foreign_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    std::fs::write(&path, "a,b\n1,2\n").unwrap();
    assert!(read_csv(&path).is_err());
}

#[test]
fn output_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let seeds: Vec<u64> = (0..8).collect();
    let mut texts = Vec::new();
    for (i, jobs) in [1, 3, 1].into_iter().enumerate() {
        let path = dir.path().join(format!("{i}.csv"));
        emit_csv(&run_small(&seeds, jobs), &path).unwrap();
        texts.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0], texts[2]);
}

#[test]
fn seed_order_does_not_matter() {
    let a = run_small(&[0, 1, 2, 3, 4], 2);
    let b = run_small(&[4, 2, 0, 3, 1, 2], 1);
    assert_eq!(a, b);
    assert_eq!(b.seeds, vec![0, 1, 2, 3, 4]);
}

#[test]
fn config_to_spec() {
    let cfg = Config::parse(
        "# a comment\nproblem = pl\nn = 5\nd = 4\nrank = 2\nalgorithm = l2gd\nalpha1 = pl_cap\nalpha_scale = 0.5\nseeds = 0..3\nstart = warm\n",
    )
    .unwrap();
    let spec = ExperimentSpec::from_config(&cfg).unwrap();
    assert!(matches!(spec.problem, ProblemSpec::Pl { n: 5, d: 4, rank: 2, .. }));
    assert!(matches!(
        spec.algorithm,
        AlgorithmSpec::L2gdv { theta, alpha1: StepSpec::PlCap { scale }, .. } if theta == 0.0 && scale == 0.5
    ));
    assert_eq!(spec.seeds, vec![0, 1, 2]);
    assert!(matches!(spec.start, StartSpec::Warm { radius, .. } if radius == 0.1));

    let cfg = Config::parse("algorithm = fedprox\nprox_mu = 0.3\nproblem = logistic_synth\n").unwrap();
    let spec = ExperimentSpec::from_config(&cfg).unwrap();
    assert!(matches!(spec.algorithm, AlgorithmSpec::FedProx(c) if c.prox_mu == 0.3));

    for bad in ["nonsense = 1\n", "problem = cubic\n", "algorithm = sgd\n", "theta = 2\nK = x\n"] {
        assert!(ExperimentSpec::from_config(&Config::parse(bad).unwrap()).is_err(), "{bad}");
    }
}

#[test]
fn idx_problem_needs_existing_files() {
    let cfg = Config::parse("problem = logistic_idx\nimages = /nonexistent/a\nlabels = /nonexistent/b\n").unwrap();
    assert!(ExperimentSpec::from_config(&cfg).is_err());
}

#[test]
fn seed_failure_names_the_seed() {
    let prep = small_convex().prepare(Some(0.5)).unwrap();
    let alg = AlgorithmSpec::L2gdv {
        p: 0.5,
        alpha1: StepSpec::Value(1e6),
        theta: 0.0,
        iterations: 2000,
        record_every: 1,
    };
    let err = run_prepared(&prep, &alg, &StartSpec::Warm { radius: 1.0, seed: 0 }, &[4, 5], 1, &L2gdvStep).unwrap_err();
    assert!(matches!(err, Error::Seed { seed: 4, .. }), "{err}");
}

/// Forgets the `1/n` factor of both branches.
struct NoOneOverN;

impl StepRule for NoOneOverN {
    fn apply(&self, problem: &FlProblem, x: &mut ModelVector, alpha: f64, p: f64, coin: bool, scratch: &mut [f64]) {
        L2gdvStep.apply(problem, x, alpha * problem.n() as f64, p, coin, scratch);
    }
}

/// Drops the `1/(1−p)` reweighting of the data branch, so `E[G] ≠ ∇F`.
struct Unweighted;

impl StepRule for Unweighted {
    fn apply(&self, problem: &FlProblem, x: &mut ModelVector, alpha: f64, p: f64, coin: bool, scratch: &mut [f64]) {
        let a = if coin { alpha } else { alpha * (1.0 - p) };
        L2gdvStep.apply(problem, x, a, p, coin, scratch);
    }
}

#[test]
fn broken_update_rules_fail_the_checks() {
    for rule in [&NoOneOverN as &dyn StepRule, &Unweighted] {
        let settings = VerifySettings {
            seeds: 20,
            jobs: 0,
            problem_seed: 0,
            rule,
        };
        // a step-scale error shows in the bound, a bias in the rates
        let report = verify(&settings, &[3, 5]);
        let lines: Vec<String> = report.results.iter().map(|r| r.summary_line()).collect();
        assert!(!report.all_passed(), "{lines:#?}");
    }
}

#[test]
fn report_json_carries_targets() {
    let report = verify(&VerifySettings::default(), &[9, 10]);
    assert!(report.all_passed());
    let v = serde_json::to_value(&report).unwrap();
    let parts = v["results"][0]["parts"].as_array().unwrap();
    assert!(!parts.is_empty());
    for key in ["label", "measured", "target", "tolerance", "relation", "passed"] {
        assert!(parts[0].get(key).is_some(), "{key}");
    }
    for key in ["runtime_secs", "runtime_limit_secs", "error"] {
        assert!(v["results"][1].get(key).is_some(), "{key}");
    }
}

#[test]
fn unknown_criterion_is_an_error_not_a_pass() {
    let report = verify(&VerifySettings::default(), &[42]);
    assert!(!report.all_passed());
    assert!(report.results[0].error.is_some());
}

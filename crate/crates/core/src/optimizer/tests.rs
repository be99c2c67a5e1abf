use rand::Rng;

use super::*;
use crate::objectives::{make_strongly_convex_problem, Client, QuadraticClient};
use crate::theory::solve_exact;

fn random_x(problem: &FlProblem, rng: &mut StreamRng) -> ModelVector {
    let data = (0..problem.n() * problem.d()).map(|_| rng.random_range(-4.0..4.0)).collect();
    ModelVector::new(problem.n(), problem.d(), data).unwrap()
}

fn config(p: f64, alpha1: f64, theta: f64, k: u64, seed: u64, every: u64) -> RunConfig {
    RunConfig::new(p, StepSchedule::new(alpha1, theta).unwrap(), k, seed, every).unwrap()
}

#[test]
fn two_branch_average_is_the_gradient() {
    let mut rng = rng::stream(0, "test");
    for seed in 0..20 {
        let problem = make_strongly_convex_problem(5, 3, 0.1, 2.0, 1.3, seed).unwrap();
        let x = random_x(&problem, &mut rng);
        let p = rng.random_range(0.05..0.95);
        let mut avg = stochastic_gradient(&problem, &x, p, false).unwrap().scaled(1.0 - p);
        avg.axpy(p, &stochastic_gradient(&problem, &x, p, true).unwrap());
        let g = problem.grad(&x).unwrap();
        assert!(avg.dist_sq(&g).sqrt() <= 1e-12 * g.norm());
    }
}

#[test]
fn penalty_branch_vanishes() {
    let problem = make_strongly_convex_problem(4, 2, 0.5, 1.0, 2.0, 1).unwrap();
    let x = ModelVector::consensus(4, &[1.0, -3.0]);
    assert!(stochastic_gradient(&problem, &x, 0.4, true).unwrap().norm() == 0.0);
    let mut rng = rng::stream(1, "test");
    let y = random_x(&problem, &mut rng);
    let off = problem.with_lambda(0.0).unwrap();
    assert!(stochastic_gradient(&off, &y, 0.4, true).unwrap().norm() == 0.0);
    assert!(stochastic_gradient(&off, &y, 1.0, true).is_err());
}

#[test]
fn local_step_at_own_minimizer_is_a_fixed_point() {
    let problem = make_strongly_convex_problem(3, 2, 0.5, 1.0, 1.0, 4).unwrap();
    let own: Vec<f64> = problem.clients()[1].as_quadratic().unwrap().minimizer().unwrap();
    let mut x = ModelVector::new(3, 2, vec![1.0, 2.0, own[0], own[1], -1.0, 0.0]).unwrap();
    let mut scratch = vec![0.0; 2];
    L2gdvStep.apply(&problem, &mut x, 0.3, 0.5, false, &mut scratch);
    assert!((x.part(1)[0] - own[0]).abs() < 1e-15 && (x.part(1)[1] - own[1]).abs() < 1e-15);
}

#[test]
fn averaging_step_can_jump_to_the_mean() {
    let problem = make_strongly_convex_problem(4, 3, 0.5, 1.0, 2.5, 6).unwrap();
    let mut rng = rng::stream(2, "test");
    let mut x = random_x(&problem, &mut rng);
    let mean = x.average();
    let p = 0.3;
    let alpha = 4.0 * p / 2.5;
    let mut scratch = vec![0.0; 3];
    L2gdvStep.apply(&problem, &mut x, alpha, p, true, &mut scratch);
    for part in x.parts() {
        for (a, b) in part.iter().zip(mean.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}

#[test]
fn branch_formulas_match_stacked_update() {
    let mut rng = rng::stream(3, "test");
    for seed in 0..30 {
        let problem = make_strongly_convex_problem(6, 4, 0.2, 3.0, 1.7, seed).unwrap();
        let x = random_x(&problem, &mut rng);
        let p = rng.random_range(0.1..0.9);
        let alpha = rng.random_range(0.01..2.0);
        for coin in [false, true] {
            let mut branch = x.clone();
            let mut scratch = vec![0.0; 4];
            L2gdvStep.apply(&problem, &mut branch, alpha, p, coin, &mut scratch);
            let mut stacked = x.clone();
            stacked.axpy(-alpha, &stochastic_gradient(&problem, &x, p, coin).unwrap());
            for (a, b) in branch.as_slice().iter().zip(stacked.as_slice()) {
                assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
            }
        }
    }
}

#[test]
fn communication_examples() {
    assert_eq!(count_communications(&[false, false, true, true, false, true]), 2);
    assert_eq!(count_communications(&[true, true, true]), 0);
    assert_eq!(count_communications(&[]), 0);
    assert_eq!(count_communications(&[false, true, false, true, false, true]), 3);
}

#[test]
fn coin_frequency_and_counters() {
    let problem = make_strongly_convex_problem(3, 2, 0.5, 1.0, 1.0, 0).unwrap();
    let cfg = config(0.5, 0.1, 0.5, 10_000, 17, 1000);
    let trace = run_l2gdv(&problem, &cfg, &problem.zeros(), None, None).unwrap();
    let ones = trace.coins.iter().filter(|c| **c).count();
    let frac = ones as f64 / 10_000.0;
    assert!((0.47..=0.53).contains(&frac), "{frac}");
    assert_eq!(trace.aggregation_steps, ones as u64);
    assert_eq!(trace.communication_rounds, count_communications(&trace.coins));
    for r in &trace.records {
        assert_eq!(r.comm_rounds, count_communications(&trace.coins[..r.k as usize]));
        assert_eq!(r.coin, Some(trace.coins[r.k as usize - 1]));
    }
}

#[test]
fn runs_are_deterministic() {
    let problem = make_strongly_convex_problem(5, 3, 0.1, 1.0, 1.0, 2).unwrap();
    let sol = solve_exact(&problem).unwrap();
    let cfg = config(0.4, 0.5, 0.3, 2000, 5, 7);
    let a = run_l2gdv(&problem, &cfg, &problem.zeros(), Some(&sol), None).unwrap();
    let b = run_l2gdv(&problem, &cfg, &problem.zeros(), Some(&sol), None).unwrap();
    assert_eq!(a, b);
    let c = run_l2gdv(&problem, &cfg.with_seed(6), &problem.zeros(), Some(&sol), None).unwrap();
    assert_ne!(a.coins, c.coins);
}

#[test]
fn constant_step_special_case() {
    let problem = make_strongly_convex_problem(4, 2, 0.1, 1.0, 1.0, 3).unwrap();
    let decaying = config(0.5, 0.3, 0.8, 500, 9, 10);
    let constant = config(0.5, 0.3, 0.0, 500, 9, 10);
    let a = run_l2gd(&problem, &decaying, &problem.zeros(), None, None).unwrap();
    let b = run_l2gdv(&problem, &constant, &problem.zeros(), None, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn record_cadence() {
    let problem = make_strongly_convex_problem(2, 2, 0.5, 1.0, 1.0, 0).unwrap();
    let trace = run_l2gdv(&problem, &config(0.5, 0.1, 0.5, 100, 0, 10), &problem.zeros(), None, None).unwrap();
    assert_eq!(trace.records.len(), 10);
    assert_eq!(trace.records.iter().map(|r| r.k).collect::<Vec<_>>(), (1..=10).map(|j| 10 * j).collect::<Vec<_>>());
    assert_eq!(trace.initial.k, 0);
}

#[test]
fn warm_start_radius() {
    let problem = make_strongly_convex_problem(3, 2, 0.5, 1.0, 1.0, 0).unwrap();
    let sol = solve_exact(&problem).unwrap();
    let x = StartPoint::Warm { radius: 0.1, seed: 4 }.resolve(&problem, Some(&sol)).unwrap();
    assert!((x.dist_sq(&sol.x_star).sqrt() - 0.1).abs() < 1e-14);
    assert!(StartPoint::Warm { radius: 0.1, seed: 4 }.resolve(&problem, None).is_err());
}

fn fed(rounds: u64, epochs: u32, fraction: f64, lr: f64, prox: f64) -> FedConfig {
    FedConfig {
        rounds,
        local_epochs: epochs,
        client_fraction: fraction,
        lr,
        prox_mu: prox,
        seed: 1,
        record_every: 1,
    }
}

#[test]
fn fedavg_single_epoch_is_gradient_descent() {
    let problem = make_strongly_convex_problem(5, 3, 0.2, 1.0, 1.0, 8).unwrap();
    let w0 = vec![0.5, -1.0, 2.0];
    let trace = run_fedavg(&problem, &fed(1, 1, 1.0, 0.3, 0.0), &w0, None, None).unwrap();
    let mut expect = w0.clone();
    for c in problem.clients() {
        let g = c.grad(&w0);
        for (e, gv) in expect.iter_mut().zip(&g) {
            *e -= 0.3 * gv / 5.0;
        }
    }
    for (a, b) in trace.final_x.part(0).iter().zip(&expect) {
        assert!((a - b).abs() < 1e-14);
    }
    assert!(trace.final_x.is_consensus(0.0));
}

#[test]
fn fedprox_without_proximal_term_is_fedavg() {
    let problem = make_strongly_convex_problem(6, 2, 0.2, 1.0, 1.0, 8).unwrap();
    let cfg = fed(20, 3, 0.5, 0.2, 0.0);
    let a = run_fedavg(&problem, &cfg, &[0.0, 0.0], None, None).unwrap();
    let b = run_fedprox(&problem, &cfg, &[0.0, 0.0], None, None).unwrap();
    assert_eq!(a, b);
    let c = run_fedprox(&problem, &FedConfig { prox_mu: 1.0, ..cfg }, &[0.0, 0.0], None, None).unwrap();
    assert_ne!(a.final_x, c.final_x);
}

#[test]
fn reference_descent_matches_direct_solve() {
    let problem = make_strongly_convex_problem(4, 3, 0.3, 1.0, 0.5, 2).unwrap();
    let direct = solve_exact(&problem).unwrap();
    let gd = reference_gd(&problem, &ReferenceGd::default()).unwrap();
    assert!(gd.x_star.dist_sq(&direct.x_star).sqrt() < 1e-8);
    assert!((gd.f_star - direct.f_star).abs() < 1e-12);
    let q = QuadraticClient::new(1, vec![1.0], vec![1.0]).unwrap();
    let tiny = FlProblem::new(vec![Client::from(q)], 0.0).unwrap();
    assert!(reference_gd(&tiny, &ReferenceGd { max_iters: 0, grad_tol: 1e-10 }).is_err());
}

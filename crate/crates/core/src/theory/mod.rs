//! Exact solutions, problem constants, bound evaluators, moment recursions and
//! rate fitting.
//!
//! Two curvature constants appear and are never interchangeable: `μ_F = μ/n`,
//! the strong convexity of `F` used by the strongly convex results, and the PL
//! constant of `F` (smallest positive Hessian eigenvalue on quadratics) used by
//! the PL results. Evaluators take the one they need explicitly.

mod bounds;
mod constants;
mod exact;
mod lemmas;
mod moments;

pub use bounds::{
    bound_convex_fixed, bound_pl_fixed, bound_rate_exponent, fit_rate, lemma4_check, lemma4_gap, logspace,
    RateRegime,
};
pub use constants::{
    constants_report, sigma_at, sigma_m_sq, sigma_sq, ConstantsReport, SigmaMax, PATCH_FACTOR, SIGMA_M_SAMPLES,
};
pub use exact::{
    assemble_data_hessian, assemble_hessian, assemble_penalty_hessian, assemble_rhs, mu_pl, solution_set,
    solve_exact, ExactSolution, SolutionSet, MAX_DENSE_DIM, RESIDUAL_LIMIT,
};
pub use lemmas::{
    bregman_slack, convex_second_moment_bound, hessian_extremes, pl_second_moment_bound, quadratic_gap,
    quadratic_growth_slack, second_moment,
};
pub use moments::{expected_trajectory, ExpectedPoint};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelVector;
    use crate::objectives::{make_pl_problem, make_strongly_convex_problem, Client, FlProblem, QuadraticClient};
    use crate::schedules::{self, StepSchedule};
    use crate::Error;

    fn scalar_problem(bs: &[f64], lambda: f64) -> FlProblem {
        let clients = bs
            .iter()
            .map(|b| Client::from(QuadraticClient::new(1, vec![1.0], vec![*b]).unwrap()))
            .collect();
        FlProblem::new(clients, lambda).unwrap()
    }

    #[test]
    fn decoupled_when_lambda_is_zero() {
        let p = make_strongly_convex_problem(4, 3, 0.5, 2.0, 0.0, 1).unwrap();
        let sol = solve_exact(&p).unwrap();
        for (c, xi) in p.clients().iter().zip(sol.x_star.parts()) {
            let own = c.as_quadratic().unwrap().minimizer().unwrap();
            for (a, b) in own.iter().zip(xi) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        assert!(sigma_sq(&p, &sol, 0.3).unwrap() < 1e-20);
    }

    #[test]
    fn symmetric_zero_minimizer() {
        let p = scalar_problem(&[0.0, 0.0], 3.0);
        let sol = solve_exact(&p).unwrap();
        assert!(sol.x_star.norm() < 1e-14);
    }

    #[test]
    fn identical_clients_reach_consensus() {
        let q = QuadraticClient::new(2, vec![2.0, 0.5, 0.5, 1.0], vec![1.0, -3.0]).unwrap();
        let own = q.minimizer().unwrap();
        for lambda in [0.0, 0.7, 50.0] {
            let p = FlProblem::new(vec![Client::from(q.clone()); 5], lambda).unwrap();
            let sol = solve_exact(&p).unwrap();
            for xi in sol.x_star.parts() {
                assert!((xi[0] - own[0]).abs() < 1e-10 && (xi[1] - own[1]).abs() < 1e-10);
            }
            assert!(sigma_sq(&p, &sol, 0.5).unwrap() < 1e-20);
        }
    }

    #[test]
    fn two_client_sigma_against_hand_solve() {
        // f_1 = ½(v−1)², f_2 = ½(v+1)², λ = 1, p = ½.
        let p = scalar_problem(&[1.0, -1.0], 1.0);
        let sol = solve_exact(&p).unwrap();
        // ∇F = 0 as a 2×2 system [[3/4, −1/4], [−1/4, 3/4]] x = [½, −½], by Cramer.
        let (a, b, c, d) = (0.75, -0.25, -0.25, 0.75);
        let (r1, r2) = (0.5, -0.5);
        let det = a * d - b * c;
        let x1 = (r1 * d - b * r2) / det;
        let x2 = (a * r2 - c * r1) / det;
        assert!((sol.x_star.as_slice()[0] - x1).abs() < 1e-14);
        assert!((sol.x_star.as_slice()[1] - x2).abs() < 1e-14);
        let g = [x1 - 1.0, x2 + 1.0];
        let mean = 0.5 * (x1 + x2);
        let hand = 0.25 * ((g[0] * g[0] + g[1] * g[1]) / 0.5 + ((x1 - mean).powi(2) + (x2 - mean).powi(2)) / 0.5);
        assert!((sigma_sq(&p, &sol, 0.5).unwrap() - hand).abs() < 1e-14);
        assert!((hand - 0.5).abs() < 1e-14);
    }

    #[test]
    fn oracle_residuals() {
        for seed in 0..5 {
            let p = make_strongly_convex_problem(7, 4, 0.1, 3.0, 2.0, seed).unwrap();
            let sol = solve_exact(&p).unwrap();
            assert!(sol.residual_norm <= RESIDUAL_LIMIT);
            let set = solution_set(&p).unwrap();
            assert_eq!(set.null_dim(), 0);
            assert!(set.solution.x_star.dist_sq(&sol.x_star) < 1e-20);
        }
    }

    #[test]
    fn rejects_non_quadratic_and_inconsistent() {
        let l = crate::objectives::LogisticClient::new(1, vec![1.0], vec![1.0], 0.1).unwrap();
        let p = FlProblem::new(vec![Client::from(l)], 1.0).unwrap();
        assert!(matches!(solve_exact(&p), Err(Error::NotQuadratic)));
        // A = 0 with b ≠ 0 has no minimizer.
        let q = QuadraticClient::new(1, vec![0.0], vec![1.0]).unwrap();
        let p = FlProblem::new(vec![Client::from(q.clone()), Client::from(q)], 1.0).unwrap();
        assert!(matches!(solve_exact(&p), Err(Error::InconsistentSystem { .. })));
    }

    #[test]
    fn pl_solution_set_structure() {
        let p = make_pl_problem(10, 6, 4, 1.0, 1.0, 3).unwrap();
        let set = solution_set(&p).unwrap();
        assert_eq!(set.null_dim(), 2);
        assert!(set.mu_pl() > 1e-3);
        let moved = set.point(&[3.0, -2.0]);
        assert!(p.grad(&moved).unwrap().norm() < 1e-9);
        assert!((p.value(&moved).unwrap() - set.solution.f_star).abs() < 1e-10);
        assert!(set.dist_sq(&moved) < 1e-20);
        // Shared null space: flat directions are consensus vectors.
        let dir = set.point(&[1.0, 0.0]).sub(&set.solution.x_star);
        assert!(dir.is_consensus(1e-10));
    }

    #[test]
    fn sigma_m_cases() {
        let sc = make_strongly_convex_problem(5, 3, 0.2, 1.0, 1.0, 2).unwrap();
        let set = solution_set(&sc).unwrap();
        let sm = sigma_m_sq(&sc, &set, 0.5, 32, 0).unwrap();
        assert_eq!(sm.value, sm.at_min_norm);
        assert!((sm.value - sigma_sq(&sc, &set.solution, 0.5).unwrap()).abs() < 1e-15);

        let pl0 = make_pl_problem(4, 5, 3, 1.0, 0.0, 2).unwrap();
        let set = solution_set(&pl0).unwrap();
        let sm = sigma_m_sq(&pl0, &set, 0.5, 64, 0).unwrap();
        assert!(sm.value < 1e-18);

        let pl = make_pl_problem(6, 5, 3, 1.0, 1.5, 4).unwrap();
        let set = solution_set(&pl).unwrap();
        let sm = sigma_m_sq(&pl, &set, 0.4, 64, 9).unwrap();
        assert!(sm.value >= sm.at_min_norm);
    }

    #[test]
    fn hessian_within_smoothness_and_convexity() {
        for seed in 0..4 {
            let p = make_strongly_convex_problem(6, 3, 0.1, 2.0, 1.5, seed).unwrap();
            let (lo, hi) = hessian_extremes(&p).unwrap();
            let lf = schedules::smoothness_of_objective(p.smoothness(), p.lambda(), p.n());
            assert!(hi <= lf + 1e-9);
            assert!(lo >= p.strong_convexity() / p.n() as f64 - 1e-9);
        }
    }

    #[test]
    fn growth_and_bregman() {
        use rand::Rng;
        let p = make_pl_problem(5, 6, 4, 1.0, 1.0, 7).unwrap();
        let set = solution_set(&p).unwrap();
        let lf = schedules::smoothness_of_objective(p.smoothness(), p.lambda(), p.n());
        let mut rng = crate::rng::stream(1, "test");
        let mut random = || {
            ModelVector::new(5, 6, (0..30).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap()
        };
        for _ in 0..50 {
            let (x, y) = (random(), random());
            assert!(quadratic_growth_slack(&p, &set, &x).unwrap() >= -1e-10);
            assert!(bregman_slack(&p, &x, &y, lf).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn moment_recursion_matches_coin_enumeration() {
        let p = make_strongly_convex_problem(3, 2, 0.3, 1.0, 0.8, 5).unwrap();
        let sol = solve_exact(&p).unwrap();
        let (prob1, alpha1) = (0.3, 0.9);
        let sched = StepSchedule::new(alpha1, 0.5).unwrap();
        let start = ModelVector::new(3, 2, vec![1.0, -2.0, 0.5, 0.0, 3.0, 1.0]).unwrap();
        let k_max = 7u64;
        let exact = expected_trajectory(&p, &sol, prob1, &sched, &start, k_max, 1).unwrap();
        // Depth-first over all coin prefixes with the stacked update x − α G_ξ(x).
        let mut brute = vec![0.0; k_max as usize];
        let mut stack = vec![(start.clone(), 1.0, 0u64)];
        while let Some((x, weight, k)) = stack.pop() {
            if k == k_max {
                continue;
            }
            let alpha = sched.step_at(k + 1).unwrap();
            for (coin, pr) in [(false, 1.0 - prob1), (true, prob1)] {
                let g = if coin {
                    x.psi_grad().scaled(p.lambda() / prob1)
                } else {
                    p.f_grad(&x).unwrap().scaled(1.0 / (1.0 - prob1))
                };
                let mut next = x.clone();
                next.axpy(-alpha, &g);
                brute[k as usize] += weight * pr * next.dist_sq(&sol.x_star);
                stack.push((next, weight * pr, k + 1));
            }
        }
        for (e, b) in exact.iter().zip(&brute) {
            assert!((e.sq_dist - b).abs() <= 1e-12 * b.max(1.0), "{} vs {}", e.sq_dist, b);
        }
    }
}

//! A rank-deficient quadratic: F is PL but not strongly convex, and its
//! minimizers form an affine set.
//!
//! cargo run --release --example pl_quadratic

use l2gdv::objectives::make_pl_problem;
use l2gdv::optimizer::run_l2gd;
use l2gdv::theory::{bound_pl_fixed, constants_report, solution_set};
use l2gdv::{RunConfig, StepSchedule};

fn main() -> l2gdv::Result<()> {
    let p = 0.5;
    let problem = make_pl_problem(10, 6, 4, 1.0, 1.0, 0)?;
    let set = solution_set(&problem)?;
    let c = constants_report(&problem, p, 0)?;
    let (mu_pl, cap, sm) = (c.mu_pl.unwrap(), c.pl_cap.unwrap(), c.sigma_m_sq.unwrap());
    println!(
        "null space dim {}  mu_PL {mu_pl:.4e}  pl cap {cap:.4e}  sigma_m^2 {sm:.4e} (grows with radius: {})",
        set.null_dim(),
        c.sigma_m_grows.unwrap()
    );

    let x0 = problem.zeros();
    let gap0 = problem.value(&x0)? - set.solution.f_star;
    let cfg = RunConfig::new(p, StepSchedule::constant(cap)?, 5000, 0, 1000)?;
    let seeds = 50;
    let mut mean = [0.0; 5];
    for s in 0..seeds {
        let t = run_l2gd(&problem, &cfg.with_seed(s), &x0, Some(&set.solution), None)?;
        for (m, r) in mean.iter_mut().zip(&t.records) {
            *m += r.f_gap.unwrap() / seeds as f64;
        }
    }
    for (j, m) in mean.iter().enumerate() {
        let k = (j as u64 + 1) * 1000;
        println!("k {k:>5}  E gap {m:.4e}  bound {:.4e}", bound_pl_fixed(k, cap, mu_pl, c.l_f, sm, gap0));
    }
    Ok(())
}

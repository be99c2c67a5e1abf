//! L2GD and L2GDV on a strongly convex quadratic, against the fixed-step bound.
//!
//! cargo run --release --example strongly_convex

use l2gdv::objectives::make_strongly_convex_problem;
use l2gdv::optimizer::{run_l2gd, run_l2gdv};
use l2gdv::theory::{bound_convex_fixed, constants_report, solve_exact};
use l2gdv::{RunConfig, StepSchedule};

fn main() -> l2gdv::Result<()> {
    let (n, d, p) = (10, 5, 0.5);
    let problem = make_strongly_convex_problem(n, d, 0.1, 1.0, 1.0, 0)?;
    let sol = solve_exact(&problem)?;
    let c = constants_report(&problem, p, 0)?;
    println!("F* = {:.6}  residual {:.1e}  cap 1/(2L) = {}", sol.f_star, sol.residual_norm, c.convex_cap);

    let x0 = problem.zeros();
    let init = x0.dist_sq(&sol.x_star);
    let fixed = RunConfig::new(p, StepSchedule::constant(c.convex_cap)?, 5000, 0, 1000)?;
    let decay = RunConfig::new(p, StepSchedule::new(c.convex_cap, 0.5)?, 5000, 0, 1000)?;

    let seeds = 50;
    let mut sum_fixed = [0.0; 5];
    let mut sum_decay = [0.0; 5];
    for s in 0..seeds {
        let a = run_l2gd(&problem, &fixed.with_seed(s), &x0, Some(&sol), None)?;
        let b = run_l2gdv(&problem, &decay.with_seed(s), &x0, Some(&sol), None)?;
        for (j, (ra, rb)) in a.records.iter().zip(&b.records).enumerate() {
            sum_fixed[j] += ra.sq_dist.unwrap() / seeds as f64;
            sum_decay[j] += rb.sq_dist.unwrap() / seeds as f64;
        }
    }
    println!("{:>6} {:>12} {:>12} {:>12}", "k", "theta=0", "theta=0.5", "bound");
    for (j, k) in (1..=5u64).map(|i| i * 1000).enumerate() {
        let bound = bound_convex_fixed(k, c.convex_cap, c.mu_f.unwrap(), c.sigma_sq.unwrap(), init);
        println!("{k:>6} {:>12.4e} {:>12.4e} {bound:>12.4e}", sum_fixed[j], sum_decay[j]);
    }
    Ok(())
}

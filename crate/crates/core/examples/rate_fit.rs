//! Rate exponents of decaying schedules: the exact expectation (moment
//! recursion) next to a Monte Carlo estimate, both fitted on [1e2, 1e4].
//!
//! cargo run --release --example rate_fit

use l2gdv::harness::{fitted_exponent, log_thin, FIT_POINTS, FIT_WINDOW};
use l2gdv::objectives::make_strongly_convex_problem;
use l2gdv::optimizer::{run_l2gdv, StartPoint};
use l2gdv::theory::{bound_rate_exponent, constants_report, expected_trajectory, solve_exact};
use l2gdv::{RunConfig, StepSchedule};

fn main() -> l2gdv::Result<()> {
    let (p, k_max, seeds) = (0.5, 10_000, 100);
    let problem = make_strongly_convex_problem(10, 5, 0.1, 1.0, 1.0, 0)?;
    let sol = solve_exact(&problem)?;
    let c = constants_report(&problem, p, 0)?;
    let x0 = StartPoint::Warm { radius: 0.1, seed: 0 }.resolve(&problem, Some(&sol))?;
    let (lo, hi) = FIT_WINDOW;

    for theta in [0.3, 0.5, 0.7, 1.0] {
        let schedule = StepSchedule::new(c.convex_cap, theta)?;
        let exact: Vec<(f64, f64)> = expected_trajectory(&problem, &sol, p, &schedule, &x0, k_max, 10)?
            .iter()
            .map(|e| (e.k as f64, e.sq_dist))
            .collect();

        let cfg = RunConfig::new(p, schedule, k_max, 0, 10)?;
        let mut mc = vec![0.0; exact.len()];
        for s in 0..seeds {
            let t = run_l2gdv(&problem, &cfg.with_seed(s), &x0, Some(&sol), None)?;
            for (m, r) in mc.iter_mut().zip(&t.records) {
                *m += r.sq_dist.unwrap() / seeds as f64;
            }
        }
        let mc: Vec<(f64, f64)> = exact.iter().zip(mc).map(|(e, m)| (e.0, m)).collect();

        let fit = |curve: &[(f64, f64)]| fitted_exponent(&log_thin(curve, lo, hi, FIT_POINTS));
        let regime = bound_rate_exponent(theta, c.convex_cap, c.mu_f.unwrap())?;
        println!(
            "theta {theta}: exact {:.3}  monte carlo ({seeds} seeds) {:.3}  theorem {regime:?}",
            fit(&exact)?,
            fit(&mc)?
        );
    }
    Ok(())
}

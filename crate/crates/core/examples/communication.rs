//! Step-by-step L2GDV with communication accounting: a round is charged on
//! every local-to-aggregation switch, so about p(1 − p)K rounds in K steps.
//!
//! cargo run --release --example communication

use l2gdv::objectives::make_strongly_convex_problem;
use l2gdv::optimizer::{count_communications, l2gdv_step};
use l2gdv::rng;
use l2gdv::{RunConfig, StepSchedule};

fn main() -> l2gdv::Result<()> {
    let problem = make_strongly_convex_problem(4, 2, 0.5, 1.0, 1.0, 1)?;

    // the hand examples
    for coins in [&[false, true, false, true][..], &[true, true, true], &[false, false, true, true, false]] {
        let bits: String = coins.iter().map(|&c| if c { '1' } else { '0' }).collect();
        println!("{bits}: {} rounds", count_communications(coins));
    }

    for p in [0.1, 0.5, 0.9] {
        let k = 20_000u64;
        let cfg = RunConfig::new(p, StepSchedule::new(0.1, 0.3)?, k, 7, 1)?;
        let mut r = rng::stream(cfg.seed, rng::COINS);
        let mut x = problem.zeros();
        let mut coins = Vec::with_capacity(k as usize);
        for i in 1..=k {
            let (next, coin, _alpha) = l2gdv_step(&problem, &x, i, &cfg, &mut r)?;
            x = next;
            coins.push(coin);
        }
        let rounds = count_communications(&coins);
        println!("p {p}: {rounds} rounds in {k} steps, p(1-p)K = {}", p * (1.0 - p) * k as f64);
    }
    Ok(())
}

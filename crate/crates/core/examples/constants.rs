//! Theory constants of a generated problem, as JSON.
//!
//! cargo run --release --example constants -- 0.3

use l2gdv::objectives::{make_pl_problem, make_strongly_convex_problem};
use l2gdv::schedules::{calligraphic_l, convex_cap};
use l2gdv::theory::constants_report;

fn main() -> l2gdv::Result<()> {
    let p: f64 = std::env::args().nth(1).map_or(0.5, |s| s.parse().expect("p"));

    let sc = make_strongly_convex_problem(10, 5, 0.1, 1.0, 1.0, 0)?;
    let report = constants_report(&sc, p, 0)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    // the caps straight from the formulas, with nothing generated
    println!("L(p={p}, lambda=1, L=1, n=10) = {}", calligraphic_l(p, 1.0, 1.0, 10)?);
    println!("1/(2L) = {}", convex_cap(p, 1.0, 1.0, 10)?);

    let pl = make_pl_problem(10, 6, 4, 1.0, 1.0, 0)?;
    let r = constants_report(&pl, p, 0)?;
    println!("PL problem: mu = {}  mu_PL = {:?}  pl cap = {:?}", r.mu, r.mu_pl, r.pl_cap);
    Ok(())
}

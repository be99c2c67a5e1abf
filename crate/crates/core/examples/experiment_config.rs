//! A flat config file through the experiment runner, with an environment
//! override, written out as CSV.
//!
//! cargo run --release --example experiment_config

use l2gdv::harness::{emit_csv, read_csv, run_experiment, Config, ExperimentSpec};

const CONFIG: &str = "
# strongly convex quadratic, constant step at the cap
problem = strongly_convex
n = 10
d = 5
algorithm = l2gd
alpha1 = convex_cap
K = 2000
record_every = 500
seeds = 0..20
";

fn main() -> l2gdv::Result<()> {
    let mut cfg = Config::parse(CONFIG)?;
    // as if L2GDV_ALPHA_SCALE=0.5 were set
    cfg.apply_env_from([("L2GDV_ALPHA_SCALE", "0.5")]);
    let spec = ExperimentSpec::from_config(&cfg)?;
    let agg = run_experiment(&spec, 0)?;

    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("l2gd.csv");
    emit_csv(&agg, &path)?;
    print!("{}", std::fs::read_to_string(&path).unwrap());
    assert_eq!(read_csv(&path)?.len(), 4);
    Ok(())
}

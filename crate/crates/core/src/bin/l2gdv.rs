use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use l2gdv::harness::{
    emit_csv, emit_json, parse_seeds, run_experiment, verify, Config, ExperimentSpec, VerifySettings, ALL_CRITERIA,
};

/// Regularized federated learning with L2GDV.
#[derive(Parser)]
#[command(name = "l2gdv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment and write `<algorithm>.csv` and `.json`.
    Run(Common),
    /// Run the acceptance checks; exits 1 if any fails.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated criterion ids (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
    /// Print the theory constants of the configured problem as JSON.
    Constants(Common),
    /// Print the minimizer x(λ) and F* of the configured problem as JSON.
    Solve(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem and data seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    alpha1: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
}

impl Common {
    /// File, then `L2GDV_*` environment, then flags.
    fn config(&self) -> l2gdv::Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::from_file(path)?,
            None => Config::default(),
        };
        cfg.apply_env();
        if let Some(seed) = self.seed {
            cfg.set("problem_seed", seed);
        }
        if let Some(a) = &self.alpha1 {
            cfg.set("alpha1", a);
        }
        if let Some(t) = self.theta {
            cfg.set("theta", t);
        }
        if let Some(out) = &self.out {
            cfg.set("out", out.display());
        }
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> l2gdv::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| l2gdv::Error::Config(e.to_string()))?;
    // a closed pipe (`| head`) is not an error
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn write_into(dir: &Path, name: &str, value: &impl serde::Serialize) -> l2gdv::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| l2gdv::Error::io(dir, e))?;
    emit_json(value, dir.join(name))
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> l2gdv::Result<ExitCode> {
    match command {
        Command::Run(common) => {
            let spec = ExperimentSpec::from_config(&common.config()?)?;
            let agg = run_experiment(&spec, common.jobs)?;
            let dir = spec.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            std::fs::create_dir_all(&dir).map_err(|e| l2gdv::Error::io(&dir, e))?;
            let csv = dir.join(format!("{}.csv", agg.algorithm));
            emit_csv(&agg, &csv)?;
            emit_json(&agg, dir.join(format!("{}.json", agg.algorithm)))?;
            if let Some(last) = agg.rows.last() {
                eprintln!(
                    "{} seeds={} k={} sq_dist={:?} F_gap={:?} comm={} -> {}",
                    agg.algorithm,
                    agg.seeds.len(),
                    last.k,
                    last.mean_sq_dist,
                    last.mean_f_gap,
                    last.comm_rounds_mean,
                    csv.display()
                );
            }
        }
        Command::Verify { common, criteria } => {
            let cfg = common.config()?;
            let mut settings = VerifySettings {
                jobs: common.jobs,
                problem_seed: cfg.or("problem_seed", 0)?,
                ..VerifySettings::default()
            };
            // `seeds` here is a seed list like everywhere else; only its length is used
            if let Some(s) = cfg.get("seeds") {
                settings.seeds = parse_seeds(s)?.len();
            }
            let criteria = if criteria.is_empty() { ALL_CRITERIA.to_vec() } else { criteria };
            let report = verify(&settings, &criteria);
            for r in &report.results {
                println!("{}", r.summary_line());
            }
            if let Some(dir) = cfg.get("out") {
                write_into(Path::new(dir), "verify.json", &report)?;
            }
            return Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Constants(common) => {
            let cfg = common.config()?;
            let spec = ExperimentSpec::from_config(&cfg)?;
            let report = spec.problem.prepare(Some(cfg.or("p", 0.5)?))?.constants;
            print_json(&report)?;
            if let Some(dir) = &spec.out {
                write_into(dir, "constants.json", &report)?;
            }
        }
        Command::Solve(common) => {
            let spec = ExperimentSpec::from_config(&common.config()?)?;
            let oracle = spec.problem.prepare(None)?.oracle;
            print_json(&oracle)?;
            if let Some(dir) = &spec.out {
                write_into(dir, "solution.json", &oracle)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

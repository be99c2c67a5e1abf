//! L2GDV against FedAvg and FedProx on non-IID logistic regression.
//!
//! cargo run --release --example logistic_baselines

use l2gdv::harness::{run_prepared, AlgorithmSpec, PartitionSpec, ProblemSpec, StartSpec, StepSpec};
use l2gdv::optimizer::{FedConfig, L2gdvStep};

fn main() -> l2gdv::Result<()> {
    let spec = ProblemSpec::LogisticSynth {
        samples: 2000,
        features: 2,
        classes: 2,
        separation: 10.0,
        n: 20,
        partition: PartitionSpec::NonIid { shards_per_client: 2 },
        l2: 0.01,
        lambda: 1.0,
        bias: true,
        positive_class: None,
        seed: 0,
    };
    let prep = spec.prepare(Some(0.5))?;
    let fed = FedConfig {
        rounds: 200,
        local_epochs: 5,
        client_fraction: 0.5,
        lr: 0.1,
        prox_mu: 0.0,
        seed: 0,
        record_every: 50,
    };
    let algorithms = [
        AlgorithmSpec::L2gdv {
            p: 0.5,
            alpha1: StepSpec::ConvexCap { scale: 1.0 },
            theta: 0.3,
            iterations: 5000,
            record_every: 1000,
        },
        AlgorithmSpec::FedAvg(fed),
        AlgorithmSpec::FedProx(FedConfig { prox_mu: 0.1, ..fed }),
    ];
    let seeds: Vec<u64> = (0..10).collect();
    for alg in &algorithms {
        let agg = run_prepared(&prep, alg, &StartSpec::Zero, &seeds, 0, &L2gdvStep)?;
        for r in &agg.rows {
            println!(
                "{:<8} k {:>5}  F gap {:.3e}  acc {:.4}  local acc {:.4}  comm {:.1}",
                agg.algorithm,
                r.k,
                r.mean_f_gap.unwrap(),
                r.test_acc_mean.unwrap(),
                r.test_acc_local_mean.unwrap(),
                r.comm_rounds_mean
            );
        }
    }
    Ok(())
}

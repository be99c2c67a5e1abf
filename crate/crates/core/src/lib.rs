//! Regularized federated learning laboratory.
//!
//! The crate implements the regularized federated objective
//! `F(x) = (1/n) Σ f_i(x_i) + (λ/2n) Σ ‖x_i − x̄‖²` over a stacked model vector
//! `x = (x_1, …, x_n)`, the loopless local gradient descent update driven by a
//! single Bernoulli coin per iteration, and its varying step size variant
//! `α_k = α_1 k^{−θ}`. Around the optimizer sit the pieces needed to check its
//! convergence behaviour at desk scale:
//!
//! - [`model`]: model-vector arithmetic and the consensus penalty `ψ`.
//! - [`objectives`]: quadratic and logistic client losses, problem generators.
//! - [`dataio`]: IDX loading, synthetic Gaussian classes, IID / shard partitions.
//! - [`schedules`]: step-size schedules and theoretical step caps.
//! - [`optimizer`]: the L2GDV loop, the constant-step special case and the
//!   FedAvg / FedProx baselines.
//! - [`theory`]: exact solutions, problem constants, bound evaluators, moment
//!   recursions and rate fitting.
//! - [`harness`]: flat key-value experiment configs, multi-seed aggregation,
//!   CSV / JSON output and the acceptance checks.
//!
//! Every capability has a runnable example under `examples/`.

pub mod dataio;
pub mod error;
pub mod harness;
pub mod model;
pub mod objectives;
pub mod optimizer;
pub mod rng;
pub mod schedules;
pub mod theory;

pub use error::{Error, Result};
pub use model::{LocalModel, ModelVector};
pub use objectives::{Client, ClientObjective, FlProblem};
pub use optimizer::{RunConfig, Trace};
pub use schedules::StepSchedule;

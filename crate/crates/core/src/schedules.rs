//! Step-size schedules `α_k = α_1 k^{−θ}` and the step caps under which the
//! convergence guarantees hold.
//!
//! `θ` is restricted to `[0, 1]`: a summable schedule (`θ > 1`) can never drive
//! the expected error to zero, so it is not constructible. `θ = 0` is the
//! constant schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    alpha1: f64,
    theta: f64,
}

impl StepSchedule {
    pub fn new(alpha1: f64, theta: f64) -> Result<Self> {
        if !(alpha1.is_finite() && alpha1 > 0.0) {
            return Err(Error::invalid(format!("alpha1 must be finite and > 0, got {alpha1}")));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::invalid(format!("theta must lie in [0, 1], got {theta}")));
        }
        Ok(Self { alpha1, theta })
    }

    pub fn constant(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0)
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_constant(&self) -> bool {
        self.theta == 0.0
    }

    /// `α_k` for `k ≥ 1`.
    pub fn step_at(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(Error::invalid("iteration index starts at 1"));
        }
        Ok(self.alpha(k))
    }

    pub(crate) fn alpha(&self, k: u64) -> f64 {
        debug_assert!(k >= 1);
        if self.theta == 0.0 {
            self.alpha1
        } else {
            self.alpha1 * (k as f64).powf(-self.theta)
        }
    }

    /// Whether `α_1` exceeds `cap`. Exceeding a cap is allowed; the guarantees
    /// simply no longer apply.
    pub fn check_cap(&self, cap: f64) -> CapCheck {
        if self.alpha1 <= cap {
            CapCheck::Within
        } else {
            CapCheck::Exceeds {
                cap,
                ratio: self.alpha1 / cap,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapCheck {
    Within,
    Exceeds { cap: f64, ratio: f64 },
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

fn check_common(p: f64, lambda: f64, l: f64, n: usize) -> Result<()> {
    check_p(p)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::invalid(format!("L must be > 0, got {l}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    Ok(())
}

/// `𝓛 = (1/n) max{(1+2p)L/(1−p), (3−2p)λ/p}`.
pub fn calligraphic_l(p: f64, lambda: f64, l: f64, n: usize) -> Result<f64> {
    check_common(p, lambda, l, n)?;
    let data = (1.0 + 2.0 * p) * l / (1.0 - p);
    let penalty = (3.0 - 2.0 * p) * lambda / p;
    Ok(data.max(penalty) / n as f64)
}

/// `ζ = (1+2p)L²/((1−p)n²) + (3−2p)λ²/(pn²)`.
pub fn zeta(p: f64, lambda: f64, l: f64, n: usize) -> Result<f64> {
    check_common(p, lambda, l, n)?;
    let n2 = (n * n) as f64;
    Ok((1.0 + 2.0 * p) * l * l / ((1.0 - p) * n2) + (3.0 - 2.0 * p) * lambda * lambda / (p * n2))
}

/// `L_F = (L + λ)/n`, the smoothness constant of `F`.
pub fn smoothness_of_objective(l: f64, lambda: f64, n: usize) -> f64 {
    (l + lambda) / n as f64
}

/// Largest step of the strongly convex analysis, `1/(2𝓛)`.
pub fn convex_cap(p: f64, lambda: f64, l: f64, n: usize) -> Result<f64> {
    Ok(0.5 / calligraphic_l(p, lambda, l, n)?)
}

/// Largest step of the PL analysis, `μ²/(2ζL_F)`.
pub fn pl_cap(p: f64, lambda: f64, l: f64, n: usize, mu_pl: f64) -> Result<f64> {
    if !(mu_pl.is_finite() && mu_pl > 0.0) {
        return Err(Error::invalid(format!("PL constant must be > 0, got {mu_pl}")));
    }
    let z = zeta(p, lambda, l, n)?;
    Ok(mu_pl * mu_pl / (2.0 * z * smoothness_of_objective(l, lambda, n)))
}

//! Bound evaluators, rate regimes, rate fitting and the exponential/power
//! comparison lemma.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-step bound on `E‖x^k − x(λ)‖²` for strongly convex problems:
/// `(1 − αμ_F)^k · init + 18ασ²/μ_F`, with `μ_F = μ/n`.
pub fn bound_convex_fixed(k: u64, alpha: f64, mu_f: f64, sigma_sq: f64, initial_sq_dist: f64) -> f64 {
    contraction(alpha * mu_f, k) * initial_sq_dist + 18.0 * alpha * sigma_sq / mu_f
}

/// Fixed-step bound on `E[F(x^k) − F*]` under the PL condition:
/// `(1 − μα)^k · gap + 9αL_Fσ_m²/μ`.
pub fn bound_pl_fixed(k: u64, alpha: f64, mu_pl: f64, l_f: f64, sigma_m_sq: f64, initial_gap: f64) -> f64 {
    contraction(alpha * mu_pl, k) * initial_gap + 9.0 * alpha * l_f * sigma_m_sq / mu_pl
}

fn contraction(rate: f64, k: u64) -> f64 {
    (1.0 - rate).powf(k as f64)
}

/// Predicted decay law of the expected error under `α_k = α_1 k^{−θ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateRegime {
    /// `k^{−exponent}`.
    Power { exponent: f64 },
    /// `(1 + log k)/k`.
    LogOverK,
}

impl RateRegime {
    /// Exponent a log-log fit of this law should recover asymptotically.
    pub fn exponent(&self) -> f64 {
        match self {
            RateRegime::Power { exponent } => *exponent,
            RateRegime::LogOverK => 1.0,
        }
    }

    pub fn shape(&self, k: f64) -> f64 {
        match self {
            RateRegime::Power { exponent } => k.powf(-exponent),
            RateRegime::LogOverK => (1.0 + k.ln()) / k,
        }
    }
}

/// Regime selection. `mu_eff` is the curvature constant of the theorem being
/// applied: the PL constant of `F` for the PL results, `μ/n` for the strongly
/// convex ones. For `θ = 1` the product `μ_eff α_1` picks between
/// `k^{−μ_eff α_1}` (below 1), `(1 + log k)/k` (equal to 1, up to `1e-12`) and
/// `1/k` (above 1).
pub fn bound_rate_exponent(theta: f64, alpha1: f64, mu_eff: f64) -> Result<RateRegime> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid(format!("theta must lie in [0, 1], got {theta}")));
    }
    if !(alpha1 > 0.0 && mu_eff > 0.0) {
        return Err(Error::invalid("alpha1 and mu_eff must be > 0"));
    }
    if theta < 1.0 {
        return Ok(RateRegime::Power { exponent: theta });
    }
    let prod = mu_eff * alpha1;
    Ok(if (prod - 1.0).abs() <= 1e-12 {
        RateRegime::LogOverK
    } else if prod < 1.0 {
        RateRegime::Power { exponent: prod }
    } else {
        RateRegime::Power { exponent: 1.0 }
    })
}

/// Negated least-squares slope of `log e` against `log k` over the points
/// with `k_min ≤ k ≤ k_max`.
pub fn fit_rate(points: &[(f64, f64)], k_min: f64, k_max: f64) -> Result<f64> {
    let window: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(k, _)| *k >= k_min && *k <= k_max)
        .collect();
    if window.len() < 2 {
        return Err(Error::Fit(format!("need at least two points in [{k_min}, {k_max}]")));
    }
    if let Some((k, e)) = window.iter().find(|(_, e)| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Fit(format!("non-positive error {e} at k = {k}")));
    }
    let logs: Vec<(f64, f64)> = window.iter().map(|(k, e)| (k.ln(), e.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all k in the window coincide".into()));
    }
    Ok(-sxy / sxx)
}

/// `(a/(ve))^a x^{−a} − e^{−vx}`, the slack in `e^{−vx} ≤ (a/(ve))^a x^{−a}`.
pub fn lemma4_gap(v: f64, a: f64, x: f64) -> f64 {
    lemma4_rhs(v, a, x) - (-v * x).exp()
}

fn lemma4_rhs(v: f64, a: f64, x: f64) -> f64 {
    (a * ((a / v).ln() - 1.0 - x.ln())).exp()
}

/// True iff `e^{−vx} ≤ (a/(ve))^a x^{−a}` at every `x` in `xs`, allowing a
/// relative rounding slack of `1e-12` (the two sides coincide at `x = a/v`).
pub fn lemma4_check(v: f64, a: f64, xs: &[f64]) -> bool {
    xs.iter().all(|&x| {
        let lhs = (-v * x).exp();
        lhs <= lemma4_rhs(v, a, x) * (1.0 + 1e-12)
    })
}

/// `count` points log-spaced between `lo` and `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}

//! Privacy accounting and distribution checks.
//!
//! The private solver touches the data only through the noisy per-vertex
//! counts, one Laplace draw per vertex below the cutoff. Adding or removing
//! a single client changes one count per level along a root-to-leaf path,
//! so the mechanism's privacy cost is the sum over levels of the per-draw
//! parameters `ε_ℓ = 1/b_ℓ`. This module builds that ledger, evaluates the
//! exact marking probabilities implied by the Laplace law, and verifies the
//! neighboring-input ratio bound both analytically and by Monte Carlo.
//! The Monte Carlo path reuses nothing from the analytic one, so each side
//! can catch the other drifting.

use rand::Rng;

use crate::error::{Error, Result};
use crate::solver::{laplace_scale, sample_laplace, SolverParams};

/// One noised level and its share of the privacy budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub level: usize,
    /// Laplace scale `b_ℓ` used at this level.
    pub scale: f64,
    /// Budget share `ε_ℓ = 1/b_ℓ`.
    pub epsilon: f64,
}

/// The complete accounting of a solve with the given parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyLedger {
    pub entries: Vec<LedgerEntry>,
    /// Sum of the per-level shares. The mechanism satisfies
    /// `total`-differential privacy, and `total ≤ ε` always.
    pub total: f64,
}

/// Per-level budget shares for levels `0..l_prime`. With `l_prime = 0`
/// nothing is noised and the ledger is empty with total zero.
pub fn build_ledger(params: &SolverParams, l_prime: usize) -> PrivacyLedger {
    let mut entries = Vec::with_capacity(l_prime);
    let mut total = 0.0;
    for level in 0..l_prime {
        let scale = laplace_scale(params, l_prime, level);
        let epsilon = 1.0 / scale;
        entries.push(LedgerEntry {
            level,
            scale,
            epsilon,
        });
        total += epsilon;
    }
    PrivacyLedger { entries, total }
}

/// Geometric-series form of the ledger total:
/// `(c·η^{L'}/f) · (η^{L'}−1)/(η−1)`.
pub fn ledger_closed_form(params: &SolverParams, l_prime: usize) -> f64 {
    if l_prime == 0 {
        return 0.0;
    }
    let eta = params.eta();
    let lead = params.c() * eta.powi(l_prime as i32) / params.facility_cost;
    lead * (eta.powi(l_prime as i32) - 1.0) / (eta - 1.0)
}

/// CDF of the centered Laplace distribution with scale `b`.
pub fn laplace_cdf(x: f64, b: f64) -> f64 {
    if x <= 0.0 {
        0.5 * (x / b).exp()
    } else {
        1.0 - 0.5 * (-x / b).exp()
    }
}

/// Survival function `Pr[Lap(b) ≥ x]`. Each branch evaluates its own
/// exponential, so tiny tails keep full relative precision instead of being
/// recovered from `1 − cdf`.
pub fn laplace_sf(x: f64, b: f64) -> f64 {
    if x >= 0.0 {
        0.5 * (-x / b).exp()
    } else {
        1.0 - 0.5 * (x / b).exp()
    }
}

fn level_threshold_and_scale(
    params: &SolverParams,
    l_prime: usize,
    level: usize,
) -> Result<(f64, f64)> {
    if level >= l_prime {
        return Err(Error::InvalidParameter {
            name: "level",
            reason: format!("level {level} is not noised when the cutoff is {l_prime}"),
        });
    }
    let threshold = params.facility_cost / params.lambda.powi(level as i32);
    let b = laplace_scale(params, l_prime, level);
    Ok((threshold, b))
}

/// Exact probability that a vertex at `level < l_prime` holding `n` clients
/// is marked: `Pr[n + Lap(b_ℓ) ≥ f/λ^ℓ]`.
pub fn marking_prob(params: &SolverParams, l_prime: usize, level: usize, n: f64) -> Result<f64> {
    let (threshold, b) = level_threshold_and_scale(params, l_prime, level)?;
    Ok(laplace_sf(threshold - n, b))
}

/// Marking probability and its complement, both at full relative precision.
pub fn marking_prob_pair(
    params: &SolverParams,
    l_prime: usize,
    level: usize,
    n: f64,
) -> Result<(f64, f64)> {
    let (threshold, b) = level_threshold_and_scale(params, l_prime, level)?;
    Ok((laplace_sf(threshold - n, b), laplace_cdf(threshold - n, b)))
}

/// Log of the Laplace CDF. The deep left tail is a plain linear expression
/// in log space, so it stays exact far past the point where the probability
/// itself would round to a subnormal.
fn laplace_log_cdf(x: f64, b: f64) -> f64 {
    if x <= 0.0 {
        (0.5f64).ln() + x / b
    } else {
        (-0.5 * (-x / b).exp()).ln_1p()
    }
}

/// Log of the Laplace survival function, mirror image of [`laplace_log_cdf`].
fn laplace_log_sf(x: f64, b: f64) -> f64 {
    if x >= 0.0 {
        (0.5f64).ln() - x / b
    } else {
        (-0.5 * (x / b).exp()).ln_1p()
    }
}

/// Largest ratio between marking (and non-marking) probabilities of
/// neighboring counts `n` and `n+1`, maximized over `n ∈ 0..=n_max`.
/// The Laplace mechanism guarantees this never exceeds `e^{ε_ℓ}`.
///
/// The comparison runs on log probabilities. Dividing the raw tail values
/// would lose everything once both sides underflow toward subnormals, which
/// happens already at moderate counts when the noise scale is large.
pub fn neighbor_ratio(
    params: &SolverParams,
    l_prime: usize,
    level: usize,
    n_max: u64,
) -> Result<f64> {
    let (threshold, b) = level_threshold_and_scale(params, l_prime, level)?;
    let mut worst_log: f64 = 0.0;
    for n in 0..=n_max {
        let x_n = threshold - n as f64;
        let x_m = threshold - (n + 1) as f64;
        let sf_n = laplace_log_sf(x_n, b);
        let sf_m = laplace_log_sf(x_m, b);
        let cdf_n = laplace_log_cdf(x_n, b);
        let cdf_m = laplace_log_cdf(x_m, b);
        for d in [sf_n - sf_m, sf_m - sf_n, cdf_n - cdf_m, cdf_m - cdf_n] {
            if d > worst_log {
                worst_log = d;
            }
        }
    }
    Ok(worst_log.exp())
}

/// Monte Carlo estimate of the same marking probability, straight from the
/// sampler the solver uses. Kept free of any shared closed-form code so it
/// can serve as an independent cross-check.
pub fn mc_marking_prob(
    params: &SolverParams,
    l_prime: usize,
    level: usize,
    n: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if level >= l_prime {
        return Err(Error::InvalidParameter {
            name: "level",
            reason: format!("level {level} is not noised when the cutoff is {l_prime}"),
        });
    }
    let threshold = params.facility_cost / params.lambda.powi(level as i32);
    let b = laplace_scale(params, l_prime, level);
    let mut hits = 0usize;
    for _ in 0..samples {
        if n + sample_laplace(b, rng) >= threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}

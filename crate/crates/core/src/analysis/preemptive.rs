//! Preemptive M/G/1/1: every arrival displaces the update in service.
//!
//! An update is delivered iff its service `S` finishes before the next
//! arrival, which happens with probability `P(λ) = E[e^{-λS}]`. All HARQ
//! formulas here are evaluated in log space; their exponents (`k_s` or
//! `k_p`) push the linear-scale values past `f64` quickly.

use serde::Serialize;

use super::blocking::decodable_erasure_prob;
use super::{check_rate, exp_age, AgeReport, Formula, Method, OptimalRate, OptimumReport};
use crate::distributions::ServiceDistribution;
use crate::error::Result;
use crate::harq::{check_delta, HarqScheme};
use crate::roots::bisect;

/// Absolute tolerance on the optimal arrival rate.
const RATE_TOL: f64 = 1e-12;

/// `Δ = 1/(λP(λ))`.
pub fn age_preemptive(dist: &ServiceDistribution, lam: f64) -> Result<AgeReport> {
    check_rate(lam)?;
    let log_age = -lam.ln() - dist.ln_laplace(lam);
    let avg_age = exp_age(log_age)?;
    Ok(AgeReport {
        avg_age,
        effective_rate: (-log_age).exp(),
        utilization_beta: None,
        formula: Formula::PreemptiveGeneral,
    })
}

/// Mean service time of delivered updates, `-P'(λ)/P(λ)`.
pub fn preemptive_system_time_mean(dist: &ServiceDistribution, lam: f64) -> Result<f64> {
    check_rate(lam)?;
    Ok(-dist.ln_laplace_deriv(lam))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterdepartureMoments {
    pub mean: f64,
    pub second_moment: f64,
}

/// First two moments of the time between successive deliveries:
/// `E(Y) = 1/(λP)` and `E(Y²) = 2(1 + λP') / (λP)²`.
pub fn preemptive_interdeparture_moments(dist: &ServiceDistribution, lam: f64) -> Result<InterdepartureMoments> {
    check_rate(lam)?;
    let mean = exp_age(-lam.ln() - dist.ln_laplace(lam))?;
    let lam_dp = lam * dist.laplace(lam) * dist.ln_laplace_deriv(lam);
    Ok(InterdepartureMoments { mean, second_moment: 2.0 * mean * mean * (1.0 + lam_dp) })
}

/// `ln((e^s - ε)/(1 - ε))` without overflowing `e^s`.
fn ln_inflation(s: f64, eps: f64) -> f64 {
    s + (-eps * (-s).exp()).ln_1p() - (-eps).ln_1p()
}

fn harq_report(log_age: f64, formula: Formula) -> Result<AgeReport> {
    Ok(AgeReport {
        avg_age: exp_age(log_age)?,
        effective_rate: (-log_age).exp(),
        utilization_beta: None,
        formula,
    })
}

/// `Δ = (1/λ)((e^λ - δ)/(1 - δ))^{k_s}`.
pub fn age_preemptive_iir(k_s: u32, delta: f64, lam: f64) -> Result<AgeReport> {
    HarqScheme::iir(k_s)?;
    check_delta(delta)?;
    check_rate(lam)?;
    harq_report(f64::from(k_s) * ln_inflation(lam, delta) - lam.ln(), Formula::PreemptiveIir)
}

/// `Δ = (1/λ)((1 - e^{-λn_s}ε_p)/(e^{-λn_s}(1 - ε_p)))^{k_p}`.
pub fn age_preemptive_fr(k_s: u32, n_s: u32, k_p: u32, delta: f64, lam: f64) -> Result<AgeReport> {
    check_rate(lam)?;
    let eps = decodable_erasure_prob(k_s, n_s, k_p, delta)?;
    preemptive_fr_with_eps(n_s, k_p, eps, lam)
}

fn preemptive_fr_with_eps(n_s: u32, k_p: u32, eps: f64, lam: f64) -> Result<AgeReport> {
    let log_age = f64::from(k_p) * ln_inflation(lam * f64::from(n_s), eps) - lam.ln();
    harq_report(log_age, Formula::PreemptiveFr)
}

/// Shared optimizer for both HARQ schemes. With `block` channel uses per
/// trial, `count` successes needed and trial failure probability `fail`,
/// the age is stationary where `e^{λ·block}(count·block·λ - 1) = -fail`.
/// The left side rises from -1 at `λ = 0` to 0 at `λ = 1/(count·block)`.
fn optimize(block: f64, count: f64, fail: f64, age: impl Fn(f64) -> Result<AgeReport>) -> Result<OptimumReport> {
    let hi = 1.0 / (count * block);
    let rate = bisect(|l| (l * block).exp() * (count * block * l - 1.0) + fail, 0.0, hi, RATE_TOL)?;
    let optimal_age = age(rate)?.avg_age;

    // Replacing e^{λ·block} by 1 + λ·block turns the stationarity condition
    // into a quadratic with a single positive root.
    let approx = (1.0 - count + ((count + 1.0).powi(2) - 4.0 * count * fail).sqrt()) / (2.0 * block * count);
    let bound = exp_age(count * (approx * block / (1.0 - fail)).ln_1p() - approx.ln())?;

    Ok(OptimumReport {
        optimal_rate: OptimalRate::Finite(rate),
        optimal_age,
        bound_lower: Some(bound),
        approx_rate: Some(approx),
        method: Method::RootSolve,
    })
}

/// Minimizes [`age_preemptive_iir`] over `λ`. The optimum lies in `(0, 1/k_s]`.
pub fn optimal_preemptive_iir(k_s: u32, delta: f64) -> Result<OptimumReport> {
    HarqScheme::iir(k_s)?;
    check_delta(delta)?;
    optimize(1.0, f64::from(k_s), delta, |l| age_preemptive_iir(k_s, delta, l))
}

/// Minimizes [`age_preemptive_fr`] over `λ`. The optimum lies in `(0, 1/(n_s k_p)]`.
pub fn optimal_preemptive_fr(k_s: u32, n_s: u32, k_p: u32, delta: f64) -> Result<OptimumReport> {
    let eps = decodable_erasure_prob(k_s, n_s, k_p, delta)?;
    optimize(f64::from(n_s), f64::from(k_p), eps, |l| preemptive_fr_with_eps(n_s, k_p, eps, l))
}

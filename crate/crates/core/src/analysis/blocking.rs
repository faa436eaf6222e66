use super::{check_rate, AgeReport, Formula, Method, OptimalRate, OptimumReport};
use crate::distributions::ServiceDistribution;
use crate::error::{Error, Result};
use crate::harq::{check_delta, packet_erasure_prob, HarqScheme};

/// Average age of the M/G/1/1 queue that discards arrivals finding the
/// server busy: `Δ = E(S)(β(C_S+1)/2 + 1/β)` with `β = ρ/(ρ+1)`, `ρ = λE(S)`.
pub fn age_blocking(dist: &ServiceDistribution, lam: f64) -> Result<AgeReport> {
    check_rate(lam)?;
    let mean = dist.mean();
    let rho = lam * mean;
    let beta = rho / (rho + 1.0);
    let avg_age = mean * (0.5 * beta * (dist.scv() + 1.0) + 1.0 / beta);
    Ok(AgeReport {
        avg_age,
        effective_rate: 1.0 / (1.0 / lam + mean),
        utilization_beta: Some(beta),
        formula: Formula::BlockingGeneral,
    })
}

/// Rate and age minimizing [`age_blocking`].
///
/// A finite optimum exists only when `C_S > 1`; otherwise the age decreases
/// in `λ` and the report carries the `λ → ∞` limit.
pub fn optimal_blocking(dist: &ServiceDistribution) -> OptimumReport {
    let mean = dist.mean();
    let scv = dist.scv();
    if scv > 1.0 {
        let beta = (2.0 / (scv + 1.0)).sqrt();
        OptimumReport {
            optimal_rate: OptimalRate::Finite(beta / ((1.0 - beta) * mean)),
            optimal_age: mean * (2.0 * (scv + 1.0)).sqrt(),
            bound_lower: None,
            approx_rate: None,
            method: Method::ClosedForm,
        }
    } else {
        OptimumReport {
            optimal_rate: OptimalRate::Unbounded,
            optimal_age: mean * (0.5 * (scv + 1.0) + 1.0),
            bound_lower: None,
            approx_rate: None,
            method: Method::ClosedForm,
        }
    }
}

pub fn age_blocking_iir(k_s: u32, delta: f64, lam: f64) -> Result<AgeReport> {
    HarqScheme::iir(k_s)?;
    check_delta(delta)?;
    check_rate(lam)?;
    let k = f64::from(k_s);
    let keep = 1.0 - delta;
    let avg_age = 1.0 / lam + k / keep + lam * k * (k + delta) / (2.0 * keep * (lam * k + keep));
    Ok(AgeReport {
        avg_age,
        effective_rate: 1.0 / (1.0 / lam + k / keep),
        utilization_beta: Some(lam * k / (lam * k + keep)),
        formula: Formula::BlockingIir,
    })
}

pub fn min_age_blocking_iir(k_s: u32, delta: f64) -> Result<OptimumReport> {
    HarqScheme::iir(k_s)?;
    check_delta(delta)?;
    let k = f64::from(k_s);
    Ok(OptimumReport {
        optimal_rate: OptimalRate::Unbounded,
        optimal_age: (3.0 * k + delta) / (2.0 * (1.0 - delta)),
        bound_lower: None,
        approx_rate: None,
        method: Method::ClosedForm,
    })
}

/// `ε_p`, rejected when it rounds to one.
pub(crate) fn decodable_erasure_prob(k_s: u32, n_s: u32, k_p: u32, delta: f64) -> Result<f64> {
    HarqScheme::fr(k_s, n_s, k_p)?;
    let eps = packet_erasure_prob(n_s, k_s, delta)?;
    if eps >= 1.0 {
        return Err(Error::invalid(
            "delta",
            format!("packet erasure probability rounds to 1 for n_s = {n_s}, k_s = {k_s}, delta = {delta}"),
        ));
    }
    Ok(eps)
}

pub fn age_blocking_fr(k_s: u32, n_s: u32, k_p: u32, delta: f64, lam: f64) -> Result<AgeReport> {
    check_rate(lam)?;
    let eps = decodable_erasure_prob(k_s, n_s, k_p, delta)?;
    let n = f64::from(n_s);
    let kp = f64::from(k_p);
    let keep = 1.0 - eps;
    let avg_age =
        1.0 / lam + n * kp / keep + lam * n * n * kp * (kp + eps) / (2.0 * keep * (lam * n * kp + keep));
    Ok(AgeReport {
        avg_age,
        effective_rate: 1.0 / (1.0 / lam + n * kp / keep),
        utilization_beta: Some(lam * n * kp / (lam * n * kp + keep)),
        formula: Formula::BlockingFr,
    })
}

/// The `λ → ∞` limit of [`age_blocking_fr`], `n_s(3k_p + ε_p) / (2(1 - ε_p))`.
pub fn min_age_blocking_fr(k_s: u32, n_s: u32, k_p: u32, delta: f64) -> Result<OptimumReport> {
    let eps = decodable_erasure_prob(k_s, n_s, k_p, delta)?;
    let n = f64::from(n_s);
    let kp = f64::from(k_p);
    Ok(OptimumReport {
        optimal_rate: OptimalRate::Unbounded,
        optimal_age: n * (3.0 * kp + eps) / (2.0 * (1.0 - eps)),
        bound_lower: None,
        approx_rate: None,
        method: Method::ClosedForm,
    })
}

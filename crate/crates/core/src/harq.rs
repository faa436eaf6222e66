//! HARQ service models over a memoryless symbol erasure channel.
//!
//! An IIR update ends at the `k_s`-th unerased symbol. An FR update is split
//! into `k_p` packets, each carried by an `(n_s, k_s)` MDS codeword that
//! decodes when at least `k_s` of its `n_s` symbols survive; the update ends
//! at the `k_p`-th decodable codeword.

use rand::Rng;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::distributions::ServiceDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum HarqScheme {
    Iir { k_s: u32 },
    Fr { k_s: u32, n_s: u32, k_p: u32 },
}

impl HarqScheme {
    pub fn iir(k_s: u32) -> Result<Self> {
        let s = HarqScheme::Iir { k_s };
        s.validate()?;
        Ok(s)
    }

    pub fn fr(k_s: u32, n_s: u32, k_p: u32) -> Result<Self> {
        let s = HarqScheme::Fr { k_s, n_s, k_p };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            HarqScheme::Iir { k_s } => {
                if k_s == 0 {
                    return Err(Error::invalid("k_s", "must be at least 1"));
                }
            }
            HarqScheme::Fr { k_s, n_s, k_p } => {
                if k_s == 0 {
                    return Err(Error::invalid("k_s", "must be at least 1"));
                }
                if n_s < k_s {
                    return Err(Error::invalid("n_s", format!("n_s = {n_s} is below k_s = {k_s}")));
                }
                if k_p == 0 {
                    return Err(Error::invalid("k_p", "must be at least 1"));
                }
            }
        }
        Ok(())
    }

    /// Information symbols per update.
    pub fn total_symbols(&self) -> u64 {
        match *self {
            HarqScheme::Iir { k_s } => u64::from(k_s),
            HarqScheme::Fr { k_s, k_p, .. } => u64::from(k_s) * u64::from(k_p),
        }
    }
}

/// Memoryless symbol erasure channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ErasureChannel {
    delta: f64,
}

impl ErasureChannel {
    pub fn new(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(ErasureChannel { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<f64> {
    if (0.0..1.0).contains(&delta) {
        Ok(delta)
    } else {
        Err(Error::invalid("delta", format!("erasure probability must lie in [0, 1), got {delta}")))
    }
}

fn ln_choose(n: u32, i: u32) -> f64 {
    let n = f64::from(n);
    let i = f64::from(i);
    ln_gamma(n + 1.0) - ln_gamma(i + 1.0) - ln_gamma(n - i + 1.0)
}

/// Probability that fewer than `k_s` of `n_s` symbols survive the channel.
///
/// Summed in log space, so large codewords do not underflow the individual
/// binomial terms.
pub fn packet_erasure_prob(n_s: u32, k_s: u32, delta: f64) -> Result<f64> {
    if k_s == 0 {
        return Err(Error::invalid("k_s", "must be at least 1"));
    }
    if n_s < k_s {
        return Err(Error::invalid("n_s", format!("n_s = {n_s} is below k_s = {k_s}")));
    }
    check_delta(delta)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let failure = ln_binomial_mass(n_s, 0..k_s, delta).exp().min(1.0);
    if failure <= 0.5 {
        return Ok(failure);
    }
    // Near one, the complement (at least k_s survivors) keeps the precision.
    Ok(1.0 - ln_binomial_mass(n_s, k_s..n_s + 1, delta).exp())
}

/// `ln Σ_{i ∈ survivors} C(n, i) δ^{n-i} (1-δ)^i`, by log-sum-exp.
fn ln_binomial_mass(n_s: u32, survivors: std::ops::Range<u32>, delta: f64) -> f64 {
    let ln_erase = delta.ln();
    let ln_keep = (-delta).ln_1p();
    let terms: Vec<f64> = survivors
        .map(|i| ln_choose(n_s, i) + f64::from(n_s - i) * ln_erase + f64::from(i) * ln_keep)
        .collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln()
}

/// The exact service-time law of `scheme` on channel `ch`.
///
/// Fails only when the FR packet erasure probability rounds to 1, which
/// leaves the service time without a finite mean.
pub fn service_distribution(scheme: &HarqScheme, ch: &ErasureChannel) -> Result<ServiceDistribution> {
    scheme.validate()?;
    match *scheme {
        HarqScheme::Iir { k_s } => ServiceDistribution::neg_binomial(k_s, 1.0 - ch.delta),
        HarqScheme::Fr { k_s, n_s, k_p } => {
            let eps = packet_erasure_prob(n_s, k_s, ch.delta)?;
            ServiceDistribution::scaled_neg_binomial(n_s, k_p, 1.0 - eps).map_err(|_| {
                Error::invalid("delta", format!("packet erasure probability {eps} leaves no decodable packets"))
            })
        }
    }
}

/// Channel uses to deliver one update, simulated symbol by symbol.
///
/// FR codewords always occupy all `n_s` channel uses, even when decodability
/// is settled before the last symbol arrives.
pub fn sample_service_symbolwise<R: Rng + ?Sized>(
    scheme: &HarqScheme,
    ch: &ErasureChannel,
    rng: &mut R,
) -> u64 {
    let delta = ch.delta;
    match *scheme {
        HarqScheme::Iir { k_s } => {
            let mut uses = 0u64;
            let mut received = 0u32;
            while received < k_s {
                uses += 1;
                if rng.random::<f64>() >= delta {
                    received += 1;
                }
            }
            uses
        }
        HarqScheme::Fr { k_s, n_s, k_p } => {
            let mut uses = 0u64;
            let mut decoded = 0u32;
            while decoded < k_p {
                let survived = (0..n_s).filter(|_| rng.random::<f64>() >= delta).count();
                uses += u64::from(n_s);
                if survived >= k_s as usize {
                    decoded += 1;
                }
            }
            uses
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn erasure_prob_examples() {
        for k in [1, 4, 9] {
            let direct = 1.0 - 0.7f64.powi(k as i32);
            assert_relative_eq!(packet_erasure_prob(k, k, 0.3).unwrap(), direct, max_relative = 1e-12);
        }
        assert_relative_eq!(packet_erasure_prob(4, 4, 0.3).unwrap(), 0.7599, max_relative = 1e-12);
        assert_eq!(packet_erasure_prob(10, 2, 0.0).unwrap(), 0.0);
        assert_relative_eq!(packet_erasure_prob(2, 1, 0.5).unwrap(), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn erasure_prob_rejects_short_codeword() {
        assert!(packet_erasure_prob(3, 4, 0.1).is_err());
        assert!(packet_erasure_prob(4, 4, 1.0).is_err());
    }

    #[test]
    fn erasure_prob_large_codewords_stay_finite() {
        let e = packet_erasure_prob(10_000, 9_000, 0.05).unwrap();
        assert!(e.is_finite() && (0.0..1.0).contains(&e));
        let e = packet_erasure_prob(10_000, 7_000, 0.3).unwrap();
        assert!(e > 0.4 && e < 0.6, "{e}");
    }

    /// Direct summation with f64 binomials, valid for small codewords.
    fn erasure_prob_naive(n: u32, k: u32, d: f64) -> f64 {
        let mut c = 1.0;
        let mut sum = 0.0;
        for i in 0..k {
            if i > 0 {
                c *= f64::from(n - i + 1) / f64::from(i);
            }
            sum += c * d.powi((n - i) as i32) * (1.0 - d).powi(i as i32);
        }
        sum
    }

    #[test]
    fn erasure_prob_matches_naive_sum() {
        for (n, k) in [(5, 3), (25, 20), (40, 20), (60, 30)] {
            for d in [0.05, 0.2, 0.5, 0.8] {
                assert_relative_eq!(
                    packet_erasure_prob(n, k, d).unwrap(),
                    erasure_prob_naive(n, k, d),
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn erasure_prob_monotone() {
        for k in [1, 5, 20] {
            let mut prev_n = 1.0;
            for n in k..k + 60 {
                let e = packet_erasure_prob(n, k, 0.25).unwrap();
                assert!(e <= prev_n + 1e-15);
                prev_n = e;
            }
            let mut prev_d = 0.0;
            for j in 0..100 {
                let e = packet_erasure_prob(2 * k, k, f64::from(j) / 100.0).unwrap();
                assert!(e >= prev_d - 1e-15);
                prev_d = e;
            }
        }
    }

    #[test]
    fn service_distribution_examples() {
        let ch = ErasureChannel::new(0.2).unwrap();
        let iir = service_distribution(&HarqScheme::iir(100).unwrap(), &ch).unwrap();
        assert_eq!(iir, ServiceDistribution::neg_binomial(100, 0.8).unwrap());
        assert_relative_eq!(iir.mean(), 125.0, max_relative = 1e-12);

        let fr1 = service_distribution(&HarqScheme::fr(1, 1, 7).unwrap(), &ch).unwrap();
        let iir7 = service_distribution(&HarqScheme::iir(7).unwrap(), &ch).unwrap();
        assert_eq!(fr1.mean(), iir7.mean());
        assert_eq!(fr1.laplace(0.3), iir7.laplace(0.3));

        let fr = service_distribution(&HarqScheme::fr(20, 30, 5).unwrap(), &ch).unwrap();
        let eps = packet_erasure_prob(30, 20, 0.2).unwrap();
        assert_eq!(fr, ServiceDistribution::scaled_neg_binomial(30, 5, 1.0 - eps).unwrap());
    }

    #[test]
    fn symbolwise_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let clear = ErasureChannel::new(0.0).unwrap();
        for _ in 0..50 {
            assert_eq!(sample_service_symbolwise(&HarqScheme::iir(5).unwrap(), &clear, &mut rng), 5);
            assert_eq!(sample_service_symbolwise(&HarqScheme::fr(2, 2, 3).unwrap(), &clear, &mut rng), 6);
        }
    }

    #[test]
    fn symbolwise_iir_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = ErasureChannel::new(0.2).unwrap();
        let s = HarqScheme::iir(100).unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| sample_service_symbolwise(&s, &ch, &mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - 125.0).abs() / 125.0 < 0.01, "{mean}");
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ErasureChannel::new(1.0).is_err());
        assert!(ErasureChannel::new(-0.1).is_err());
        assert!(HarqScheme::fr(5, 4, 1).is_err());
        assert!(HarqScheme::fr(5, 5, 0).is_err());
        assert!(HarqScheme::iir(0).is_err());
        assert_eq!(HarqScheme::fr(20, 25, 5).unwrap().total_symbols(), 100);
    }
}

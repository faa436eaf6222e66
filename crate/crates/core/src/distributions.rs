//! Service-time laws.
//!
//! Every law exposes its exact mean and variance, the Laplace transform
//! `P(λ) = E[exp(-λS)]` with its derivative, and an exact sampler. Discrete
//! laws live on the continuous time axis with one channel use equal to one
//! time unit.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on the sum of hyperexponential branch weights.
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Success probability at or above which negative-binomial draws count
/// Bernoulli trials one by one instead of summing geometric variates.
const COUNTING_THRESHOLD: f64 = 0.5;

/// The parameters of one service law.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    Deterministic { d: f64 },
    Exponential { mu: f64 },
    Gamma { shape: f64, scale: f64 },
    HyperExponential { weights: Vec<f64>, rates: Vec<f64> },
    /// Number of trials up to and including the `k`-th success.
    NegBinomial { k: u32, q: f64 },
    /// `n` times a `NegBinomial { k, q }` variate.
    ScaledNegBinomial { n: u32, k: u32, q: f64 },
}

/// A validated service-time distribution. Build one through the named
/// constructors or `TryFrom<Law>`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ServiceDistribution {
    law: Law,
}

fn positive_finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

fn success_prob(name: &'static str, q: f64) -> Result<f64> {
    if q > 0.0 && q <= 1.0 {
        Ok(q)
    } else {
        Err(Error::invalid(name, format!("must lie in (0, 1], got {q}")))
    }
}

fn positive_count(name: &'static str, k: u32) -> Result<u32> {
    if k >= 1 {
        Ok(k)
    } else {
        Err(Error::invalid(name, "must be at least 1"))
    }
}

impl TryFrom<Law> for ServiceDistribution {
    type Error = Error;

    fn try_from(law: Law) -> Result<Self> {
        match &law {
            Law::Deterministic { d } => {
                positive_finite("d", *d)?;
            }
            Law::Exponential { mu } => {
                positive_finite("mu", *mu)?;
            }
            Law::Gamma { shape, scale } => {
                positive_finite("shape", *shape)?;
                positive_finite("scale", *scale)?;
            }
            Law::HyperExponential { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(Error::invalid(
                        "weights",
                        format!(
                            "need equal, nonzero lengths (weights {}, rates {})",
                            weights.len(),
                            rates.len()
                        ),
                    ));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::invalid("weights", "entries must be nonnegative"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::invalid("weights", format!("sum to {total}, not 1")));
                }
                for &r in rates {
                    positive_finite("rates", r)?;
                }
            }
            Law::NegBinomial { k, q } => {
                positive_count("k", *k)?;
                success_prob("q", *q)?;
            }
            Law::ScaledNegBinomial { n, k, q } => {
                positive_count("n", *n)?;
                positive_count("k", *k)?;
                success_prob("q", *q)?;
            }
        }
        Ok(ServiceDistribution { law })
    }
}

impl ServiceDistribution {
    pub fn deterministic(d: f64) -> Result<Self> {
        Law::Deterministic { d }.try_into()
    }

    pub fn exponential(mu: f64) -> Result<Self> {
        Law::Exponential { mu }.try_into()
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Law::Gamma { shape, scale }.try_into()
    }

    pub fn hyper_exponential(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        Law::HyperExponential { weights, rates }.try_into()
    }

    pub fn neg_binomial(k: u32, q: f64) -> Result<Self> {
        Law::NegBinomial { k, q }.try_into()
    }

    pub fn scaled_neg_binomial(n: u32, k: u32, q: f64) -> Result<Self> {
        Law::ScaledNegBinomial { n, k, q }.try_into()
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    /// Whether every draw takes an integer number of channel uses.
    pub fn is_lattice(&self) -> bool {
        matches!(self.law, Law::NegBinomial { .. } | Law::ScaledNegBinomial { .. })
    }

    pub fn mean(&self) -> f64 {
        match &self.law {
            Law::Deterministic { d } => *d,
            Law::Exponential { mu } => 1.0 / mu,
            Law::Gamma { shape, scale } => shape * scale,
            Law::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w / r).sum()
            }
            Law::NegBinomial { k, q } => f64::from(*k) / q,
            Law::ScaledNegBinomial { n, k, q } => f64::from(*n) * f64::from(*k) / q,
        }
    }

    pub fn variance(&self) -> f64 {
        match &self.law {
            Law::Deterministic { .. } => 0.0,
            Law::Exponential { mu } => 1.0 / (mu * mu),
            Law::Gamma { shape, scale } => shape * scale * scale,
            Law::HyperExponential { weights, rates } => {
                let second: f64 = weights.iter().zip(rates).map(|(w, r)| 2.0 * w / (r * r)).sum();
                let m = self.mean();
                (second - m * m).max(0.0)
            }
            Law::NegBinomial { k, q } => f64::from(*k) * (1.0 - q) / (q * q),
            Law::ScaledNegBinomial { n, k, q } => {
                let n = f64::from(*n);
                n * n * f64::from(*k) * (1.0 - q) / (q * q)
            }
        }
    }

    pub fn second_moment(&self) -> f64 {
        let m = self.mean();
        self.variance() + m * m
    }

    /// Squared coefficient of variation `Var(S) / E(S)^2`.
    pub fn scv(&self) -> f64 {
        match &self.law {
            // Exact forms avoid the cancellation in variance / mean^2.
            Law::NegBinomial { k, q } | Law::ScaledNegBinomial { k, q, .. } => {
                (1.0 - q) / f64::from(*k)
            }
            Law::Exponential { .. } => 1.0,
            _ => {
                let m = self.mean();
                self.variance() / (m * m)
            }
        }
    }

    /// `ln P(λ)`. Finite for every law and every `λ ≥ 0`, even where `P`
    /// itself underflows.
    pub fn ln_laplace(&self, lam: f64) -> f64 {
        if lam == 0.0 {
            return 0.0;
        }
        match &self.law {
            Law::Deterministic { d } => -lam * d,
            Law::Exponential { mu } => (mu / (mu + lam)).ln(),
            Law::Gamma { shape, scale } => -shape * (lam * scale).ln_1p(),
            Law::HyperExponential { .. } => self.laplace(lam).ln(),
            Law::NegBinomial { k, q } => f64::from(*k) * ln_geometric_transform(*q, lam),
            Law::ScaledNegBinomial { n, k, q } => {
                f64::from(*k) * ln_geometric_transform(*q, lam * f64::from(*n))
            }
        }
    }

    /// Laplace transform `P(λ) = E[exp(-λS)]`; exactly 1 at `λ = 0`.
    pub fn laplace(&self, lam: f64) -> f64 {
        if lam == 0.0 {
            return 1.0;
        }
        match &self.law {
            Law::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w * r / (r + lam)).sum()
            }
            _ => self.ln_laplace(lam).exp(),
        }
    }

    /// `d ln P / dλ`, which equals `-E[S e^{-λS}] / E[e^{-λS}]`.
    pub fn ln_laplace_deriv(&self, lam: f64) -> f64 {
        match &self.law {
            Law::Deterministic { d } => -d,
            Law::Exponential { mu } => -1.0 / (mu + lam),
            Law::Gamma { shape, scale } => -shape * scale / (1.0 + lam * scale),
            Law::HyperExponential { weights, rates } => {
                let (num, den) = weights.iter().zip(rates).fold((0.0, 0.0), |(num, den), (w, r)| {
                    (num + w * r / ((r + lam) * (r + lam)), den + w * r / (r + lam))
                });
                -num / den
            }
            // 1 - (1-q)e^{-s} written as q - (1-q)(e^{-s} - 1) to keep precision near s = 0.
            Law::NegBinomial { k, q } => -f64::from(*k) / (q - (1.0 - q) * (-lam).exp_m1()),
            Law::ScaledNegBinomial { n, k, q } => {
                let n = f64::from(*n);
                -n * f64::from(*k) / (q - (1.0 - q) * (-lam * n).exp_m1())
            }
        }
    }

    /// Analytic `dP/dλ`.
    pub fn laplace_deriv(&self, lam: f64) -> f64 {
        match &self.law {
            Law::Exponential { mu } => -mu / ((mu + lam) * (mu + lam)),
            Law::HyperExponential { weights, rates } => {
                -weights.iter().zip(rates).map(|(w, r)| w * r / ((r + lam) * (r + lam))).sum::<f64>()
            }
            _ => self.laplace(lam) * self.ln_laplace_deriv(lam),
        }
    }
}

/// `ln(q e^{-s} / (1 - (1-q) e^{-s}))`, the log transform of one geometric
/// trial count (support 1, 2, ...).
fn ln_geometric_transform(q: f64, s: f64) -> f64 {
    q.ln() - s - (-(1.0 - q) * (-s).exp()).ln_1p()
}

impl Distribution<f64> for ServiceDistribution {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.law {
            Law::Deterministic { d } => *d,
            Law::Exponential { mu } => Exp::new(*mu).expect("validated rate").sample(rng),
            Law::Gamma { shape, scale } => {
                Gamma::new(*shape, *scale).expect("validated gamma").sample(rng)
            }
            Law::HyperExponential { weights, rates } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut branch = rates.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        branch = i;
                        break;
                    }
                }
                Exp::new(rates[branch]).expect("validated rate").sample(rng)
            }
            Law::NegBinomial { k, q } => sample_neg_binomial(*k, *q, rng) as f64,
            Law::ScaledNegBinomial { n, k, q } => {
                (u64::from(*n) * sample_neg_binomial(*k, *q, rng)) as f64
            }
        }
    }
}

/// Trials needed for `k` successes with success probability `q`.
pub(crate) fn sample_neg_binomial<R: Rng + ?Sized>(k: u32, q: f64, rng: &mut R) -> u64 {
    if q >= 1.0 {
        u64::from(k)
    } else if q >= COUNTING_THRESHOLD {
        neg_binomial_by_counting(k, q, rng)
    } else {
        neg_binomial_by_geometric_sum(k, q, rng)
    }
}

pub(crate) fn neg_binomial_by_counting<R: Rng + ?Sized>(k: u32, q: f64, rng: &mut R) -> u64 {
    let mut trials = 0u64;
    let mut successes = 0u32;
    while successes < k {
        trials += 1;
        if rng.random::<f64>() < q {
            successes += 1;
        }
    }
    trials
}

/// Each success is preceded by `floor(ln U / ln(1-q))` failures, `U ~ U(0,1]`.
pub(crate) fn neg_binomial_by_geometric_sum<R: Rng + ?Sized>(k: u32, q: f64, rng: &mut R) -> u64 {
    if q >= 1.0 {
        return u64::from(k);
    }
    let ln_fail = (-q).ln_1p();
    (0..k)
        .map(|_| {
            let u = 1.0 - rng.random::<f64>();
            1 + (u.ln() / ln_fail).floor() as u64
        })
        .sum()
}

//! Closed-form average age, optimal arrival rates and bounds for the
//! M/G/1/1 status-update queue under blocking and preemption.

mod blocking;
mod preemptive;
mod sweep;

use serde::Serialize;

pub use blocking::{
    age_blocking, age_blocking_fr, age_blocking_iir, min_age_blocking_fr, min_age_blocking_iir,
    optimal_blocking,
};
pub use preemptive::{
    age_preemptive, age_preemptive_fr, age_preemptive_iir, optimal_preemptive_fr,
    optimal_preemptive_iir, preemptive_interdeparture_moments, preemptive_system_time_mean,
    InterdepartureMoments,
};
pub use sweep::{sweep_codeword_length, SweepRow, SweepTable};

use crate::error::{Error, Result};
use crate::harq::{service_distribution, ErasureChannel, HarqScheme};

/// What happens to an update that arrives while another is in service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Discipline {
    /// The arrival is discarded.
    Blocking,
    /// The arrival replaces the update in service, which is lost.
    Preemptive,
}

impl Discipline {
    pub fn as_str(&self) -> &'static str {
        match self {
            Discipline::Blocking => "blocking",
            Discipline::Preemptive => "preemptive",
        }
    }
}

/// Which closed form produced an [`AgeReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    BlockingGeneral,
    BlockingIir,
    BlockingFr,
    PreemptiveGeneral,
    PreemptiveIir,
    PreemptiveFr,
}

impl Formula {
    pub fn as_str(&self) -> &'static str {
        match self {
            Formula::BlockingGeneral => "blocking-general",
            Formula::BlockingIir => "blocking-iir",
            Formula::BlockingFr => "blocking-fr",
            Formula::PreemptiveGeneral => "preemptive-general",
            Formula::PreemptiveIir => "preemptive-iir",
            Formula::PreemptiveFr => "preemptive-fr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgeReport {
    /// Long-run average age, in channel uses (time units).
    pub avg_age: f64,
    /// Long-run rate of delivered updates.
    pub effective_rate: f64,
    /// `ρ/(ρ+1)` with `ρ = λE(S)`; blocking only.
    pub utilization_beta: Option<f64>,
    pub formula: Formula,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimalRate {
    Finite(f64),
    /// The age keeps decreasing as `λ → ∞`; the optimum is a limit.
    Unbounded,
}

impl OptimalRate {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            OptimalRate::Finite(r) => Some(r),
            OptimalRate::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    RootSolve,
    QuadraticApprox,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimumReport {
    pub optimal_rate: OptimalRate,
    pub optimal_age: f64,
    /// Lower bound on `optimal_age` obtained from the small-rate approximation.
    pub bound_lower: Option<f64>,
    /// Quadratic approximation of the optimal rate.
    pub approx_rate: Option<f64>,
    pub method: Method,
}

pub(crate) fn check_rate(lam: f64) -> Result<f64> {
    if lam.is_finite() && lam > 0.0 {
        Ok(lam)
    } else {
        Err(Error::invalid("lambda", format!("arrival rate must be positive and finite, got {lam}")))
    }
}

/// Converts a log-age back to linear scale, failing rather than returning `inf`.
pub(crate) fn exp_age(log_age: f64) -> Result<f64> {
    let age = log_age.exp();
    if age.is_finite() {
        Ok(age)
    } else {
        Err(Error::Overflow { log_age })
    }
}

/// Average age of `scheme` on `ch` through the scheme-specific closed form.
pub fn age_harq(
    discipline: Discipline,
    scheme: &HarqScheme,
    ch: &ErasureChannel,
    lam: f64,
) -> Result<AgeReport> {
    scheme.validate()?;
    let delta = ch.delta();
    match (discipline, *scheme) {
        (Discipline::Blocking, HarqScheme::Iir { k_s }) => age_blocking_iir(k_s, delta, lam),
        (Discipline::Blocking, HarqScheme::Fr { k_s, n_s, k_p }) => age_blocking_fr(k_s, n_s, k_p, delta, lam),
        (Discipline::Preemptive, HarqScheme::Iir { k_s }) => age_preemptive_iir(k_s, delta, lam),
        (Discipline::Preemptive, HarqScheme::Fr { k_s, n_s, k_p }) => {
            age_preemptive_fr(k_s, n_s, k_p, delta, lam)
        }
    }
}

/// Average age of `scheme` on `ch` through the general-law formula applied to
/// the scheme's service distribution.
pub fn age_harq_general(
    discipline: Discipline,
    scheme: &HarqScheme,
    ch: &ErasureChannel,
    lam: f64,
) -> Result<AgeReport> {
    let dist = service_distribution(scheme, ch)?;
    match discipline {
        Discipline::Blocking => age_blocking(&dist, lam),
        Discipline::Preemptive => age_preemptive(&dist, lam),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::ServiceDistribution;

    #[test]
    fn age_never_undercuts_service_for_blocking() {
        let laws = [
            ServiceDistribution::exponential(0.3).unwrap(),
            ServiceDistribution::deterministic(2.0).unwrap(),
            ServiceDistribution::gamma(0.2, 4.0).unwrap(),
            ServiceDistribution::hyper_exponential(vec![0.5, 0.5], vec![1e6, 1e-6]).unwrap(),
            ServiceDistribution::neg_binomial(20, 0.7).unwrap(),
        ];
        for d in &laws {
            for lam in [1e-4, 1e-2, 1.0, 1e2, 1e6] {
                assert!(age_blocking(d, lam).unwrap().avg_age >= d.mean());
            }
        }
    }

    #[test]
    fn age_never_undercuts_service_for_preemptive_harq() {
        for delta in [0.0, 0.2, 0.6] {
            let ch = ErasureChannel::new(delta).unwrap();
            for scheme in [HarqScheme::iir(1).unwrap(), HarqScheme::iir(50).unwrap(), HarqScheme::fr(10, 14, 3).unwrap()] {
                let mean = service_distribution(&scheme, &ch).unwrap().mean();
                for lam in [1e-4, 1e-2, 0.5, 5.0] {
                    let age = age_harq(Discipline::Preemptive, &scheme, &ch, lam).unwrap().avg_age;
                    assert!(age >= mean, "{scheme:?} {delta} {lam}");
                }
            }
        }
    }

    /// Preemption lets a fast branch of a high-variance law outrun the mean.
    #[test]
    fn preemptive_age_can_undercut_mean_service() {
        let d = ServiceDistribution::hyper_exponential(vec![0.5, 0.5], vec![1e6, 1e-6]).unwrap();
        let age = age_preemptive(&d, 1.0).unwrap().avg_age;
        assert!(age < 3.0 && d.mean() > 1e5);
    }

    #[test]
    fn rejects_nonpositive_rate() {
        let d = ServiceDistribution::exponential(1.0).unwrap();
        assert!(age_blocking(&d, 0.0).is_err());
        assert!(age_blocking(&d, -1.0).is_err());
        assert!(age_preemptive(&d, 0.0).is_err());
        assert!(age_preemptive(&d, f64::NAN).is_err());
    }
}

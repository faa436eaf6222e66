//! Discrete-event simulation of the M/G/1/1 status-update queue.
//!
//! The system holds at most one update, so the event list is two slots: the
//! next arrival and the pending completion, if any. The instantaneous age is
//! integrated exactly between events. Statistics start at a delivery, so
//! every measured stretch of the age path begins right after a reset.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::analysis::{age_blocking, age_preemptive, AgeReport, Discipline};
use crate::distributions::ServiceDistribution;
use crate::error::{Error, Result};
use crate::harq::{sample_service_symbolwise, service_distribution, ErasureChannel, HarqScheme};
use crate::parallel;

pub const DEFAULT_WARMUP: u64 = 1_000;
pub const DEFAULT_EVENT_CAP: u64 = 1_000_000_000;
pub const BATCHES: usize = 50;

/// How each update's service time is drawn.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceModel {
    Law(ServiceDistribution),
    /// Symbol-by-symbol erasure simulation of a HARQ scheme.
    Symbolwise { scheme: HarqScheme, channel: ErasureChannel },
}

impl ServiceModel {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ServiceModel::Law(d) => d.sample(rng),
            ServiceModel::Symbolwise { scheme, channel } => sample_service_symbolwise(scheme, channel, rng) as f64,
        }
    }

    /// The exact law of the drawn service times.
    pub fn distribution(&self) -> Result<ServiceDistribution> {
        match self {
            ServiceModel::Law(d) => Ok(d.clone()),
            ServiceModel::Symbolwise { scheme, channel } => service_distribution(scheme, channel),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub discipline: Discipline,
    pub lam: f64,
    pub service: ServiceModel,
    /// Total successful deliveries, warmup included.
    pub stop_rule: u64,
    pub seed: u64,
    /// Deliveries discarded before measurement. The next delivery opens the
    /// measurement window.
    pub warmup_deliveries: u64,
    /// Events allowed between two deliveries before the run is abandoned.
    pub max_events_without_delivery: u64,
}

impl SimConfig {
    pub fn new(discipline: Discipline, lam: f64, service: ServiceModel, stop_rule: u64, seed: u64) -> Self {
        SimConfig {
            discipline,
            lam,
            service,
            stop_rule,
            seed,
            warmup_deliveries: DEFAULT_WARMUP,
            max_events_without_delivery: DEFAULT_EVENT_CAP,
        }
    }

    pub fn with_warmup(mut self, warmup: u64) -> Self {
        self.warmup_deliveries = warmup;
        self
    }

    pub fn with_event_cap(mut self, cap: u64) -> Self {
        self.max_events_without_delivery = cap;
        self
    }

    /// Measured deliveries, i.e. intervals between the opening delivery and the last.
    pub fn measured_deliveries(&self) -> u64 {
        self.stop_rule.saturating_sub(self.warmup_deliveries + 1)
    }

    pub fn validate(&self) -> Result<()> {
        crate::analysis::check_rate(self.lam)?;
        if self.stop_rule < self.warmup_deliveries + 2 {
            return Err(Error::invalid(
                "stop_rule",
                format!("{} deliveries leave nothing to measure after warmup {}", self.stop_rule, self.warmup_deliveries),
            ));
        }
        if self.max_events_without_delivery == 0 {
            return Err(Error::invalid("max_events_without_delivery", "must be positive"));
        }
        if let ServiceModel::Symbolwise { scheme, .. } = &self.service {
            scheme.validate()?;
        }
        Ok(())
    }

    /// Closed-form age of the simulated system.
    pub fn analytic(&self) -> Result<AgeReport> {
        let dist = self.service.distribution()?;
        match self.discipline {
            Discipline::Blocking => age_blocking(&dist, self.lam),
            Discipline::Preemptive => age_preemptive(&dist, self.lam),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub measured_deliveries: u64,
    /// Length of the measurement window.
    pub elapsed: f64,
    /// Integral of the age over the measurement window.
    pub total_area: f64,
    pub avg_age: f64,
    pub eff_rate: f64,
    pub mean_interdeparture: f64,
    pub mean_sq_interdeparture: f64,
    /// Mean time from generation to delivery of delivered updates.
    pub mean_system_time: f64,
    pub stderr_age: f64,
    pub stderr_eff_rate: f64,
    pub stderr_interdeparture: f64,
    pub stderr_sq_interdeparture: f64,
    pub stderr_system_time: f64,
    pub batches: usize,
    pub arrivals: u64,
    pub events: u64,
}

#[derive(Debug, Default, Clone, Copy)]
struct Batch {
    area: f64,
    time: f64,
    count: u64,
    sum_y: f64,
    sum_y2: f64,
    sum_t: f64,
}

/// One delivered update: completion instant and generation-to-delivery time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Delivery {
    pub time: f64,
    pub system_time: f64,
}

struct InService {
    generated: f64,
    completes: f64,
}

/// Runs one simulation. Identical configurations give bit-identical results.
pub fn run(config: &SimConfig) -> Result<SimResult> {
    simulate(config, None)
}

pub(crate) fn simulate(config: &SimConfig, mut trace: Option<&mut Vec<Delivery>>) -> Result<SimResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let interarrival = Exp::new(config.lam).map_err(|e| Error::invalid("lambda", e.to_string()))?;

    let measured = config.measured_deliveries();
    let n_batches = BATCHES.min(measured as usize);
    let batch_len = measured / n_batches as u64;
    let mut batches = vec![Batch::default(); n_batches];

    let mut now = 0.0;
    let mut next_arrival = interarrival.sample(&mut rng);
    let mut job: Option<InService> = None;
    let mut delivered = 0u64;
    let mut arrivals = 0u64;
    let mut events = 0u64;
    let mut events_since_delivery = 0u64;

    // Measurement state, live once the window has opened.
    let mut open = false;
    let mut age = 0.0;
    let mut last_delivery = 0.0;
    let mut interval = 0u64;

    while delivered < config.stop_rule {
        events += 1;
        events_since_delivery += 1;
        if events_since_delivery > config.max_events_without_delivery {
            return Err(Error::EventCapExceeded { events: events_since_delivery - 1, deliveries: delivered });
        }

        let completing = matches!(&job, Some(j) if j.completes <= next_arrival);
        let t = if completing { job.as_ref().map(|j| j.completes).unwrap_or(now) } else { next_arrival };

        if open {
            let dt = t - now;
            let b = &mut batches[((interval / batch_len) as usize).min(n_batches - 1)];
            b.area += dt * (age + 0.5 * dt);
            age += dt;
        }
        now = t;

        if completing {
            let done = job.take().expect("completion implies a job");
            let system_time = now - done.generated;
            delivered += 1;
            events_since_delivery = 0;
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(Delivery { time: now, system_time });
            }
            if open {
                let y = now - last_delivery;
                let b = &mut batches[((interval / batch_len) as usize).min(n_batches - 1)];
                b.time += y;
                b.count += 1;
                b.sum_y += y;
                b.sum_y2 += y * y;
                b.sum_t += system_time;
                interval += 1;
            } else if delivered == config.warmup_deliveries + 1 {
                open = true;
            }
            age = system_time;
            last_delivery = now;
        } else {
            arrivals += 1;
            next_arrival = now + interarrival.sample(&mut rng);
            let busy = job.is_some();
            if !busy || config.discipline == Discipline::Preemptive {
                let service = config.service.draw(&mut rng);
                job = Some(InService { generated: now, completes: now + service });
            }
        }
    }

    Ok(summarize(&batches, measured, arrivals, events))
}

fn summarize(batches: &[Batch], measured: u64, arrivals: u64, events: u64) -> SimResult {
    let total = batches.iter().fold(Batch::default(), |acc, b| Batch {
        area: acc.area + b.area,
        time: acc.time + b.time,
        count: acc.count + b.count,
        sum_y: acc.sum_y + b.sum_y,
        sum_y2: acc.sum_y2 + b.sum_y2,
        sum_t: acc.sum_t + b.sum_t,
    });
    let n = total.count as f64;

    let per_batch = |f: &dyn Fn(&Batch) -> f64| -> f64 {
        let values: Vec<f64> = batches.iter().map(f).collect();
        crate::stats::mean_and_stderr(&values).1
    };

    SimResult {
        measured_deliveries: measured,
        elapsed: total.time,
        total_area: total.area,
        avg_age: total.area / total.time,
        eff_rate: n / total.time,
        mean_interdeparture: total.sum_y / n,
        mean_sq_interdeparture: total.sum_y2 / n,
        mean_system_time: total.sum_t / n,
        stderr_age: per_batch(&|b| b.area / b.time),
        stderr_eff_rate: per_batch(&|b| b.count as f64 / b.time),
        stderr_interdeparture: per_batch(&|b| b.sum_y / b.count as f64),
        stderr_sq_interdeparture: per_batch(&|b| b.sum_y2 / b.count as f64),
        stderr_system_time: per_batch(&|b| b.sum_t / b.count as f64),
        batches: batches.len(),
        arrivals,
        events,
    }
}

/// Delivered-update rate of a finished run. Needs at least 100 measured deliveries.
pub fn estimate_effective_rate(result: &SimResult) -> Result<f64> {
    if result.measured_deliveries < 100 {
        return Err(Error::InsufficientData(format!(
            "effective rate needs at least 100 measured deliveries, got {}",
            result.measured_deliveries
        )));
    }
    Ok(result.eff_rate)
}

/// Runs every configuration, on the rayon pool when the `parallel` feature is
/// on. Output order follows input order; one failing run does not stop the rest.
pub fn batch_run(configs: &[SimConfig]) -> Result<Vec<Result<SimResult>>> {
    if configs.is_empty() {
        return Err(Error::invalid("configs", "batch is empty"));
    }
    Ok(parallel::map(configs, run))
}

pub fn batch_run_sequential(configs: &[SimConfig]) -> Result<Vec<Result<SimResult>>> {
    if configs.is_empty() {
        return Err(Error::invalid("configs", "batch is empty"));
    }
    Ok(parallel::map_sequential(configs, run))
}

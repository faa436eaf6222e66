use aoi_core::analysis::{
    age_blocking, age_harq, age_preemptive, min_age_blocking_fr, min_age_blocking_iir, optimal_blocking,
    optimal_preemptive_fr, optimal_preemptive_iir, sweep_codeword_length, Method, OptimalRate, OptimumReport,
};
use aoi_core::figures::{self, FigureParams};
use aoi_core::sim::{batch_run, ServiceModel, SimConfig, DEFAULT_WARMUP};
use aoi_core::{Discipline, ErasureChannel, HarqScheme, ServiceDistribution};
use serde::Serialize;

use crate::params::{CompareBy, Params};
use crate::record::{Field, Record};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const FIGURES: [&str; 5] = ["fig4", "fig5", "fig6", "fig7", "fig8"];

/// Records produced by a command plus the diagnostics of any cells that failed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub failures: Vec<String>,
}

type Res<T> = Result<T, String>;

fn msg(e: aoi_core::Error) -> String {
    e.to_string()
}

fn missing(flag: &str, what: &str) -> String {
    format!("missing `{flag}`: {what}")
}

fn discipline(p: &Params) -> Res<Discipline> {
    match p.discipline.as_deref() {
        Some("blocking") => Ok(Discipline::Blocking),
        Some("preemptive") => Ok(Discipline::Preemptive),
        Some(other) => Err(format!("invalid parameter `discipline`: expected blocking or preemptive, got `{other}`")),
        None => Err(missing("discipline", "blocking or preemptive")),
    }
}

fn single_ks(p: &Params) -> Res<u32> {
    match p.ks.as_deref() {
        Some([k]) => Ok(*k),
        Some(_) => Err("invalid parameter `ks`: expected a single value".into()),
        None => Err(missing("ks", "information symbols per packet")),
    }
}

fn channel(p: &Params) -> Res<ErasureChannel> {
    let delta = p.delta.ok_or_else(|| missing("delta", "symbol erasure probability"))?;
    ErasureChannel::new(delta).map_err(msg)
}

fn lambdas(p: &Params) -> Res<Vec<f64>> {
    match &p.lambda {
        Some(l) if !l.is_empty() => Ok(l.clone()),
        _ => Err(missing("lambda", "generation rate")),
    }
}

fn required<T: Copy>(v: Option<T>, flag: &str) -> Res<T> {
    v.ok_or_else(|| missing(flag, "required by this scheme"))
}

#[derive(Debug, Clone)]
enum Service {
    Harq(HarqScheme, ErasureChannel),
    Law(ServiceDistribution),
}

fn service(p: &Params) -> Res<Service> {
    let scheme = p.scheme.as_deref().ok_or_else(|| missing("scheme", "iir, fr or dist:<name>"))?;
    let harq = |s: aoi_core::Result<HarqScheme>| -> Res<Service> { Ok(Service::Harq(s.map_err(msg)?, channel(p)?)) };
    let law = |d: aoi_core::Result<ServiceDistribution>| d.map(Service::Law).map_err(msg);
    match scheme {
        "iir" => harq(HarqScheme::iir(single_ks(p)?)),
        "fr" => harq(HarqScheme::fr(single_ks(p)?, required(p.ns, "ns")?, required(p.kp, "kp")?)),
        "dist:deterministic" => law(ServiceDistribution::deterministic(required(p.duration, "duration")?)),
        "dist:exponential" => law(ServiceDistribution::exponential(required(p.mu, "mu")?)),
        "dist:gamma" => law(ServiceDistribution::gamma(required(p.shape, "shape")?, required(p.scale, "scale")?)),
        "dist:hyperexp" => {
            let weights = p.weights.clone().ok_or_else(|| missing("weights", "branch weights"))?;
            let rates = p.rates.clone().ok_or_else(|| missing("rates", "branch rates"))?;
            law(ServiceDistribution::hyper_exponential(weights, rates))
        }
        "dist:negbin" => law(ServiceDistribution::neg_binomial(required(p.k, "k")?, required(p.q, "q")?)),
        "dist:scaled-negbin" => law(ServiceDistribution::scaled_neg_binomial(
            required(p.n, "n")?,
            required(p.k, "k")?,
            required(p.q, "q")?,
        )),
        other => Err(format!("invalid parameter `scheme`: unknown scheme `{other}`")),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

/// Tool version, command, and every parameter that was set. Per-row values
/// (lambda, seed) are appended by the caller.
fn inputs(p: &Params, command: &str) -> Record {
    let mut r = Record::default();
    r.push("tool_version", VERSION).push("command", command);
    macro_rules! echo {
        ($($f:ident),*) => { $( if let Some(v) = &p.$f { r.push(stringify!($f), v.clone()); } )* };
    }
    echo!(discipline, scheme);
    match p.ks.as_deref() {
        Some([k]) => {
            r.push("ks", *k);
        }
        Some(ks) => {
            r.push("ks", join(ks));
        }
        None => {}
    }
    echo!(ns, kp, delta, duration, mu, shape, scale);
    if let Some(w) = &p.weights {
        r.push("weights", join(w));
    }
    if let Some(w) = &p.rates {
        r.push("rates", join(w));
    }
    echo!(k, q, n, n_min, n_max);
    if let Some(by) = p.by {
        r.push("by", format!("{by:?}").to_lowercase());
    }
    r
}

/// Appends the fields of a serializable struct in declaration order.
fn push_serialized(r: &mut Record, value: &impl Serialize) {
    let serde_json::Value::Object(map) = serde_json::to_value(value).expect("plain data serializes") else {
        unreachable!("rows are structs")
    };
    for (k, v) in map {
        let field = match v {
            serde_json::Value::Number(n) if n.is_u64() => Field::Int(n.as_u64().unwrap()),
            serde_json::Value::Number(n) => Field::Float(n.as_f64().unwrap()),
            serde_json::Value::String(s) => Field::Str(s),
            serde_json::Value::Bool(b) => Field::Bool(b),
            // serde_json maps non-finite floats to null; the only such
            // values in these rows are infinite ages of undecodable codes.
            serde_json::Value::Null => Field::Float(f64::INFINITY),
            other => Field::Str(other.to_string()),
        };
        r.push(&k, field);
    }
}

fn age(discipline: Discipline, service: &Service, lam: f64) -> aoi_core::Result<aoi_core::AgeReport> {
    match (service, discipline) {
        (Service::Harq(s, ch), d) => age_harq(d, s, ch, lam),
        (Service::Law(dist), Discipline::Blocking) => age_blocking(dist, lam),
        (Service::Law(dist), Discipline::Preemptive) => age_preemptive(dist, lam),
    }
}

pub fn analyze(p: &Params) -> Res<Outcome> {
    let (d, service, lams) = (discipline(p)?, service(p)?, lambdas(p)?);
    let base = inputs(p, "analyze");
    let mut out = Outcome::default();
    for lam in lams {
        match age(d, &service, lam) {
            Ok(rep) => {
                let mut r = base.clone();
                r.push("lambda", lam)
                    .push("avg_age", rep.avg_age)
                    .push("effective_rate", rep.effective_rate)
                    .push("utilization_beta", rep.utilization_beta)
                    .push("formula", rep.formula.as_str());
                out.records.push(r);
            }
            Err(e) => out.failures.push(format!("lambda = {lam}: {e}")),
        }
    }
    Ok(out)
}

pub fn simulate(p: &Params) -> Res<Outcome> {
    let (d, service, lams) = (discipline(p)?, service(p)?, lambdas(p)?);
    let deliveries = p.deliveries.ok_or_else(|| missing("deliveries", "stop after this many deliveries"))?;
    let seed = p.seed.ok_or_else(|| missing("seed", "simulation seed"))?;
    let warmup = p.warmup.unwrap_or(DEFAULT_WARMUP);
    let model = match service {
        Service::Harq(scheme, channel) => ServiceModel::Symbolwise { scheme, channel },
        Service::Law(dist) => ServiceModel::Law(dist),
    };
    let configs: Vec<SimConfig> = lams
        .iter()
        .enumerate()
        .map(|(i, &lam)| SimConfig::new(d, lam, model.clone(), deliveries, seed + i as u64).with_warmup(warmup))
        .collect();
    for c in &configs {
        c.validate().map_err(msg)?;
    }
    let mut base = inputs(p, "simulate");
    base.push("deliveries", deliveries).push("warmup", warmup);
    let mut out = Outcome::default();
    for (cfg, res) in configs.iter().zip(batch_run(&configs).map_err(msg)?) {
        let sim = match res {
            Ok(s) => s,
            Err(e) => {
                out.failures.push(format!("lambda = {}: {e}", cfg.lam));
                continue;
            }
        };
        let mut r = base.clone();
        r.push("lambda", cfg.lam).push("seed", cfg.seed);
        push_serialized(&mut r, &sim);
        match cfg.analytic() {
            Ok(a) => r.push("analytic_age", a.avg_age).push("z_score", (sim.avg_age - a.avg_age) / sim.stderr_age),
            Err(e) => {
                out.failures.push(format!("lambda = {}: closed form: {e}", cfg.lam));
                r.push("analytic_age", None::<f64>).push("z_score", None::<f64>)
            }
        };
        out.records.push(r);
    }
    Ok(out)
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::ClosedForm => "closed_form",
        Method::RootSolve => "root_solve",
        Method::QuadraticApprox => "quadratic_approx",
        Method::Sweep => "sweep",
    }
}

pub fn optimize(p: &Params) -> Res<Outcome> {
    let d = discipline(p)?;
    let service = service(p)?;
    let delta = |ch: &ErasureChannel| ch.delta();
    let rep: OptimumReport = match (d, &service) {
        (Discipline::Blocking, Service::Harq(HarqScheme::Iir { k_s }, ch)) => min_age_blocking_iir(*k_s, delta(ch)),
        (Discipline::Blocking, Service::Harq(HarqScheme::Fr { k_s, n_s, k_p }, ch)) => {
            min_age_blocking_fr(*k_s, *n_s, *k_p, delta(ch))
        }
        (Discipline::Blocking, Service::Law(dist)) => Ok(optimal_blocking(dist)),
        (Discipline::Preemptive, Service::Harq(HarqScheme::Iir { k_s }, ch)) => {
            optimal_preemptive_iir(*k_s, delta(ch))
        }
        (Discipline::Preemptive, Service::Harq(HarqScheme::Fr { k_s, n_s, k_p }, ch)) => {
            optimal_preemptive_fr(*k_s, *n_s, *k_p, delta(ch))
        }
        (Discipline::Preemptive, Service::Law(_)) => {
            return Err("invalid parameter `scheme`: preemptive optimization needs an iir or fr scheme".into())
        }
    }
    .map_err(msg)?;
    let mut r = inputs(p, "optimize");
    let (rate, unbounded) = match rep.optimal_rate {
        OptimalRate::Finite(l) => (l, false),
        OptimalRate::Unbounded => (f64::INFINITY, true),
    };
    r.push("optimal_rate", rate)
        .push("rate_unbounded", unbounded)
        .push("optimal_age", rep.optimal_age)
        .push("bound_lower", rep.bound_lower)
        .push("approx_rate", rep.approx_rate)
        .push("method", method_name(rep.method));
    Ok(Outcome { records: vec![r], failures: vec![] })
}

fn sweep_range(p: &Params, k_s: u32) -> std::ops::RangeInclusive<u32> {
    p.n_min.unwrap_or(k_s)..=p.n_max.unwrap_or(10 * k_s)
}

pub fn sweep(p: &Params) -> Res<Outcome> {
    if p.scheme.as_deref().is_some_and(|s| s != "fr") {
        return Err("invalid parameter `scheme`: sweeps vary the FR codeword length; use fr".into());
    }
    let d = discipline(p)?;
    let (k_s, k_p) = (single_ks(p)?, required(p.kp, "kp")?);
    let ch = channel(p)?;
    let base = inputs(p, "sweep");
    let mut out = Outcome::default();
    for lam in lambdas(p)? {
        let table = match sweep_codeword_length(k_s, k_p, ch.delta(), lam, d, sweep_range(p, k_s)) {
            Ok(t) => t,
            Err(e) => {
                out.failures.push(format!("lambda = {lam}: {e}"));
                continue;
            }
        };
        for row in &table.rows {
            let mut r = base.clone();
            r.push("lambda", lam)
                .push("n_s", row.n_s)
                .push("packet_erasure", row.packet_erasure)
                .push("avg_age", row.avg_age)
                .push("is_argmin", row.n_s == table.argmin_n_s);
            out.records.push(r);
        }
    }
    Ok(out)
}

pub fn compare(p: &Params) -> Res<Outcome> {
    let base = inputs(p, "compare");
    let mut out = Outcome::default();
    match p.by.unwrap_or(CompareBy::Discipline) {
        CompareBy::Discipline => {
            let service = service(p)?;
            for lam in lambdas(p)? {
                let pair = age(Discipline::Blocking, &service, lam)
                    .and_then(|b| Ok((b.avg_age, age(Discipline::Preemptive, &service, lam)?.avg_age)));
                match pair {
                    Ok((b, pr)) => {
                        let mut r = base.clone();
                        r.push("lambda", lam).push("blocking_age", b).push("preemptive_age", pr).push("gap", pr - b);
                        out.records.push(r);
                    }
                    Err(e) => out.failures.push(format!("lambda = {lam}: {e}")),
                }
            }
        }
        CompareBy::Scheme => {
            if p.scheme.is_some() {
                return Err("invalid parameter `scheme`: comparing by scheme always pairs iir with fr".into());
            }
            let d = discipline(p)?;
            let (k_s, k_p) = (single_ks(p)?, required(p.kp, "kp")?);
            let ch = channel(p)?;
            let iir = HarqScheme::iir(k_s.checked_mul(k_p).ok_or("invalid parameter `ks`: ks·kp overflows")?)
                .map_err(msg)?;
            for lam in lambdas(p)? {
                let row = (|| -> aoi_core::Result<(f64, f64, u32)> {
                    let iir_age = age_harq(d, &iir, &ch, lam)?.avg_age;
                    let n_s = match p.ns {
                        Some(n) => n,
                        None => sweep_codeword_length(k_s, k_p, ch.delta(), lam, d, sweep_range(p, k_s))?.argmin_n_s,
                    };
                    let fr_age = age_harq(d, &HarqScheme::fr(k_s, n_s, k_p)?, &ch, lam)?.avg_age;
                    Ok((iir_age, fr_age, n_s))
                })();
                match row {
                    Ok((iir_age, fr_age, n_s)) => {
                        let mut r = base.clone();
                        r.push("lambda", lam)
                            .push("iir_age", iir_age)
                            .push("fr_age", fr_age)
                            .push("fr_n_s", n_s)
                            .push("gap", fr_age - iir_age);
                        out.records.push(r);
                    }
                    Err(e) => out.failures.push(format!("lambda = {lam}: {e}")),
                }
            }
        }
    }
    Ok(out)
}

/// One table per requested figure, keyed by figure name.
pub fn figures(p: &Params) -> Res<Vec<(String, Outcome)>> {
    let mut fp = FigureParams::default();
    if let Some(delta) = p.delta {
        ErasureChannel::new(delta).map_err(msg)?;
        fp.delta = delta;
    }
    if let Some(ks) = &p.ks {
        fp.packet_sizes = ks.clone();
    }
    if let Some(l) = &p.lambda {
        fp.lambdas = l.clone();
    }
    fp.validate().map_err(msg)?;
    let wanted: Vec<String> = p.figure.clone().unwrap_or_else(|| FIGURES.iter().map(|s| s.to_string()).collect());
    for f in &wanted {
        if !FIGURES.contains(&f.as_str()) {
            return Err(format!("invalid parameter `figure`: unknown figure `{f}` (expected one of {})", FIGURES.join(", ")));
        }
    }

    let header = |name: &str| {
        let mut r = Record::default();
        r.push("tool_version", VERSION).push("figure", name).push("total_symbols", fp.total_symbols);
        r
    };
    let table = |name: &str, fixed: Record, rows: aoi_core::Result<Vec<Record>>| -> (String, Outcome) {
        let outcome = match rows {
            Ok(rows) => Outcome {
                records: rows
                    .into_iter()
                    .map(|row| {
                        let mut r = fixed.clone();
                        r.extend(&row);
                        r
                    })
                    .collect(),
                failures: vec![],
            },
            Err(e) => Outcome { records: vec![], failures: vec![format!("{name}: {e}")] },
        };
        (name.to_owned(), outcome)
    };
    fn rows<T: Serialize>(v: aoi_core::Result<Vec<T>>) -> aoi_core::Result<Vec<Record>> {
        v.map(|rows| {
            rows.iter()
                .map(|row| {
                    let mut r = Record::default();
                    push_serialized(&mut r, row);
                    r
                })
                .collect()
        })
    }

    let mut out = Vec::new();
    for name in &wanted {
        let mut fixed = header(name);
        let entry = match name.as_str() {
            "fig4" | "fig6" => {
                let d = if name == "fig4" { Discipline::Preemptive } else { Discipline::Blocking };
                fixed
                    .push("discipline", d.as_str())
                    .push("delta", fp.delta)
                    .push("max_redundancy_factor", fp.max_redundancy_factor);
                table(name, fixed, rows(figures::age_vs_rate(&fp, d)))
            }
            "fig5" | "fig7" => {
                let d = if name == "fig5" { Discipline::Preemptive } else { Discipline::Blocking };
                let k_s = fp.sweep_packet_size;
                fixed
                    .push("discipline", d.as_str())
                    .push("k_s", k_s)
                    .push("k_p", fp.total_symbols / k_s)
                    .push("n_max", fp.sweep_max_n);
                table(name, fixed, rows(figures::age_vs_codeword_length(&fp, d)))
            }
            _ => {
                let k_s = fp.sweep_packet_size;
                fixed
                    .push("delta", fp.delta)
                    .push("fr_k_s", k_s)
                    .push("fr_k_p", fp.total_symbols / k_s)
                    .push("max_redundancy_factor", fp.max_redundancy_factor);
                table(name, fixed, rows(figures::scheme_comparison(&fp)))
            }
        };
        out.push(entry);
    }
    Ok(out)
}

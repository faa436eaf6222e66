//! Plot-ready tables for the HARQ comparisons: FR age against arrival rate
//! for several packet sizes, FR age against codeword length, and all four
//! scheme/discipline pairings against arrival rate.

use serde::Serialize;

use crate::analysis::{age_blocking_iir, age_preemptive_iir, sweep_codeword_length, Discipline};
use crate::error::{Error, Result};
use crate::parallel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureParams {
    pub delta: f64,
    /// Information symbols per update.
    pub total_symbols: u32,
    /// Symbols per FR packet; each must divide `total_symbols`.
    pub packet_sizes: Vec<u32>,
    pub lambdas: Vec<f64>,
    /// Codeword lengths swept for the optimal `n_s` go up to this multiple of `k_s`.
    pub max_redundancy_factor: u32,
    /// Packet size used in the codeword-length figures and the four-way comparison.
    pub sweep_packet_size: u32,
    pub sweep_max_n: u32,
    pub sweep_deltas: Vec<f64>,
    pub preemptive_sweep_lambda: f64,
    pub blocking_sweep_lambda: f64,
}

impl Default for FigureParams {
    fn default() -> Self {
        FigureParams {
            delta: 0.2,
            total_symbols: 100,
            packet_sizes: vec![10, 20, 100],
            lambdas: log_grid(1e-3, 1.0, 61),
            max_redundancy_factor: 10,
            sweep_packet_size: 20,
            sweep_max_n: 100,
            sweep_deltas: vec![0.1, 0.2, 0.3],
            preemptive_sweep_lambda: 0.0066,
            blocking_sweep_lambda: 1.0,
        }
    }
}

/// `points` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

impl FigureParams {
    pub fn validate(&self) -> Result<()> {
        crate::harq::check_delta(self.delta)?;
        for &d in &self.sweep_deltas {
            crate::harq::check_delta(d)?;
        }
        if self.total_symbols == 0 {
            return Err(Error::invalid("total_symbols", "must be at least 1"));
        }
        for &k in self.packet_sizes.iter().chain(std::iter::once(&self.sweep_packet_size)) {
            self.packets_per_update(k)?;
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid("lambda", "grid must be nonempty and positive"));
        }
        if self.max_redundancy_factor == 0 {
            return Err(Error::invalid("max_redundancy_factor", "must be at least 1"));
        }
        if self.sweep_max_n < self.sweep_packet_size {
            return Err(Error::invalid("sweep_max_n", "must be at least the swept packet size"));
        }
        Ok(())
    }

    /// `k_p = K / k_s`, rejecting packet sizes that do not divide `K`.
    pub fn packets_per_update(&self, k_s: u32) -> Result<u32> {
        if k_s == 0 || self.total_symbols % k_s != 0 {
            return Err(Error::invalid(
                "ks",
                format!("packet size {k_s} does not divide the {} symbols of an update", self.total_symbols),
            ));
        }
        Ok(self.total_symbols / k_s)
    }
}

/// FR age against arrival rate with the codeword length re-optimized at every rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub k_s: u32,
    pub k_p: u32,
    pub lambda: f64,
    pub n_s: u32,
    pub avg_age: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthRow {
    pub delta: f64,
    pub lambda: f64,
    pub n_s: u32,
    pub packet_erasure: f64,
    pub avg_age: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub lambda: f64,
    pub iir_blocking: f64,
    pub iir_preemptive: f64,
    pub fr_blocking: f64,
    pub fr_preemptive: f64,
    pub fr_blocking_n_s: u32,
    pub fr_preemptive_n_s: u32,
}

/// Age at the best codeword length in `[k_s, factor·k_s]`.
fn best_fr(params: &FigureParams, discipline: Discipline, k_s: u32, lam: f64) -> Result<(u32, f64)> {
    let k_p = params.packets_per_update(k_s)?;
    let table = sweep_codeword_length(
        k_s,
        k_p,
        params.delta,
        lam,
        discipline,
        k_s..=k_s * params.max_redundancy_factor,
    )?;
    Ok((table.argmin_n_s, table.min_age))
}

/// Age against rate for every packet size (the preemptive and blocking
/// variants of the per-packet-size figure).
pub fn age_vs_rate(params: &FigureParams, discipline: Discipline) -> Result<Vec<RateRow>> {
    params.validate()?;
    let cells: Vec<(u32, f64)> = params
        .packet_sizes
        .iter()
        .flat_map(|&k| params.lambdas.iter().map(move |&l| (k, l)))
        .collect();
    parallel::map(&cells, |&(k_s, lambda)| {
        let (n_s, avg_age) = best_fr(params, discipline, k_s, lambda)?;
        Ok(RateRow { k_s, k_p: params.packets_per_update(k_s)?, lambda, n_s, avg_age })
    })
    .into_iter()
    .collect()
}

/// Age against codeword length at a fixed rate, one curve per erasure rate.
pub fn age_vs_codeword_length(params: &FigureParams, discipline: Discipline) -> Result<Vec<LengthRow>> {
    params.validate()?;
    let k_s = params.sweep_packet_size;
    let k_p = params.packets_per_update(k_s)?;
    let lambda = match discipline {
        Discipline::Preemptive => params.preemptive_sweep_lambda,
        Discipline::Blocking => params.blocking_sweep_lambda,
    };
    let mut rows = Vec::new();
    for &delta in &params.sweep_deltas {
        let table = sweep_codeword_length(k_s, k_p, delta, lambda, discipline, k_s..=params.sweep_max_n)?;
        rows.extend(table.rows.iter().map(|r| LengthRow {
            delta,
            lambda,
            n_s: r.n_s,
            packet_erasure: r.packet_erasure,
            avg_age: r.avg_age,
        }));
    }
    Ok(rows)
}

/// IIR and FR under both disciplines over the rate grid.
pub fn scheme_comparison(params: &FigureParams) -> Result<Vec<ComparisonRow>> {
    params.validate()?;
    let k_s = params.sweep_packet_size;
    let big_k = params.total_symbols;
    parallel::map(&params.lambdas, |&lambda| {
        let (fr_blocking_n_s, fr_blocking) = best_fr(params, Discipline::Blocking, k_s, lambda)?;
        let (fr_preemptive_n_s, fr_preemptive) = best_fr(params, Discipline::Preemptive, k_s, lambda)?;
        Ok(ComparisonRow {
            lambda,
            iir_blocking: age_blocking_iir(big_k, params.delta, lambda)?.avg_age,
            iir_preemptive: age_preemptive_iir(big_k, params.delta, lambda)?.avg_age,
            fr_blocking,
            fr_preemptive,
            fr_blocking_n_s,
            fr_preemptive_n_s,
        })
    })
    .into_iter()
    .collect()
}

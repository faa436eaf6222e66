use std::ops::RangeInclusive;

use serde::Serialize;

use super::{age_blocking_fr, age_preemptive_fr, Discipline};
use crate::error::{Error, Result};
use crate::harq::packet_erasure_prob;
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_s: u32,
    pub packet_erasure: f64,
    /// `inf` where the age is not finite (erasure probability of one, or overflow).
    pub avg_age: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub argmin_n_s: u32,
    pub min_age: f64,
}

/// FR average age for every codeword length in `n_range`. Ties for the
/// minimum go to the shortest codeword.
pub fn sweep_codeword_length(
    k_s: u32,
    k_p: u32,
    delta: f64,
    lam: f64,
    discipline: Discipline,
    n_range: RangeInclusive<u32>,
) -> Result<SweepTable> {
    let (lo, hi) = (*n_range.start(), *n_range.end());
    if lo > hi {
        return Err(Error::invalid("n_range", format!("empty range {lo}..={hi}")));
    }
    if lo < k_s {
        return Err(Error::invalid("n_range", format!("starts at {lo}, below k_s = {k_s}")));
    }
    // Surface parameter errors once instead of per row.
    packet_erasure_prob(hi, k_s, delta)?;
    super::check_rate(lam)?;
    if k_p == 0 {
        return Err(Error::invalid("k_p", "must be at least 1"));
    }

    let lengths: Vec<u32> = n_range.collect();
    let rows = parallel::map(&lengths, |&n_s| {
        let age = match discipline {
            Discipline::Blocking => age_blocking_fr(k_s, n_s, k_p, delta, lam),
            Discipline::Preemptive => age_preemptive_fr(k_s, n_s, k_p, delta, lam),
        };
        SweepRow {
            n_s,
            packet_erasure: packet_erasure_prob(n_s, k_s, delta).unwrap_or(1.0),
            avg_age: age.map(|r| r.avg_age).unwrap_or(f64::INFINITY),
        }
    });

    let best = rows
        .iter()
        .fold(None::<&SweepRow>, |best, row| match best {
            Some(b) if b.avg_age <= row.avg_age => Some(b),
            _ => Some(row),
        })
        .copied()
        .expect("nonempty range");
    if !best.avg_age.is_finite() {
        return Err(Error::invalid("n_range", "no codeword length gives a finite age"));
    }
    Ok(SweepTable { argmin_n_s: best.n_s, min_age: best.avg_age, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clear_channel_prefers_shortest() {
        for d in [Discipline::Blocking, Discipline::Preemptive] {
            let t = sweep_codeword_length(20, 5, 0.0, 0.005, d, 20..=60).unwrap();
            assert_eq!(t.argmin_n_s, 20);
            assert_eq!(t.rows.len(), 41);
        }
    }

    #[test]
    fn interior_optimum_at_reported_operating_point() {
        let t = sweep_codeword_length(20, 5, 0.2, 0.0066, Discipline::Preemptive, 20..=100).unwrap();
        assert!(t.argmin_n_s > 20 && t.argmin_n_s < 100);
    }

    #[test]
    fn argmin_grows_with_erasures() {
        let at = |d| sweep_codeword_length(20, 5, d, 0.0066, Discipline::Preemptive, 20..=100).unwrap().argmin_n_s;
        assert!(at(0.3) >= at(0.1));
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(sweep_codeword_length(20, 5, 0.2, 1.0, Discipline::Blocking, 30..=25).is_err());
        assert!(sweep_codeword_length(20, 5, 0.2, 1.0, Discipline::Blocking, 10..=25).is_err());
    }

    #[test]
    fn hopeless_lengths_become_infinite_rows() {
        let t = sweep_codeword_length(100, 1, 0.7, 0.5, Discipline::Blocking, 100..=400).unwrap();
        assert!(t.rows[0].avg_age.is_infinite());
        assert!(t.min_age.is_finite());
    }
}

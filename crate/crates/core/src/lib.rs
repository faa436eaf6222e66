//! Average age of information for M/G/1/1 status-update systems.
//!
//! Closed forms cover both the blocking and the preemptive single-slot
//! queue, for general service laws and for IIR and FR hybrid-ARQ service
//! over a symbol erasure channel. A discrete-event simulator checks every
//! closed form independently.
//!
//! ```
//! use aoi_core::analysis::{age_blocking_iir, optimal_preemptive_iir};
//!
//! let blocking = age_blocking_iir(100, 0.2, 1.0).unwrap();
//! let best = optimal_preemptive_iir(100, 0.2).unwrap();
//! assert!(blocking.avg_age < best.optimal_age);
//! ```

pub mod analysis;
pub mod distributions;
pub mod error;
pub mod figures;
pub mod harq;
pub mod parallel;
pub mod roots;
pub mod sim;
pub mod stats;

pub use analysis::{AgeReport, Discipline, OptimalRate, OptimumReport};
pub use distributions::{Law, ServiceDistribution};
pub use error::{Error, Result};
pub use harq::{ErasureChannel, HarqScheme};
pub use sim::{SimConfig, SimResult, ServiceModel};

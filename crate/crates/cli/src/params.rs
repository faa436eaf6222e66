//! Experiment parameters, from flags and from a config file.
//!
//! A config file is TOML with top-level keys shared by every command and one
//! optional table per command:
//!
//! ```toml
//! discipline = "blocking"
//! scheme = "fr"
//! ks = 20
//! kp = 5
//! delta = 0.2
//!
//! [sweep]
//! lambda = 1.0
//! n_min = 20
//! n_max = 60
//! ```
//!
//! Table keys override top-level keys, and flags override both.

use std::path::Path;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareBy {
    Discipline,
    Scheme,
}

/// Accept either a scalar or an array for list-valued keys.
fn one_or_many<'de, D, T>(de: D) -> Result<Option<Vec<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(Option::<OneOrMany<T>>::deserialize(de)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// TOML config file; flags override its values
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<std::path::PathBuf>,

    /// blocking or preemptive
    #[arg(long)]
    pub discipline: Option<String>,
    /// iir, fr, or dist:<deterministic|exponential|gamma|hyperexp|negbin|scaled-negbin>
    #[arg(long)]
    pub scheme: Option<String>,
    /// Information symbols per packet (a list for `figures`)
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub ks: Option<Vec<u32>>,
    /// Symbols per FR codeword
    #[arg(long)]
    pub ns: Option<u32>,
    /// Packets per FR update
    #[arg(long)]
    pub kp: Option<u32>,
    /// Symbol erasure probability
    #[arg(long)]
    pub delta: Option<f64>,
    /// Generation rate; a comma-separated list runs one record per value
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub lambda: Option<Vec<f64>>,
    /// Deliveries at which a simulation stops
    #[arg(long)]
    pub deliveries: Option<u64>,
    /// Deliveries discarded before measurement
    #[arg(long)]
    pub warmup: Option<u64>,
    /// Simulation seed; record i of a list uses seed + i
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (a directory for `figures`); stdout when absent
    #[arg(long, value_name = "PATH")]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Deterministic service duration
    #[arg(long)]
    pub duration: Option<f64>,
    /// Exponential service rate
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub shape: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    /// Hyperexponential branch weights
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Hyperexponential branch rates
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    /// Negative binomial success count
    #[arg(long)]
    pub k: Option<u32>,
    /// Negative binomial success probability
    #[arg(long)]
    pub q: Option<f64>,
    /// Scale factor of a scaled negative binomial
    #[arg(long)]
    pub n: Option<u32>,

    /// Smallest codeword length in a sweep (default ks)
    #[arg(long)]
    pub n_min: Option<u32>,
    /// Largest codeword length in a sweep (default 10 ks)
    #[arg(long)]
    pub n_max: Option<u32>,
    /// What `compare` holds fixed: the scheme (compare disciplines) or the discipline
    #[arg(long, value_enum)]
    pub by: Option<CompareBy>,
    /// Figures to emit (fig4..fig8); all when absent
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub figure: Option<Vec<String>>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        Params { config: $top.config.or($base.config), $($f: $top.$f.or($base.$f)),* }
    };
}

impl Params {
    /// `top`'s values win wherever they are set.
    pub fn overlay(self, top: Params) -> Params {
        let base = self;
        overlay!(base, top; discipline, scheme, ks, ns, kp, delta, lambda, deliveries, warmup, seed, out,
            format, duration, mu, shape, scale, weights, rates, k, q, n, n_min, n_max, by, figure)
    }

    /// Top-level keys of `text`, overlaid with the table named `command`.
    pub fn from_config_str(text: &str, command: &str) -> Result<Params, String> {
        let mut table: toml::Table = text.parse().map_err(|e| format!("config: {e}"))?;
        let section = match table.remove(command) {
            Some(toml::Value::Table(t)) => Some(t),
            Some(_) => return Err(format!("config: `{command}` must be a table")),
            None => None,
        };
        for (key, value) in &table {
            if value.is_table() && !crate::COMMANDS.contains(&key.as_str()) {
                return Err(format!("config: unknown section `[{key}]`"));
            }
        }
        table.retain(|_, v| !v.is_table());
        let parse = |t: toml::Table, place: &str| {
            Params::deserialize(toml::Value::Table(t)).map_err(|e| format!("config {place}: {e}"))
        };
        let base = parse(table, "top level")?;
        Ok(match section {
            Some(t) => base.overlay(parse(t, &format!("[{command}]"))?),
            None => base,
        })
    }

    pub fn from_config_file(path: &Path, command: &str) -> Result<Params, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
        Self::from_config_str(&text, command)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = r#"
        discipline = "blocking"
        ks = 20
        delta = 0.1

        [sweep]
        delta = 0.2
        lambda = [0.5, 1.0]

        [analyze]
        delta = 0.3
    "#;

    #[test]
    fn section_overrides_top_level() {
        let p = Params::from_config_str(FILE, "sweep").unwrap();
        assert_eq!(p.delta, Some(0.2));
        assert_eq!(p.ks, Some(vec![20]));
        assert_eq!(p.lambda, Some(vec![0.5, 1.0]));
        assert_eq!(p.discipline.as_deref(), Some("blocking"));
        assert_eq!(Params::from_config_str(FILE, "simulate").unwrap().delta, Some(0.1));
    }

    #[test]
    fn flags_override_file() {
        let file = Params::from_config_str(FILE, "sweep").unwrap();
        let flags = Params { delta: Some(0.4), ..Params::default() };
        let p = file.overlay(flags);
        assert_eq!(p.delta, Some(0.4));
        assert_eq!(p.ks, Some(vec![20]));
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        let err = Params::from_config_str("delt = 0.2", "analyze").unwrap_err();
        assert!(err.contains("delt"), "{err}");
        let err = Params::from_config_str("[analyse]\ndelta = 0.2", "analyze").unwrap_err();
        assert!(err.contains("analyse"), "{err}");
        let err = Params::from_config_str("[analyze]\nseeed = 1", "analyze").unwrap_err();
        assert!(err.contains("seeed"), "{err}");
    }
}

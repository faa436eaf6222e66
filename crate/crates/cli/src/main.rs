//! `aoi`: closed-form analysis, simulation, optimization and figure data for
//! age of information over HARQ erasure channels.

mod commands;
mod params;
mod record;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Outcome;
use params::{Format, Params};

pub const COMMANDS: [&str; 6] = ["analyze", "simulate", "optimize", "sweep", "compare", "figures"];

#[derive(Parser, Debug)]
#[command(name = "aoi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form average age and effective rate
    Analyze(Params),
    /// Event-driven simulation, with the closed form and a z-score alongside
    Simulate(Params),
    /// Age-optimal generation rate
    Optimize(Params),
    /// FR age over a range of codeword lengths
    Sweep(Params),
    /// Blocking against preemption, or IIR against FR
    Compare(Params),
    /// Data behind the age-vs-rate, age-vs-length and scheme comparison figures
    Figures(Params),
}

impl Command {
    fn split(self) -> (&'static str, Params) {
        match self {
            Command::Analyze(p) => ("analyze", p),
            Command::Simulate(p) => ("simulate", p),
            Command::Optimize(p) => ("optimize", p),
            Command::Sweep(p) => ("sweep", p),
            Command::Compare(p) => ("compare", p),
            Command::Figures(p) => ("figures", p),
        }
    }
}

fn open(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(out: &Outcome, path: Option<&Path>, format: Format) -> Result<(), String> {
    let describe = |e: io::Error| match path {
        Some(p) => format!("{}: {e}", p.display()),
        None => e.to_string(),
    };
    let mut w = open(path).map_err(describe)?;
    record::write_records(&mut w, &out.records, format).map_err(describe)?;
    w.flush().map_err(describe)
}

fn run(command: &str, p: Params) -> Result<Vec<String>, String> {
    let format = p.format.unwrap_or(Format::Csv);
    if command == "figures" {
        let tables = commands::figures(&p)?;
        let dir = p.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
        std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let mut failures = Vec::new();
        for (name, out) in tables {
            emit(&out, Some(&dir.join(format!("{name}.{ext}"))), format)?;
            failures.extend(out.failures);
        }
        return Ok(failures);
    }
    let out = match command {
        "analyze" => commands::analyze(&p),
        "simulate" => commands::simulate(&p),
        "optimize" => commands::optimize(&p),
        "sweep" => commands::sweep(&p),
        "compare" => commands::compare(&p),
        _ => unreachable!("clap only yields known subcommands"),
    }?;
    emit(&out, p.out.as_deref(), format)?;
    Ok(out.failures)
}

fn main() -> ExitCode {
    let (command, flags) = Cli::parse().command.split();
    let params = match &flags.config {
        Some(path) => Params::from_config_file(path, command).map(|file| file.overlay(flags)),
        None => Ok(flags),
    };
    match params.and_then(|p| run(command, p)) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in failures {
                eprintln!("error: {f}");
            }
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Config-driven experiment runner for the `infheat` core.

use std::fmt::Write as _;
use std::io;
use std::path::PathBuf;

use infheat::barriers::CATALOG;

pub mod config;
pub mod run;

pub use config::Config;
pub use run::{run, run_file, Check, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Message carries the line and column.
    #[error("{0}")]
    Parse(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] infheat::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

/// Every catalog form: kind and formula, then parameters, constraints and anchor.
pub fn catalog_text() -> String {
    let mut s = String::new();
    for e in &CATALOG {
        writeln!(s, "{}: {}", e.kind, e.formula).unwrap();
        writeln!(s, "    params: {}", e.params).unwrap();
        writeln!(s, "    constraints: {}", e.constraints).unwrap();
        writeln!(s, "    anchor: {}", e.anchor).unwrap();
    }
    s
}

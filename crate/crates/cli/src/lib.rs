//! Batch front end: CSV panels in, aligned curves, warps, diagnostics and
//! SVG plots out.

pub mod align;
pub mod config;
pub mod csvio;
pub mod demo;
pub mod error;
pub mod gen;
pub mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult, ErrorKind};

#[derive(Debug, Parser)]
#[command(name = "curvereg", version, about = "Register functional data: separate amplitude from phase")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Register a CSV panel as described by a JSON config.
    Align {
        #[arg(long)]
        config: PathBuf,
    },
    /// Reproduce a registration pathology as JSON plus SVG.
    Demo {
        name: demo::Demo,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic fixture panel.
    Gen {
        fixture: gen::Fixture,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Execute one command; the returned JSON summary goes to stdout.
pub fn run(cli: Cli) -> CliResult<serde_json::Value> {
    match cli.command {
        Command::Align { config } => {
            let cfg = config::Config::load(&config)?;
            align::cmd_align(&cfg)
        }
        Command::Demo { name, out } => demo::cmd_demo(name, &out),
        Command::Gen { fixture, out, seed } => {
            let files = gen::cmd_gen(fixture, &out, seed)?;
            Ok(serde_json::json!({ "written": files }))
        }
    }
}

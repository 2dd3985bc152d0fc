//! Command-line entry points. `run` parses arguments, executes one
//! subcommand and reports failures as JSON on stderr.

mod commands;
mod config;
mod error;
mod stats_csv;

pub use config::{
    AuditConfig, Blob, BridgeSection, LungField, MaskEntry, PathsConfig, Phantom, PhantomSpec, PriorConfig,
    ShnapSection, SnapSection, SEED_ENV,
};
pub use error::CliError;
pub use stats_csv::StatsTest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "nall", version, about = "Audit volumetric risk models by removing and inserting regions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub nfe: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Insertion depth as a fraction of the schedule.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub prior_mean: Option<f64>,
    #[arg(long)]
    pub prior_sd: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a synthetic scan with lungs, lobes and nodules.
    Phantom {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a procedural metaball mask.
    MaskGen {
        #[arg(long, value_parser = parse_triple)]
        dims: [usize; 3],
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replace a masked region with bridge-sampled healthy tissue.
    Remove {
        #[arg(long)]
        scan: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Paste a probe nodule at a center and blend it in.
    Insert {
        #[arg(long)]
        scan: PathBuf,
        #[arg(long)]
        probe: PathBuf,
        #[arg(long, value_parser = parse_triple)]
        center: [usize; 3],
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Region-coalition attribution of one scan.
    Shnap {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        /// Also write the run-to-run versus naive-baseline spread.
        #[arg(long)]
        stability: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Insertion sweep over the lung.
    SnapMap {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        stride: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// KL decay and relative Fisher information between two Gaussians.
    BridgeDiag {
        #[arg(long, value_parser = parse_pair)]
        p1: (f64, f64),
        #[arg(long, value_parser = parse_pair)]
        p2: (f64, f64),
        #[arg(long, default_value_t = 1001)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        beta_max: Option<f64>,
    },
    /// Run a statistical test on a CSV file.
    Stats {
        test: StatsTest,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Null success probability (binomial).
        #[arg(long, default_value_t = 0.5)]
        p0: f64,
        /// Target sensitivity (threshold).
        #[arg(long, default_value_t = 0.95)]
        target: f64,
    },
    /// Serve the toy model over HTTP or stdin/stdout.
    ToyServe {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, conflicts_with = "stdio", required_unless_present = "stdio")]
        http: Option<String>,
        #[arg(long)]
        stdio: bool,
    },
}

fn parse_triple(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected i,j,k, got {s:?}"));
    }
    let mut out = [0usize; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| format!("{p:?} is not a voxel index"))?;
    }
    Ok(out)
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected mean,sd, got {s:?}"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("{x:?} is not a number"));
    Ok((p(a)?, p(b)?))
}

/// Parse `argv` (including the program name) and run it. Returns the exit
/// status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!("{}", CliError::new("cli", "usage", msg.trim()).to_json());
            return 2;
        }
    };
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match commands::execute(cli.command, &args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_parsers() {
        assert_eq!(parse_triple("1, 2,3").unwrap(), [1, 2, 3]);
        assert!(parse_triple("1,2").is_err());
        assert_eq!(parse_pair("-1.5,2").unwrap(), (-1.5, 2.0));
        assert!(parse_pair("x").is_err());
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["nall", "phantom", "--bogus"]), 2);
        assert_eq!(run(["nall", "--version"]), 0);
    }
}

//! `hdc`: seeded experiment runner, codebook files and CSV ingestion.

pub mod dataset;
pub mod params;
pub mod report;
pub mod runners;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use hdc_core::codebook::Codebook;
use hdc_core::container::{read_codebook, write_codebook};

use params::{CliError, CliResult, Ctx, ExperimentConfig, Format, Params};

#[derive(Debug, Parser)]
#[command(name = "hdc", version, about = "Hyperdimensional computing experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write its report
    Run(Box<RunArgs>),
    /// List the available experiments
    List,
    #[command(subcommand)]
    Codebook(CodebookCommand),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Experiment name; may instead come from the config file
    pub experiment: Option<String>,
    /// TOML config; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Omit the timestamped first line so reruns diff cleanly
    #[arg(long)]
    pub no_banner: bool,
    /// Lift the caps on d and trial counts
    #[arg(long)]
    pub allow_large: bool,
    #[arg(long)]
    pub max_d: Option<usize>,
    #[arg(long)]
    pub max_trials: Option<usize>,
    #[command(flatten)]
    pub params: Params,
}

#[derive(Debug, Subcommand)]
pub enum CodebookCommand {
    /// Sample a codebook and write it to a container file
    Gen {
        #[arg(long, default_value = "bipolar")]
        kind: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        hashes: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        allow_large: bool,
    },
    /// Print the norm and incoherence statistics of a codebook file
    Stats { file: PathBuf },
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Run(args) => run(*args),
        Command::List => {
            for e in runners::EXPERIMENTS {
                println!("{e}");
            }
            Ok(0)
        }
        Command::Codebook(CodebookCommand::Gen { kind, m, d, seed, p, sigma, hashes, out, allow_large }) => {
            let params = Params { kind: Some(kind), m: Some(m), d: Some(d), seed: Some(seed), p, sigma, hashes, ..Default::default() };
            let mut ctx = Ctx::new(params);
            ctx.caps.allow_large = allow_large;
            let d = ctx.dim(d)?;
            let kind = ctx.codebook_kind(d, "bipolar")?;
            let cb = Codebook::<f64>::generate(kind, m, d, seed)?;
            let mut w = BufWriter::new(File::create(&out)?);
            write_codebook(&mut w, &cb)?;
            w.flush()?;
            println!("wrote {} ({} x {}, id {})", out.display(), cb.m(), cb.d(), cb.id());
            Ok(0)
        }
        Command::Codebook(CodebookCommand::Stats { file }) => {
            let cb = read_codebook::<f64>(&mut BufReader::new(File::open(&file)?))?;
            print!("{}", codebook_stats(&cb)?);
            Ok(0)
        }
    }
}

pub fn codebook_stats(cb: &Codebook<f64>) -> CliResult<String> {
    let s = cb.stats();
    let mut out = format!("kind {}\nm {}\nd {}\nseed {}\nid {}\n", cb.kind().name(), cb.m(), cb.d(), cb.seed(), cb.id());
    out += &format!("L {}\nL_sq {}\nL_max {}\nkappa {}\n", s.min_norm, s.min_norm_sq, s.max_norm, s.kappa);
    if cb.m() >= 2 {
        out += &format!("mu_emp {}\n", cb.incoherence()?);
    }
    Ok(out)
}

fn run(args: RunArgs) -> CliResult<i32> {
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let name = args
        .experiment
        .or(cfg.experiment)
        .ok_or_else(|| params::schema("no experiment named on the command line or in the config"))?;
    let mut ctx = Ctx::new(cfg.params.overlay(&args.params));
    ctx.caps.allow_large = args.allow_large;
    if let Some(v) = args.max_d {
        ctx.caps.max_d = v;
    }
    if let Some(v) = args.max_trials {
        ctx.caps.max_trials = v;
    }
    let format = args.format.or(cfg.format).unwrap_or_default();
    let out = args.out.or(cfg.out);
    let report = runners::run_experiment(&name, &ctx)?;
    let banner = (!args.no_banner).then(|| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|t| t.as_secs()).unwrap_or(0);
        format!("hdc {} run {} unix={secs}", env!("CARGO_PKG_VERSION"), report.experiment)
    });
    write_report(&report, out.as_deref(), format, banner.as_deref())?;
    for c in report.failures() {
        eprintln!("FAIL {} measured {} {} {}", c.metric, c.measured, c.relation.symbol(), c.bound.unwrap_or(f64::NAN));
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn write_report(report: &report::Report, out: Option<&Path>, format: Format, banner: Option<&str>) -> Result<(), CliError> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            report.write(&mut w, format, banner)?;
            w.flush()?;
        }
        None => {
            let mut w = io::stdout().lock();
            report.write(&mut w, format, banner)?;
        }
    }
    Ok(())
}

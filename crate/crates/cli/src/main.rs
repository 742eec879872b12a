//! `dcqkd`: run seeded key-distribution sessions, sweep attack parameters,
//! and print the exact oracle table.
//!
//! Exit status: 0 when the session is accepted, 2 when Bob rejects it
//! (eavesdropping suspected), 1 on usage or configuration errors.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dcqkd_core::oracle::{cell_table, detection_probability, CellTable};
use dcqkd_core::session::{run_session, ExecMode, SessionConfig};
use dcqkd_core::{EveStrategy, MeasBasis, Probability, VerifyConfig};
use serde::Serialize;

use config::{FileConfig, RunConfig};

const EXIT_ACCEPTED: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_REJECTED: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "dcqkd",
    version,
    about = "Delayed-choice interferometric key distribution simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one session and write its JSON report
    Run(RunArgs),
    /// Print exact outcome probabilities for every configuration cell
    Oracle(OracleArgs),
    /// Run one session per (p_intercept, p_loss) grid point, one JSON line each
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Flat JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "p-loss")]
    p_loss: Option<f64>,
    /// `none` or `intercept:<route|interference>:<p>`
    #[arg(long)]
    eve: Option<String>,
    /// Significance level of the equal-probability test
    #[arg(long)]
    alpha: Option<f64>,
    /// Disclose and compare this fraction of key bits (off by default)
    #[arg(long = "compare-key-fraction")]
    compare_key_fraction: Option<f64>,
    /// Report path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV transcript path
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Parallel)]
    mode: Mode,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Emit the cell table as JSON instead of text
    #[arg(long)]
    json: bool,
    /// Write the JSON cell table to this path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 4000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = BasisArg::Route)]
    basis: BasisArg,
    /// Comma-separated interception probabilities
    #[arg(long = "p-intercept", value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 1.0])]
    p_intercept: Vec<f64>,
    /// Comma-separated loss probabilities
    #[arg(long = "p-loss", value_delimiter = ',', default_values_t = [0.0])]
    p_loss: Vec<f64>,
    #[arg(long, default_value_t = VerifyConfig::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long = "compare-key-fraction")]
    compare_key_fraction: Option<f64>,
    /// JSON-lines output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Parallel)]
    mode: Mode,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Serial,
    Parallel,
}

impl From<Mode> for ExecMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Serial => ExecMode::Serial,
            Mode::Parallel => ExecMode::Parallel,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BasisArg {
    Route,
    Interference,
}

impl From<BasisArg> for MeasBasis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Route => MeasBasis::Route,
            BasisArg::Interference => MeasBasis::Interference,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_ACCEPTED });
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Oracle(args) => cmd_oracle(args).map(|()| EXIT_ACCEPTED),
        Command::Sweep(args) => cmd_sweep(args).map(|()| EXIT_ACCEPTED),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let flags = FileConfig {
        n: args.n,
        seed: args.seed,
        p_loss: args.p_loss,
        eve: args.eve,
        alpha: args.alpha,
        compare_key_fraction: args.compare_key_fraction,
        out: args.out,
        transcript: args.transcript,
    };
    let config = RunConfig::resolve(flags, file)?;
    let report = run_session(&config.session(), args.mode.into())?;

    let mut out = output(config.out.as_ref())?;
    report.write_json(&mut out)?;
    out.flush()?;
    if let Some(path) = &config.transcript {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        report.write_transcript_csv(BufWriter::new(file))?;
    }

    let v = &report.verification;
    eprintln!(
        "{}: n_both={} n_both_det2={} n_one={} p_value={:.3e} key_length={}",
        if report.accepted { "accepted" } else { "rejected" },
        v.n_both,
        v.n_both_det2,
        v.n_one,
        v.p_value_uniform,
        report.alice_key.as_ref().map_or(0, |k| k.len()),
    );
    Ok(if report.accepted { EXIT_ACCEPTED } else { EXIT_REJECTED })
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let table = cell_table();
    if let Some(path) = &args.out {
        let mut w = output(Some(path))?;
        serde_json::to_writer_pretty(&mut w, &table)?;
        writeln!(w)?;
        w.flush()?;
    }
    let mut stdout = io::stdout().lock();
    if args.json {
        serde_json::to_writer_pretty(&mut stdout, &table)?;
        writeln!(stdout)?;
    } else if args.out.is_none() {
        print_table(&table, &mut stdout)?;
    }
    Ok(())
}

fn print_table(table: &CellTable, w: &mut impl Write) -> io::Result<()> {
    writeln!(
        w,
        "{:<12} {:<13} {:<27} {:>8} {:>8} {:>9}",
        "alice", "bob", "eve", "p_det1", "p_det2", "p_noclick"
    )?;
    for row in &table.cells {
        writeln!(
            w,
            "{:<12} {:<13} {:<27} {:>8} {:>8} {:>9}",
            row.alice.as_str(),
            row.bob.as_str(),
            row.eve.to_string(),
            row.p_det1.exact,
            row.p_det2.exact,
            row.p_noclick.exact
        )?;
    }
    writeln!(w)?;
    writeln!(
        w,
        "{:<27} {:>21} {:>15} {:>17}",
        "eve", "both_splitters_p_det2", "key_error_rate", "route_info_bits"
    )?;
    for s in &table.strategies {
        writeln!(
            w,
            "{:<27} {:>21} {:>15} {:>17.6}",
            s.eve.to_string(),
            s.both_splitters_p_det2.exact,
            s.key_error_rate.exact,
            s.route_information_bits
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepLine {
    eve: EveStrategy,
    p_intercept: f64,
    p_loss: f64,
    n: usize,
    seed: u64,
    accepted: bool,
    n_both: u64,
    n_both_det2: u64,
    n_one: u64,
    p_value_uniform: f64,
    key_length: u64,
    key_agreement: Option<f64>,
    key_mismatches: Option<u64>,
    oracle_detection_probability: f64,
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    VerifyConfig::new(args.alpha)?;
    let mut out = output(args.out.as_ref())?;
    for &p_loss in &args.p_loss {
        let p_loss = Probability::named("p_loss", p_loss)?;
        for &p in &args.p_intercept {
            let eve = EveStrategy::intercept(args.basis.into(), p)?;
            let mut cfg = SessionConfig::new(args.n, args.seed)
                .with_eve(eve)
                .with_loss(p_loss)
                .with_alpha(args.alpha);
            cfg.compare_key_fraction = args.compare_key_fraction;
            let rep = run_session(&cfg, args.mode.into())?;
            let v = &rep.verification;
            let line = SweepLine {
                eve,
                p_intercept: p,
                p_loss: p_loss.get(),
                n: args.n,
                seed: args.seed,
                accepted: rep.accepted,
                n_both: v.n_both,
                n_both_det2: v.n_both_det2,
                n_one: v.n_one,
                p_value_uniform: v.p_value_uniform,
                key_length: rep.summary.n_key_rounds,
                key_agreement: rep.summary.key_agreement,
                key_mismatches: rep.key_comparison.as_ref().map(|c| c.mismatches),
                oracle_detection_probability: detection_probability(eve, v.n_both).to_f64(),
            };
            serde_json::to_writer(&mut out, &line)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

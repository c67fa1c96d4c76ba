//! `paircorr`: search, verify and report certified bounds on pair-correlation
//! functionals.
//!
//! Exit codes: 0 success, 1 solve failure, 2 verification failure, 3 I/O or
//! parse failure, 64 usage error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use paircorr_core::FunctionalKind;

use commands::Failure;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "paircorr", version, about = "Certified bounds for pair-correlation functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// `key = value` file overriding the defaults; flags override the file.
    #[arg(long, global = true, env = "PAIRCORR_CONFIG")]
    config: Option<PathBuf>,
    /// Bits for the final solve and the verification.
    #[arg(long, global = true, env = "PAIRCORR_PRECISION")]
    precision: Option<u32>,
    /// More log output on stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a certificate, verify it and print the bound.
    Solve(SolveArgs),
    /// Rigorously check a certificate file.
    Verify(VerifyArgs),
    /// Derived constants from a certificate or a given bound.
    Report(ReportArgs),
    /// Functional values of the hat and Selberg functions.
    Baseline,
    /// Write the SDP at a fixed radius in SDPA sparse format.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, env = "PAIRCORR_KIND", value_parser = parse_kind)]
    kind: FunctionalKind,
    /// Degree of the polynomial blocks.
    #[arg(long, env = "PAIRCORR_D", required_unless_present = "sweep")]
    d: Option<usize>,
    /// Solve several degrees in parallel: `d=4..12`, `6..12:2` or `6,8,10`.
    #[arg(long, env = "PAIRCORR_SWEEP", conflicts_with = "d")]
    sweep: Option<String>,
    /// Certificate file, or a directory when sweeping.
    #[arg(long, env = "PAIRCORR_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for a sweep.
    #[arg(long)]
    jobs: Option<usize>,
    /// Print search progress lines to stderr.
    #[arg(long)]
    progress: bool,
    /// Machine-readable report on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    certificate: PathBuf,
    /// Expected kind; defaults to the file header.
    #[arg(long, env = "PAIRCORR_KIND", value_parser = parse_kind)]
    kind: Option<FunctionalKind>,
    /// Expected degree; defaults to the file header.
    #[arg(long, env = "PAIRCORR_D")]
    d: Option<usize>,
    /// Also check that this many randomly tampered copies are rejected.
    #[arg(long, default_value_t = 0)]
    fuzz: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Certificate to verify and report on.
    #[arg(required_unless_present = "bound")]
    certificate: Option<PathBuf>,
    /// Report on this bound instead of a certificate.
    #[arg(long, requires = "kind", conflicts_with = "certificate")]
    bound: Option<String>,
    #[arg(long, env = "PAIRCORR_KIND", value_parser = parse_kind)]
    kind: Option<FunctionalKind>,
    #[arg(long, env = "PAIRCORR_D")]
    d: Option<usize>,
    /// Decimal places of the derived constants.
    #[arg(long, default_value_t = paircorr_core::report::DEFAULT_PLACES)]
    places: u32,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long, env = "PAIRCORR_KIND", value_parser = parse_kind)]
    kind: FunctionalKind,
    #[arg(long, env = "PAIRCORR_D")]
    d: usize,
    /// Radius, as a decimal.
    #[arg(long)]
    r: String,
    /// Threshold for `P` and `PTilde`.
    #[arg(long)]
    lambda: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, env = "PAIRCORR_OUT")]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<FunctionalKind, String> {
    s.parse().map_err(|_| format!("unknown kind {s:?}; expected one of Z, ZTilde, L, Z1, P, PTilde"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Failure::USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn run_config(cli: &Cli, kind: FunctionalKind) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::new(kind);
    if let Some(path) = &cli.config {
        cfg.apply_file(path).map_err(|e| Failure::Usage(e.0))?;
    }
    if let Some(bits) = cli.precision {
        cfg.set_precision(bits).map_err(|e| Failure::Usage(e.0))?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Solve(a) => {
            let mut cfg = run_config(&cli, a.kind)?;
            cfg.search.progress |= a.progress;
            match &a.sweep {
                Some(spec) => {
                    let ds = config::parse_sweep(spec).map_err(|e| Failure::Usage(e.0))?;
                    commands::solve_sweep(&cfg, &ds, a.out.as_deref(), a.jobs)
                }
                None => {
                    let d = a.d.ok_or_else(|| Failure::Usage("--d is required".into()))?;
                    commands::solve(&cfg, d, a.out.as_deref(), a.json)
                }
            }
        }
        Command::Verify(a) => {
            let (cert, _) = commands::load_certificate(&a.certificate, a.kind, a.d)?;
            let mut cfg = run_config(&cli, cert.kind)?;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            commands::verify(&cfg, &cert, a.fuzz, a.json)
        }
        Command::Report(a) => match (&a.bound, &a.certificate) {
            (Some(bound), _) => {
                let kind = a.kind.ok_or_else(|| Failure::Usage("--bound needs --kind".into()))?;
                commands::report_bound(kind, bound, a.places, a.json)
            }
            (None, Some(path)) => {
                let (cert, _) = commands::load_certificate(path, a.kind, a.d)?;
                let cfg = run_config(&cli, cert.kind)?;
                commands::report_certificate(&cfg, &cert, a.places, a.json)
            }
            (None, None) => Err(Failure::Usage("give a certificate or --bound".into())),
        },
        Command::Baseline => {
            let cfg = run_config(&cli, FunctionalKind::Z)?;
            commands::baseline(&cfg)
        }
        Command::Export(a) => {
            let cfg = run_config(&cli, a.kind)?;
            commands::export(&cfg, a.d, &a.r, a.lambda.as_deref(), a.out.as_deref())
        }
    }
}

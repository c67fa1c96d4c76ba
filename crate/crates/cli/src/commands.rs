use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use paircorr_core::certio::{self, sdpa};
use paircorr_core::functionals::{eval, last_positive_crossing};
use paircorr_core::report::{derive_constants, format_report_places, ExactInterval, ReportStyle};
use paircorr_core::sosmodel::{assemble, Assembly};
use paircorr_core::{
    search_certificate, verify as rigor_verify, Candidate, Error, FunctionalKind, SosCertificate, SosParameterization,
    VerificationReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Rational;

/// Why a command failed; each variant has its own exit code.
#[derive(Debug)]
pub enum Failure {
    Solve(Error),
    Verify(String),
    Io(String),
    Usage(String),
}

impl Failure {
    pub const USAGE: u8 = 64;

    pub fn code(&self) -> u8 {
        match self {
            Failure::Solve(_) => 1,
            Failure::Verify(_) => 2,
            Failure::Io(_) => 3,
            Failure::Usage(_) => Self::USAGE,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Solve(e) => write!(f, "solve failed: {e}"),
            Failure::Verify(m) => write!(f, "verification failed: {m}"),
            Failure::Io(m) | Failure::Usage(m) => f.write_str(m),
        }
    }
}

/// Errors about reading or matching input files map to exit code 3.
fn input_failure(e: Error) -> Failure {
    match e {
        Error::InvalidArgument(m) => Failure::Usage(m),
        other => Failure::Io(other.to_string()),
    }
}

fn io_failure(path: &Path, e: impl fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Reads a certificate. Flags that disagree with the header are an error;
/// missing flags are taken from the header.
pub fn load_certificate(
    path: &Path,
    kind: Option<FunctionalKind>,
    d: Option<usize>,
) -> Result<(SosCertificate, String), Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let (hk, hd) = certio::peek_header(&text);
    let kind = kind.or(hk).ok_or_else(|| Failure::Io(format!("{}: no kind in header; pass --kind", path.display())))?;
    let d = d.or(hd).ok_or_else(|| Failure::Io(format!("{}: no degree in header; pass --d", path.display())))?;
    let cert = certio::read_certificate_str(&text, kind, d).map_err(|e| io_failure(path, e))?;
    Ok((cert, text))
}

fn write_certificate(cert: &SosCertificate, path: &Path, decimals: usize) -> Result<(), Failure> {
    let text = certio::certificate_to_string(cert, decimals).map_err(input_failure)?;
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn default_cert_name(kind: FunctionalKind, d: usize) -> PathBuf {
    PathBuf::from(format!("{kind}_d{d}.cert"))
}

/// The bound a passing verification establishes.
fn bound_interval(rep: &VerificationReport) -> Option<ExactInterval> {
    if !rep.passed() {
        return None;
    }
    if rep.kind.is_threshold() {
        rep.lambda.clone().map(ExactInterval::point)
    } else {
        rep.functional_bound.as_ref().map(ExactInterval::from)
    }
}

fn check_lines(rep: &VerificationReport) -> String {
    let mut s = String::new();
    for c in &rep.checks {
        s += &format!("{}  {:<22} {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    s
}

fn failed_checks(rep: &VerificationReport) -> String {
    rep.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn run_verify(cfg: &crate::config::RunConfig, cert: &SosCertificate) -> Result<VerificationReport, Failure> {
    rigor_verify(cert, &cfg.search.truncation, cfg.verify_precision).map_err(|e| Failure::Verify(e.to_string()))
}

fn print_report(rep: &VerificationReport, places: u32, json: bool) {
    if let Some(bound) = bound_interval(rep) {
        let report = derive_constants(rep.kind, &bound);
        let style = if json { ReportStyle::Machine } else { ReportStyle::Text };
        println!("{}", format_report_places(&report, style, places).trim_end());
    }
}

pub fn solve(cfg: &crate::config::RunConfig, d: usize, out: Option<&Path>, json: bool) -> Result<(), Failure> {
    let (path, rep) = solve_one(cfg, d, out)?;
    if !json {
        println!("certificate  {}", path.display());
    }
    print_report(&rep, paircorr_core::report::DEFAULT_PLACES, json);
    Ok(())
}

fn solve_one(
    cfg: &crate::config::RunConfig,
    d: usize,
    out: Option<&Path>,
) -> Result<(PathBuf, VerificationReport), Failure> {
    let kind = cfg.kind;
    let outcome = search_certificate(kind, d, &cfg.search).map_err(Failure::Solve)?;
    log::info!("{kind} d={d}: search finished after {} evaluations", outcome.trace.len());
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| default_cert_name(kind, d));
    // verify what the file holds, not the in-memory certificate
    let cert = outcome.certificate.rounded(cfg.decimals);
    write_certificate(&cert, &path, cfg.decimals)?;
    let rep = run_verify(cfg, &cert)?;
    if !rep.passed() {
        eprint!("{}", check_lines(&rep));
        return Err(Failure::Verify(format!("{kind} d={d}: failed {}", failed_checks(&rep))));
    }
    Ok((path, rep))
}

pub fn solve_sweep(
    cfg: &crate::config::RunConfig,
    ds: &[usize],
    out_dir: Option<&Path>,
    jobs: Option<usize>,
) -> Result<(), Failure> {
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let results: Vec<_> = pool.install(|| {
        ds.par_iter()
            .map(|&d| (d, solve_one(cfg, d, Some(&dir.join(default_cert_name(cfg.kind, d))))))
            .collect()
    });
    let mut worst: Option<Failure> = None;
    for (d, res) in results {
        match res {
            Ok((path, rep)) => {
                let bound = bound_interval(&rep).map(|b| certio::format_decimal(&b.hi, 12)).unwrap_or_default();
                println!("{}\t{d}\t{}\t{bound}\tverified\t{}", cfg.kind, certio::format_decimal(&rep.r, 12), path.display());
            }
            Err(f) => {
                println!("{}\t{d}\t-\t-\tfailed\t{f}", cfg.kind);
                if worst.as_ref().map_or(true, |w| f.code() > w.code()) {
                    worst = Some(f);
                }
            }
        }
    }
    worst.map_or(Ok(()), Err)
}

pub fn verify(cfg: &crate::config::RunConfig, cert: &SosCertificate, fuzz: usize, json: bool) -> Result<(), Failure> {
    let rep = run_verify(cfg, cert)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&rep.to_json()).expect("json serializes"));
    } else {
        print!("{}", check_lines(&rep));
    }
    if !rep.passed() {
        return Err(Failure::Verify(format!("failed {}", failed_checks(&rep))));
    }
    if !json {
        print_report(&rep, paircorr_core::report::DEFAULT_PLACES, false);
    }
    if fuzz > 0 {
        fuzz_certificate(cfg, cert, fuzz)?;
    }
    Ok(())
}

/// Flips the sign of random diagonal entries and checks each copy fails.
fn fuzz_certificate(cfg: &crate::config::RunConfig, cert: &SosCertificate, trials: usize) -> Result<(), Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut accepted = 0;
    for t in 0..trials {
        let mut bad = cert.clone();
        let block = rng.gen_range(0..3);
        let i = rng.gen_range(0..=cert.d);
        let m = [&mut bad.x2, &mut bad.x3, &mut bad.x4].into_iter().nth(block).expect("three blocks");
        let v = Rational::from(-m.get(i, i));
        m.set(i, i, v);
        let rep = run_verify(cfg, &bad)?;
        let name = ["X2", "X3", "X4"][block];
        if rep.passed() {
            accepted += 1;
            println!("tamper {t}  {name}[{i}][{i}] negated  ACCEPTED");
        } else {
            println!("tamper {t}  {name}[{i}][{i}] negated  rejected: {}", failed_checks(&rep));
        }
    }
    if accepted > 0 {
        return Err(Failure::Verify(format!("{accepted} of {trials} tampered copies accepted")));
    }
    Ok(())
}

pub fn report_bound(kind: FunctionalKind, bound: &str, places: u32, json: bool) -> Result<(), Failure> {
    let c = certio::parse_decimal(bound).ok_or_else(|| Failure::Usage(format!("--bound: not a decimal: {bound}")))?;
    let report = derive_constants(kind, &ExactInterval::point(c));
    let style = if json { ReportStyle::Machine } else { ReportStyle::Text };
    println!("{}", format_report_places(&report, style, places).trim_end());
    Ok(())
}

pub fn report_certificate(
    cfg: &crate::config::RunConfig,
    cert: &SosCertificate,
    places: u32,
    json: bool,
) -> Result<(), Failure> {
    let rep = run_verify(cfg, cert)?;
    if !rep.passed() {
        eprint!("{}", check_lines(&rep));
        return Err(Failure::Verify(format!("failed {}", failed_checks(&rep))));
    }
    print_report(&rep, places, json);
    Ok(())
}

pub fn baseline(cfg: &crate::config::RunConfig) -> Result<(), Failure> {
    let prec = cfg.verify_precision.min(128);
    let trunc = &cfg.search.truncation;
    println!("function\tZ\tZTilde\t2-L\tZ1\tP\tPTilde");
    for (name, c) in [("Hat", Candidate::Hat), ("Selberg", Candidate::Selberg)] {
        let value = |k| eval(&c, k, None, trunc, prec).map(|v| v.to_f64()).map_err(Failure::Solve);
        let crossing = |k| {
            last_positive_crossing(&c, k, 1e-10, 2.0, prec).map(|v| v.to_f64()).map_err(Failure::Solve)
        };
        println!(
            "{name}\t{:.12}\t{:.12}\t{:.12}\t{:.12}\t{:.9}\t{:.9}",
            value(FunctionalKind::Z)?,
            value(FunctionalKind::ZTilde)?,
            2.0 - value(FunctionalKind::L)?,
            value(FunctionalKind::Z1)?,
            crossing(FunctionalKind::P)?,
            crossing(FunctionalKind::PTilde)?,
        );
    }
    Ok(())
}

pub fn export(
    cfg: &crate::config::RunConfig,
    d: usize,
    r: &str,
    lambda: Option<&str>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let kind = cfg.kind;
    let dec = |flag: &str, s: &str| {
        certio::parse_decimal(s).ok_or_else(|| Failure::Usage(format!("--{flag}: not a decimal: {s}")))
    };
    let r = dec("r", r)?;
    let assembly = match (kind.is_threshold(), lambda) {
        (true, Some(l)) => Assembly::ThresholdMax { lambda: dec("lambda", l)? },
        (true, None) => return Err(Failure::Usage(format!("{kind} needs --lambda"))),
        (false, None) => Assembly::Minimize,
        (false, Some(_)) => return Err(Failure::Usage(format!("{kind} takes no --lambda"))),
    };
    let p = SosParameterization::new(d, r, cfg.search.final_solver.precision).map_err(input_failure)?;
    let problem = assemble(&p, kind, &assembly, &cfg.search.truncation).map_err(Failure::Solve)?;
    let text = sdpa::problem_to_string(&problem).map_err(input_failure)?;
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_failure(path, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

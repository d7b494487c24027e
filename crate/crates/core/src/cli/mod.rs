//! The `resonant-verify` command line.
//!
//! Exit codes: 0 when every check passes, 1 when any check fails, 2 on a
//! malformed invocation or configuration.

mod config;
mod suites;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{RunConfig, SuiteSettings, CONFIG_DIR_VAR};
pub use suites::{SuiteKind, SuiteOutput, Table};

use crate::error::{Error, Result};
use crate::report::VerificationReport;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "resonant-verify", version, about = "Verification suites for the resonant-collision model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Debug, Clone, Default, clap::Args)]
struct Options {
    /// JSON run configuration; relative paths are also looked up in $RESONANT_CONFIG_DIR.
    #[arg(long, global = true, value_name = "path")]
    config: Option<PathBuf>,
    /// Monte Carlo sample count (integer or float notation such as 1e6).
    #[arg(long, global = true, value_parser = parse_count)]
    samples: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for the JSON report and CSV tables.
    #[arg(long, global = true, value_name = "dir")]
    out: Option<PathBuf>,
    /// Run only the named part of a suite (or, under `all`, the named suite).
    #[arg(long, global = true, value_name = "name")]
    suite: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Conservation laws and the (z, A) parametrization.
    VerifyKinematics,
    /// Midpoint-ball measure and the pushforward identity.
    VerifyJacobian,
    /// Envelopes, symmetries and averages of the cross section.
    VerifyCrossSection,
    /// Sign of the entropy dissipation.
    VerifyHtheorem,
    /// Direct integrals against kernel forms, and the Bessel evaluator.
    VerifyKernelEquivalence,
    /// Empirical envelope and tensor bounds.
    VerifyBounds,
    /// Decay of K2 g outside large balls.
    VerifyTail,
    /// Hilbert-Schmidt integral of the kappa_1 kernel.
    HsNorm,
    /// Galerkin singular values of K.
    Spectrum,
    /// Every suite in sequence.
    All,
}

impl Command {
    fn suites(self) -> Vec<SuiteKind> {
        match self {
            Command::VerifyKinematics => vec![SuiteKind::Kinematics],
            Command::VerifyJacobian => vec![SuiteKind::Jacobian],
            Command::VerifyCrossSection => vec![SuiteKind::CrossSection],
            Command::VerifyHtheorem => vec![SuiteKind::HTheorem],
            Command::VerifyKernelEquivalence => vec![SuiteKind::KernelEquivalence],
            Command::VerifyBounds => vec![SuiteKind::Bounds],
            Command::VerifyTail => vec![SuiteKind::Tail],
            Command::HsNorm => vec![SuiteKind::HsNorm],
            Command::Spectrum => vec![SuiteKind::Spectrum],
            Command::All => SuiteKind::ALL.to_vec(),
        }
    }
}

fn parse_count(text: &str) -> std::result::Result<u64, String> {
    if let Ok(n) = text.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = text.parse().map_err(|_| format!("not a number: {text}"))?;
    if !(x >= 1.0 && x.fract() == 0.0 && x < 2f64.powi(63)) {
        return Err(format!("sample count must be a positive integer, got {text}"));
    }
    Ok(x as u64)
}

/// The configuration after applying the command-line overrides.
fn effective_config(options: &Options, command: Command) -> Result<RunConfig> {
    let mut cfg = match &options.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = options.samples {
        cfg.mc.samples = n;
    }
    if let Some(seed) = options.seed {
        cfg.mc.seed = seed;
    }
    if let Some(out) = &options.out {
        cfg.out = Some(out.clone());
    }
    if let Some(name) = &options.suite {
        cfg.suite.name = Some(name.clone());
    }
    cfg.validate()?;
    if let Some(name) = &cfg.suite.name {
        if !command.suites().iter().any(|s| s.knows(name)) {
            let known: Vec<&str> = command
                .suites()
                .iter()
                .flat_map(|s| std::iter::once(s.command()).chain(s.parts().iter().copied()))
                .collect();
            return Err(Error::Config(format!(
                "unknown suite '{name}'; expected one of {}",
                known.join(", ")
            )));
        }
    }
    Ok(cfg)
}

/// Run the suites of `command`.  Under `all` the suite reports are nested
/// in one aggregate report.
fn execute(command: Command, cfg: &RunConfig) -> SuiteOutput {
    let started = std::time::Instant::now();
    let selected: Vec<SuiteKind> = command
        .suites()
        .into_iter()
        .filter(|s| cfg.suite.name.as_deref().is_none_or(|n| s.knows(n)))
        .collect();
    if let (Command::All, false) = (command, selected.is_empty()) {
        let mut report = VerificationReport::new("all").with_seed(cfg.mc.seed);
        let mut tables = Vec::new();
        for kind in selected {
            let out = kind.run(cfg);
            report.nest(out.report);
            tables.extend(out.tables);
        }
        report.timing = Some(suites::timing(started));
        SuiteOutput { report, tables }
    } else {
        selected[0].run(cfg)
    }
}

/// Write `<out>/<suite>.json` and one CSV per side table.
pub fn write_outputs(dir: &Path, output: &SuiteOutput) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.json", output.report.suite));
    std::fs::write(&path, report_json(&output.report)? + "\n")?;
    for table in &output.tables {
        write_table(&dir.join(format!("{}.csv", table.name)), table)?;
    }
    Ok(path)
}

pub fn report_json(report: &VerificationReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.into()))
}

fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    w.write_record(&table.header).map_err(|e| Error::Io(e.into()))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| Error::Io(e.into()))?;
    }
    Ok(w.flush()?)
}

fn summary(report: &VerificationReport, out: &mut impl Write) -> std::io::Result<()> {
    for suite in &report.suites {
        let checks = suite.all_checks().len();
        let failed = suite.failures().len();
        writeln!(
            out,
            "{:<28} {} ({checks} checks, {failed} failed)",
            suite.suite,
            if suite.pass { "PASS" } else { "FAIL" }
        )?;
    }
    writeln!(out, "{}: {}", report.suite, if report.pass { "PASS" } else { "FAIL" })
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match effective_config(&cli.options, cli.command) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("resonant-verify: {e}");
            return EXIT_CONFIG;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.options.threads.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("resonant-verify: cannot start worker threads: {e}");
            return EXIT_CONFIG;
        }
    };
    let output = pool.install(|| execute(cli.command, &cfg));
    let written = match &cfg.out {
        Some(dir) => write_outputs(dir, &output).map(Some),
        None => report_json(&output.report).map(|json| {
            println!("{json}");
            None
        }),
    };
    match written {
        Ok(Some(path)) => {
            let mut stdout = std::io::stdout().lock();
            let _ = summary(&output.report, &mut stdout);
            let _ = writeln!(stdout, "report written to {}", path.display());
        }
        Ok(None) => {
            let _ = summary(&output.report, &mut std::io::stderr().lock());
        }
        Err(e) => {
            eprintln!("resonant-verify: cannot write the report: {e}");
            return EXIT_FAIL;
        }
    }
    if output.report.pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_float_notation() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("250000"), Ok(250_000));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("0").is_ok_and(|n| n == 0));
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn unknown_suite_is_a_config_error() {
        let options = Options {
            suite: Some("nope".into()),
            ..Options::default()
        };
        assert!(matches!(effective_config(&options, Command::VerifyBounds), Err(Error::Config(_))));
        let options = Options {
            suite: Some("tensor".into()),
            ..Options::default()
        };
        assert!(effective_config(&options, Command::VerifyBounds).is_ok());
        assert!(effective_config(&options, Command::All).is_ok());
        assert!(matches!(effective_config(&options, Command::Spectrum), Err(Error::Config(_))));
    }

    #[test]
    fn missing_config_exits_with_two() {
        assert_eq!(
            run(["resonant-verify", "verify-kinematics", "--config", "/nonexistent/run.json"]),
            EXIT_CONFIG
        );
        assert_eq!(run(["resonant-verify", "no-such-command"]), EXIT_CONFIG);
    }
}

//! heckelab: twisted central L-values, their Galois averages and the
//! checks around them.
//!
//! Options may also come from a config file (`--config FILE`): one
//! `key = value` per line, `#` starts a comment, keys are the long flag
//! names (`check-fe` and `check_fe` both work). Flags override the file;
//! HECKELAB_CACHE overrides the file's cache_dir but not --cache-dir.

mod commands;
mod config;
mod identities;
mod report;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heckelab_core::Error as CoreError;
use serde_json::json;

use commands::Timer;
use config::{Diagnostic, ExperimentConfig, GlobalArgs, CACHE_ENV};
use report::Report;

const AFTER_HELP: &str = "\
Config file: flat `key = value` lines, `#` comments. Keys: form, p, n, n0, r,
tol, threads, cache_dir, format, out, strict, check_fe, s, y_exp, levels, phi,
untwisted, timings. Precedence: flags > HECKELAB_CACHE (cache only) > file >
defaults (form delta, p 3, n 2, n0 1, r 2, tol 1e-13, format json).

Exit status: 0 success; 1 flagged rows (always for lvalue and identities,
with --strict for the rest); 2 invalid configuration; 3 computation failure.
Diagnostics go to stderr as one JSON object with a `code` field.";

#[derive(Parser, Debug)]
#[command(name = "heckelab", version, about = "Twisted central L-values and their Galois averages", after_help = AFTER_HELP)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// L(s, f ⊗ φ) for every primitive p-power-order φ of conductor p^n
    Lvalue,
    /// Character-average identities and the Kloosterman and ι bounds
    Identities,
    /// r^{k/2} L_av(f, φ, r) against a_f(r) as n grows
    Converge,
    /// Central values of all twists up to conductor p^n, flagging near-zeros
    Scan,
    /// Recovered coefficients of two forms from the same characters
    Determine,
    /// Inspect or clear the coefficient cache
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand, Debug)]
enum CacheAction {
    /// List cache files and validate each one
    Inspect,
    /// Remove cache files (all, or those of --form)
    Clear,
}

struct Failure {
    code: &'static str,
    message: String,
    exit: u8,
}

fn classify(err: anyhow::Error) -> Failure {
    if let Some(d) = err.downcast_ref::<Diagnostic>() {
        return Failure { code: d.code, message: d.message.clone(), exit: 2 };
    }
    if let Some(e) = err.downcast_ref::<CoreError>() {
        let (code, exit) = match e {
            CoreError::UnknownForm(_) => ("FORM_UNKNOWN", 2),
            CoreError::InvalidInput(_) => ("INVALID_INPUT", 2),
            CoreError::Precondition(_) => ("PRECONDITION", 3),
            CoreError::GammaPole { .. } => ("GAMMA_POLE", 3),
            CoreError::InsufficientCoefficients { .. } => ("INSUFFICIENT_COEFFICIENTS", 3),
            CoreError::ToleranceUnreachable { .. } => ("TOLERANCE_UNREACHABLE", 3),
            CoreError::CacheFormat { .. } => ("CACHE_CORRUPT", 3),
            CoreError::Io(_) => ("IO_ERROR", 3),
            _ => ("COMPUTATION_FAILED", 3),
        };
        return Failure { code, message: e.to_string(), exit };
    }
    Failure { code: "COMPUTATION_FAILED", message: format!("{err:#}"), exit: 3 }
}

fn run(cli: &Cli) -> anyhow::Result<(Report, ExperimentConfig)> {
    let cfg = ExperimentConfig::resolve(&cli.global, std::env::var(CACHE_ENV).ok())?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let mut timer = Timer::new(cfg.timings);
    let mut report;
    match &cli.command {
        Command::Lvalue => {
            report = Report::new("lvalue", cfg.echo());
            commands::lvalue(&cfg, &mut report, &mut timer)?;
        }
        Command::Identities => {
            identities::validate_levels(&cfg)?;
            report = Report::new("identities", cfg.echo());
            timer.time("identities", || identities::run(&cfg, &mut report))?;
        }
        Command::Converge => {
            report = Report::new("converge", cfg.echo());
            commands::converge(&cfg, &mut report, &mut timer)?;
        }
        Command::Scan => {
            report = Report::new("scan", cfg.echo());
            commands::scan(&cfg, &mut report, &mut timer)?;
        }
        Command::Determine => {
            report = Report::new("determine", cfg.echo());
            commands::determine(&cfg, &mut report, &mut timer)?;
        }
        Command::Cache { action: CacheAction::Inspect } => {
            report = Report::new("cache-inspect", cfg.echo());
            commands::cache_inspect(&cfg, &mut report)?;
        }
        Command::Cache { action: CacheAction::Clear } => {
            report = Report::new("cache-clear", cfg.echo());
            commands::cache_clear(&cfg, cli.global.form.as_deref(), &mut report)?;
        }
    }
    report.timings = timer.finish();
    Ok((report, cfg))
}

fn emit(report: &Report, cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let text = report.render(cfg.format)?;
    match &cfg.out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|(report, cfg)| {
        emit(&report, &cfg)?;
        Ok((report, cfg))
    });
    match outcome {
        Ok((report, cfg)) => {
            let always = matches!(cli.command, Command::Lvalue | Command::Identities);
            if report.flag_count() > 0 && (always || cfg.strict) {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            let f = classify(err);
            eprintln!("{}", json!({ "code": f.code, "message": f.message }));
            ExitCode::from(f.exit)
        }
    }
}

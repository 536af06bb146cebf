use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use chiralis::jobs::{error_exit_code, run, AlgebraKind, Command, JobConfig};
use chiralis::{Error, Scalar};
use clap::{Args, Parser, Subcommand};

/// Exact chiral homology on the projective line and Ext¹ of vertex algebra
/// modules, with the pairing certificate between them.
#[derive(Parser, Debug)]
#[command(name = "chiralis", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Axiom and contragredient checks on the algebra and both modules.
    Axioms(JobArgs),
    /// H0 and H1 of one weight slice, with a d1∘d2 check.
    Homology(JobArgs),
    /// Weight-0 graded Ext¹(C, A).
    Ext(JobArgs),
    /// Both sides plus the pairing matrix and its rank certificate.
    Pairing(JobArgs),
    /// Homology and Ext at the caps and with N, window and Q raised by one.
    Stabilize(JobArgs),
}

#[derive(Args, Debug)]
struct JobArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// trivial or heisenberg
    #[arg(long)]
    algebra: Option<String>,
    /// Highest weight of A (Fock modules), as "p/q".
    #[arg(long, allow_hyphen_values = true)]
    lambda_a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda_c: Option<String>,
    #[arg(long)]
    cap_d: Option<i64>,
    #[arg(long)]
    cap_n: Option<i64>,
    /// Laurent exponent window as "lo,hi".
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long)]
    pole_cap: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    weight: Option<i64>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Structure-constant cache; CHIRALIS_CACHE_DIR takes precedence.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

fn scalar(text: &str) -> Result<Scalar> {
    text.parse::<Scalar>().map_err(|e| config_error(format!("bad scalar {text:?}: {e}")))
}

fn load_config(args: &JobArgs) -> Result<JobConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?
        }
        None => JobConfig::default(),
    };
    if let Some(a) = &args.algebra {
        cfg.algebra = a.parse::<AlgebraKind>()?;
    }
    if let Some(x) = &args.lambda_a {
        cfg.lambda_a = scalar(x)?;
    }
    if let Some(x) = &args.lambda_c {
        cfg.lambda_c = scalar(x)?;
    }
    if let Some(d) = args.cap_d {
        cfg.caps.d = d;
    }
    if let Some(n) = args.cap_n {
        cfg.caps.n = n;
    }
    if let Some(w) = &args.window {
        let (lo, hi) = w.split_once(',').ok_or_else(|| config_error(format!("window {w:?} is not \"lo,hi\"")))?;
        cfg.caps.window_lo = lo.trim().parse().map_err(|_| config_error(format!("bad window bound {lo:?}")))?;
        cfg.caps.window_hi = hi.trim().parse().map_err(|_| config_error(format!("bad window bound {hi:?}")))?;
    }
    if let Some(q) = args.pole_cap {
        cfg.caps.q = q;
    }
    if let Some(w) = args.weight {
        cfg.weight = w;
    }
    if let Some(dir) = &args.cache_dir {
        cfg.cache_dir = Some(dir.clone());
    }
    if let Some(dir) = std::env::var_os("CHIRALIS_CACHE_DIR") {
        cfg.cache_dir = Some(dir.into());
    }
    Ok(cfg)
}

fn execute(command: Command, args: &JobArgs) -> Result<i32> {
    let cfg = load_config(args)?;
    if let Some(n) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    let report = run(command, &cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &args.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    if !report.certificate {
        log::error!("{command}: certificate failed");
    }
    Ok(report.outcome.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, args) = match &cli.command {
        Sub::Axioms(a) => (Command::Axioms, a),
        Sub::Homology(a) => (Command::Homology, a),
        Sub::Ext(a) => (Command::Ext, a),
        Sub::Pairing(a) => (Command::Pairing, a),
        Sub::Stabilize(a) => (Command::Stabilize, a),
    };
    match execute(command, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            log::error!("{e:#}");
            let code = e.downcast_ref::<Error>().map(error_exit_code).unwrap_or(2);
            ExitCode::from(code as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracddg_cli::{AdmissibilityConfig, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "fracddg", version, about = "Fractional DDG solver driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for random initial data and sampling
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every grid point once; write snapshots and diagnostics
    Run(Common),
    /// Convergence study; write the error/order CSV
    Converge(Common),
    /// Sampled admissibility check of a DDG flux
    Admissibility {
        #[command(flatten)]
        common: Common,
        /// Polynomial degree
        #[arg(long = "N")]
        degree: Option<usize>,
        #[arg(long)]
        beta0: Option<f64>,
        #[arg(long)]
        beta1: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
    },
}

fn need_config(c: &Common) -> Result<RunConfig, CliError> {
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    RunConfig::load(path)
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run(c) => {
            let cfg = need_config(&c)?;
            for s in fracddg_cli::run(&cfg, &c.out, c.threads, c.seed)? {
                let err = s
                    .errors
                    .map(|e| e.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(","))
                    .unwrap_or_else(|| "-".into());
                println!(
                    "alpha={} N={} K={} steps={} dt={:.3e} l2_error={} norm={:?}",
                    s.alpha, s.degree, s.cells, s.steps, s.dt, err, s.norms_final
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Converge(c) => {
            let cfg = need_config(&c)?;
            let out = fracddg_cli::converge(&cfg, &c.out, c.threads, c.seed)?;
            for p in &out.csv_files {
                print!("{}", std::fs::read_to_string(p)?);
            }
            if let Some(t) = &out.targets {
                println!("targets: {}", t.description);
                for l in t.lines() {
                    println!("{l}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Admissibility {
            common,
            degree,
            beta0,
            beta1,
            samples,
            gamma,
            mu,
        } => {
            let mut cfg = match &common.config {
                Some(p) => AdmissibilityConfig::load(p)?,
                None => {
                    let missing = || CliError::Config("--N, --beta0 and --beta1 are required without --config".into());
                    AdmissibilityConfig {
                        degree: degree.ok_or_else(missing)?,
                        beta0: beta0.ok_or_else(missing)?,
                        beta1: beta1.ok_or_else(missing)?,
                        samples: 100_000,
                        gamma: 0.5,
                        mu: 0.25,
                        name: None,
                    }
                }
            };
            cfg.degree = degree.unwrap_or(cfg.degree);
            cfg.beta0 = beta0.unwrap_or(cfg.beta0);
            cfg.beta1 = beta1.unwrap_or(cfg.beta1);
            cfg.samples = samples.unwrap_or(cfg.samples);
            cfg.gamma = gamma.unwrap_or(cfg.gamma);
            cfg.mu = mu.unwrap_or(cfg.mu);
            let out = fracddg_cli::admissibility(&cfg, &common.out, common.seed)?;
            let verdict = if out.report.admissible { "admissible" } else { "violation" };
            println!("min_ratio={:.6e}", out.report.min_ratio);
            println!("verdict={verdict}");
            println!("report={}", out.path.display());
            Ok(if out.report.admissible { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use suhnpf_cli::commands::{self, BaselineConfig};
use suhnpf_core::solver::{DescentMethod, SolverConfig};

/// Pareto front learning with Fritz-John guided descent.
#[derive(Parser)]
#[command(name = "suhnpf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the benchmark cases.
    List,
    /// Solve a benchmark and write its artifacts.
    Solve {
        case: String,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 1e-4)]
        eps_outer: f64,
        #[arg(long, default_value_t = 1e-4)]
        eps_inner: f64,
        #[arg(long, default_value_t = 0.01)]
        eta: f64,
        /// Falls back to SUHNPF_SEED, then 0.
        #[arg(long, env = "SUHNPF_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
        /// Candidate update rule: gradient or gauss-newton.
        #[arg(long, default_value = "gradient")]
        descent: DescentMethod,
        /// Variable count for case2.
        #[arg(long)]
        dims: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a front table against the analytic solution.
    Eval {
        case: String,
        front: PathBuf,
        #[arg(long)]
        dims: Option<usize>,
        /// Also write the scores as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run the linear-scalarisation baseline.
    Baseline {
        case: String,
        #[arg(long, default_value_t = 11)]
        alphas: usize,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, env = "SUHNPF_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dims: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Look up the design point for trade-off weights in a report.
    Query {
        report: PathBuf,
        /// Comma-separated weights, e.g. 0.5,0.5.
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
    },
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::List => print!("{}", commands::list()),
        Command::Solve {
            case,
            points,
            eps_outer,
            eps_inner,
            eta,
            seed,
            max_iters,
            descent,
            dims,
            out,
        } => {
            let bench = commands::resolve_case(&case, dims)?;
            let cfg = SolverConfig {
                points,
                eps_outer,
                eps_inner,
                eta,
                seed,
                max_outer_iters: max_iters,
                descent,
                ..SolverConfig::default()
            };
            let out = out.unwrap_or_else(|| commands::default_out("solve", &case));
            let report = commands::solve(&bench, &cfg, &out)?;
            print!("{}", std::fs::read_to_string(out.join("summary.txt"))?);
            println!("output        {}", out.display());
            if !report.converged {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Eval {
            case,
            front,
            dims,
            json,
        } => {
            let bench = commands::resolve_case(&case, dims)?;
            print!("{}", commands::eval_file(&bench, &front, json.as_deref())?);
        }
        Command::Baseline {
            case,
            alphas,
            steps,
            lr,
            seed,
            dims,
            out,
        } => {
            let bench = commands::resolve_case(&case, dims)?;
            let out = out.unwrap_or_else(|| commands::default_out("baseline", &case));
            let cfg = BaselineConfig {
                alphas,
                steps,
                lr,
                seed,
            };
            let rows = commands::baseline(&bench, &cfg, &out)?;
            println!(
                "{rows} rows written to {}",
                out.join("ls_front.csv").display()
            );
        }
        Command::Query { report, alpha } => {
            let q = commands::query(&report, &alpha)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&q).context("cannot encode the answer")?
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

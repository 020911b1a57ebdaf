mod config;
mod error;
mod output;
mod pipeline;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adprod::oracle;
use clap::{Parser, Subcommand};

use crate::config::{Method, RunConfig};
use crate::error::CliError;
use crate::pipeline::Settings;
use crate::scenario::Problem;

/// Adiabatic product-expansion solver for time-dependent Hamiltonians.
#[derive(Parser)]
#[command(name = "adprod", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario with one method and write the propagator CSV.
    Run(Args),
    /// Print the class of the scenario's Hamiltonian.
    Classify(Args),
    /// Run every method that applies to the scenario against the oracle.
    Compare(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV (overrides [output].propagator).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Method spec such as `oracle`, `adiabatic(2)`, `modified(3)`, `dyson(4)`.
    #[arg(long)]
    method: Option<String>,
    /// Number of grid intervals (overrides [grid].steps).
    #[arg(long)]
    steps: Option<usize>,
    /// Seed for `random = true` scenarios.
    #[arg(long)]
    seed: Option<u64>,
}

struct Loaded {
    cfg: RunConfig,
    problem: Problem,
    settings: Settings,
}

fn load(args: &Args) -> Result<Loaded, CliError> {
    let cfg = config::load(&args.config)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let problem = scenario::build(&cfg, base, args.steps, args.seed)?;
    let settings = Settings { tolerances: cfg.tolerances, substeps: cfg.method.substeps };
    Ok(Loaded { cfg, problem, settings })
}

fn method_of(args: &Args, cfg: &RunConfig) -> Result<Method, CliError> {
    let spec = args.method.as_deref().unwrap_or(&cfg.method.name);
    Method::parse(spec, cfg.method.levels, cfg.method.terms)
}

fn fmt_list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(","))
}

fn run(args: &Args) -> Result<(), CliError> {
    let Loaded { cfg, problem, settings } = load(args)?;
    let method = method_of(args, &cfg)?;
    let outcome = pipeline::execute(&problem, method, &settings)?;

    let signal = problem.signal()?;
    let defect = oracle::det_defect(&signal, &outcome.propagator);
    let det_scale = outcome.propagator.values().iter().map(|m| m.det().norm()).fold(1.0, f64::max);
    // The truncated Dyson series is not unimodular; its defect is only reported.
    if !matches!(method, Method::Dyson(_)) && !(defect <= settings.tolerances.det * det_scale) {
        return Err(CliError::Invariant(format!(
            "|det U - exp(-i int tr H)| = {defect:.3e} exceeds {:.3e}",
            settings.tolerances.det * det_scale
        )));
    }

    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.propagator.clone())
        .unwrap_or_else(|| args.config.with_extension("csv"));
    let comparison = if method == Method::Oracle {
        None
    } else {
        let reference = pipeline::oracle_for(&problem, &settings)?;
        Some(oracle::compare(&outcome.propagator, &reference)?)
    };
    output::write_propagator(
        &out,
        &outcome.propagator,
        outcome.trajectory.as_ref(),
        comparison.as_ref().map(|c| c.per_t.as_slice()),
    )?;
    let (sup, fin) = match &comparison {
        Some(c) => {
            let path = cfg.output.comparison.clone().unwrap_or_else(|| output::comparison_path(&out));
            output::write_comparison(&path, &problem.grid().times(), &c.per_t)?;
            (format!("{:.3e}", c.sup_fro), format!("{:.3e}", c.final_fro))
        }
        None => ("n/a".into(), "n/a".into()),
    };
    println!(
        "method={} status={} sup_error={sup} final_error={fin} det_defect={defect:.3e} residuals={}",
        method.label(),
        outcome.status.replace(' ', "_"),
        fmt_list(&outcome.residuals)
    );
    Ok(())
}

fn classify(args: &Args) -> Result<(), CliError> {
    let Loaded { problem, settings, .. } = load(args)?;
    println!("{}", pipeline::classify(&problem, &settings.tolerances)?);
    Ok(())
}

fn compare(args: &Args) -> Result<(), CliError> {
    let Loaded { cfg, problem, settings } = load(args)?;
    let reference = pipeline::oracle_for(&problem, &settings)?;
    let methods = match &args.method {
        Some(_) => vec![method_of(args, &cfg)?],
        None => pipeline::applicable_methods(&problem),
    };
    let mut rows = Vec::new();
    for m in methods {
        let row = match pipeline::execute(&problem, m, &settings) {
            Ok(o) => {
                let c = oracle::compare(&o.propagator, &reference)?;
                output::MethodRow { method: m.label(), status: o.status, sup_error: c.sup_fro, final_error: c.final_fro }
            }
            Err(e) => {
                let status = match &e {
                    CliError::Numeric(n) => format!("failed: {}", n.name()),
                    other => format!("failed: {other}"),
                };
                output::MethodRow { method: m.label(), status, sup_error: f64::NAN, final_error: f64::NAN }
            }
        };
        println!(
            "{:<14} sup_error={:<10} final_error={:<10} {}",
            row.method,
            format!("{:.3e}", row.sup_error),
            format!("{:.3e}", row.final_error),
            row.status
        );
        rows.push(row);
    }
    if let Some(out) = &args.out {
        output::write_summary_table(out, &rows)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Classify(a) => classify(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code())
        }
    }
}

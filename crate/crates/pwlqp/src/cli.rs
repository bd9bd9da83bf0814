//! Command-line front end: builds one of the packaged models (or loads a raw
//! problem), optionally warm-starts, solves, and prints a report.
//!
//! Exit codes: 0 solved to tolerance, 2 bad flags or parameter values, 3
//! dataset or problem-file errors, 4 solver stopped without convergence.

use crate::io::{self, IoError};
use crate::model::{self, ModelError};
use crate::pmm::{pmm_solve_traced, PenaltySchedule, SolveReport, SolveStatus};
use crate::problem::{Iterate, ProblemData};
use crate::ssn::SsnParams;
use crate::warmstart::{admm_warmstart, auto_variant, AdmmConfig, AdmmVariant};
use clap::{Parser, ValueEnum};
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Cvar,
    Masd,
    Quantile,
    Svm,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WarmstartKind {
    Auto,
    Diagonal,
    Proxlinear,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputKind {
    Text,
    Json,
}

#[derive(Parser, Debug)]
#[command(
    name = "pwlqp",
    version,
    about = "Active-set solver for convex QPs with piecewise-linear objective terms"
)]
struct Cli {
    /// Model family to build and solve.
    #[arg(long, value_enum)]
    model: ModelKind,

    /// Input file: returns CSV (cvar, masd), svmlight (quantile, svm),
    /// problem JSON (raw). Portfolio models fall back to synthetic data.
    #[arg(long)]
    data: Option<PathBuf>,

    /// Tail level (cvar) or quantile level (quantile).
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Elastic-net strength (quantile, svm).
    #[arg(long, default_value_t = 1e-2)]
    lambda: f64,

    /// Weight of the l1 term: portfolio models default to 1e-2, quantile
    /// regression to an even 0.5 split.
    #[arg(long)]
    tau: Option<f64>,

    /// l1 share of the SVM penalty.
    #[arg(long, default_value_t = 0.5)]
    tau1: f64,

    /// Quadratic share of the SVM penalty.
    #[arg(long, default_value_t = 0.5)]
    tau2: f64,

    /// Termination tolerance on the four optimality residuals.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,

    /// Outer iteration cap.
    #[arg(long, default_value_t = 200)]
    max_outer: usize,

    /// Newton iteration cap per outer iteration.
    #[arg(long, default_value_t = 20)]
    max_inner: usize,

    #[arg(long, value_enum, default_value_t = WarmstartKind::Auto)]
    warmstart: WarmstartKind,

    #[arg(long, value_enum, default_value_t = OutputKind::Text)]
    output: OutputKind,

    /// Seed for synthetic portfolio data (used when --data is absent).
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Synthetic scenario count when --data is absent.
    #[arg(long, default_value_t = 1363)]
    scenarios: usize,

    /// Synthetic asset count when --data is absent.
    #[arg(long, default_value_t = 28)]
    assets: usize,

    /// Lower bound on each asset weight (portfolio models).
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    lower: f64,

    /// Upper bound on each asset weight (portfolio models).
    #[arg(long, default_value_t = 0.6)]
    upper: f64,
}

enum CliError {
    Usage(String),
    Load(IoError),
}

/// Parameter-value mistakes come back as usage errors; anything rooted in
/// file contents is a load error.
fn classify(e: ModelError) -> CliError {
    match e {
        ModelError::AlphaRange(_)
        | ModelError::NegativeParameter { .. }
        | ModelError::BoundsLength { .. } => CliError::Usage(e.to_string()),
        other => CliError::Load(IoError::Model(other)),
    }
}

fn require_data<'a>(cli: &'a Cli, what: &str) -> Result<&'a PathBuf, CliError> {
    cli.data
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("--model {what} requires --data")))
}

fn build_problem(cli: &Cli) -> Result<ProblemData, CliError> {
    match cli.model {
        ModelKind::Cvar | ModelKind::Masd => {
            let ds = match &cli.data {
                Some(path) => io::load_returns_csv(path).map_err(CliError::Load)?,
                None => model::synthetic_returns(cli.assets, cli.scenarios, cli.seed),
            };
            let lo = vec![cli.lower; ds.n_assets()];
            let hi = vec![cli.upper; ds.n_assets()];
            let tau = cli.tau.unwrap_or(1e-2);
            let built = if cli.model == ModelKind::Cvar {
                model::build_cvar(&ds, cli.alpha, tau, &lo, &hi)
            } else {
                model::build_masd(&ds, tau, &lo, &hi)
            };
            built.map_err(classify)
        }
        ModelKind::Quantile => {
            let path = require_data(cli, "quantile")?;
            let ds = io::load_svmlight(path).map_err(CliError::Load)?;
            model::build_quantile(&ds, cli.alpha, cli.lambda, cli.tau.unwrap_or(0.5))
                .map_err(classify)
        }
        ModelKind::Svm => {
            let path = require_data(cli, "svm")?;
            let ds = io::load_svmlight(path).map_err(CliError::Load)?;
            model::build_svm(&ds, cli.lambda, cli.tau1, cli.tau2).map_err(classify)
        }
        ModelKind::Raw => {
            let path = require_data(cli, "raw")?;
            io::load_problem_json(path).map_err(CliError::Load)
        }
    }
}

fn print_text(report: &SolveReport) {
    println!("status           {}", report.status);
    println!("objective        {:.9e}", report.objective);
    println!("PMM(SSN)[Fact.]  {}", report.counters());
    println!("warm start       {} sweeps", report.warmstart_iters);
    let r = report.residuals;
    println!(
        "residuals        {:.2e} {:.2e} {:.2e} {:.2e}",
        r[0], r[1], r[2], r[3]
    );
    println!(
        "active sets      |B_g1|={} |N_g2|={}",
        report.active_set_sizes.0, report.active_set_sizes.1
    );
    println!("time (s)         {:.3}", report.wall_time_s);
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let p = build_problem(cli)?;
    let sched = PenaltySchedule {
        max_outer: cli.max_outer,
        ..PenaltySchedule::default()
    };
    let ssn = SsnParams {
        max_inner: cli.max_inner,
        ..SsnParams::default()
    };
    let (start, ws_iters) = match cli.warmstart {
        WarmstartKind::None => (Iterate::zeros(&p), 0),
        kind => {
            let variant = match kind {
                WarmstartKind::Diagonal => AdmmVariant::Diagonal,
                WarmstartKind::Proxlinear => AdmmVariant::ProxLinear,
                _ => auto_variant(&p),
            };
            let cfg = AdmmConfig {
                variant,
                ..AdmmConfig::default()
            };
            match admm_warmstart(&p, &cfg) {
                Ok(ws) => (ws.start, ws.iterations),
                // The warm start is only an accelerator; fall back cold.
                Err(_) => (Iterate::zeros(&p), 0),
            }
        }
    };
    let (_, mut report, _) = pmm_solve_traced(&p, start, &sched, cli.tol, &ssn);
    report.warmstart_iters = ws_iters;
    match cli.output {
        OutputKind::Json => println!("{}", io::report_to_json(&report)),
        OutputKind::Text => print_text(&report),
    }
    Ok(if report.status == SolveStatus::Optimal {
        0
    } else {
        4
    })
}

/// Parses arguments and runs one solve; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 2 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Load(e)) => {
            eprintln!("error: {e}");
            3
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_the_documented_experiment_settings() {
        let cli = Cli::try_parse_from(["pwlqp", "--model", "cvar"]).unwrap();
        assert_eq!(cli.alpha, 0.05);
        assert_eq!(cli.tol, 1e-5);
        assert_eq!(cli.max_outer, 200);
        assert_eq!(cli.max_inner, 20);
        assert_eq!(cli.lower, -1.0);
        assert_eq!(cli.upper, 0.6);
        assert_eq!(cli.warmstart, WarmstartKind::Auto);
        assert_eq!(cli.output, OutputKind::Text);
    }

    #[test]
    fn negative_bound_values_parse() {
        let cli =
            Cli::try_parse_from(["pwlqp", "--model", "masd", "--lower", "-0.25"]).unwrap();
        assert_eq!(cli.lower, -0.25);
    }

    #[test]
    fn quantile_without_data_is_a_usage_error() {
        let cli = Cli::try_parse_from(["pwlqp", "--model", "quantile"]).unwrap();
        assert!(matches!(
            build_problem(&cli),
            Err(CliError::Usage(msg)) if msg.contains("--data")
        ));
    }

    #[test]
    fn out_of_range_alpha_is_a_usage_error() {
        let cli = Cli::try_parse_from([
            "pwlqp", "--model", "cvar", "--alpha", "1.5", "--assets", "3", "--scenarios", "4",
        ])
        .unwrap();
        assert!(matches!(build_problem(&cli), Err(CliError::Usage(_))));
    }
}

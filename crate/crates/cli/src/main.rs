//! `imd`: adaptive mirror descent with inexact subgradient oracles and
//! convergence certificates.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use imd_cli::{
    catalog_table, load_run_config, load_sweep_configs, parse_algorithm, run, sweep, sweep_table,
    verify, CliError, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "imd",
    about = "Adaptive mirror descent for constrained nonsmooth convex problems with inexact subgradient oracles",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem, write a trace CSV and a certificate report
    Solve(SolveArgs),
    /// Run a list of configurations and print an aggregate table
    Sweep(SweepArgs),
    /// List the built-in benchmark problems
    Catalog,
    /// Re-run the certificates of an existing report and compare artifacts
    Verify {
        /// Path to a .report.json produced by `solve`
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Accuracy parameter (> 0)
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    /// Dual-norm magnitude of the objective-oracle perturbation
    #[arg(long, allow_hyphen_values = true)]
    delta_noise: Option<f64>,
    /// Seed for the perturbation hash
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $IMD_OUT_DIR or ./imd-out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Absolute certificate tolerance
    #[arg(long, allow_hyphen_values = true)]
    tolerance: Option<f64>,
    /// Hard iteration cap as a multiple of the adaptive bound
    #[arg(long, allow_hyphen_values = true)]
    max_iter_factor: Option<f64>,
    /// Also evaluate the sampled growth-modulus certificates
    #[arg(long)]
    lemma1: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Catalog problem name (see `imd catalog`)
    #[arg(long)]
    problem: Option<String>,
    /// weighted | adaptive | fixed
    #[arg(long)]
    algorithm: Option<String>,
    /// JSON run configuration (supports inline problem specs)
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON file with an array of run configurations
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog problem name
    #[arg(long)]
    problem: Option<String>,
    /// weighted | adaptive | fixed
    #[arg(long)]
    algorithm: Option<String>,
    /// Comma-separated eps values
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
    /// Comma-separated delta-noise values
    #[arg(long, allow_hyphen_values = true)]
    delta_noise: Option<String>,
    /// Comma-separated seeds
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    tolerance: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    max_iter_factor: Option<f64>,
    #[arg(long)]
    lemma1: bool,
}

fn apply_common(config: &mut RunConfig, common: &CommonArgs) {
    if let Some(eps) = common.eps {
        config.eps = eps;
    }
    if let Some(noise) = common.delta_noise {
        config.delta_noise = noise;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(dir) = &common.out_dir {
        config.out_dir = Some(dir.clone());
    }
    if let Some(t) = common.tolerance {
        config.tolerance = t;
    }
    if let Some(f) = common.max_iter_factor {
        config.max_iter_factor = f;
    }
    if common.lemma1 {
        config.certificates.lemma1 = true;
    }
}

fn solve_config(args: &SolveArgs) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            if args.problem.is_some() {
                return Err(CliError::Usage(
                    "--config and --problem are mutually exclusive".into(),
                ));
            }
            load_run_config(path)?
        }
        None => {
            let problem = args.problem.clone().ok_or_else(|| {
                CliError::Usage("either --problem or --config is required".into())
            })?;
            let algorithm = args
                .algorithm
                .as_deref()
                .ok_or_else(|| CliError::Usage("--algorithm is required".into()))
                .and_then(parse_algorithm)?;
            let eps = args
                .common
                .eps
                .ok_or_else(|| CliError::Usage("--eps is required".into()))?;
            RunConfig::new(problem, algorithm, eps)
        }
    };
    if let Some(a) = &args.algorithm {
        config.algorithm = parse_algorithm(a)?;
    }
    apply_common(&mut config, &args.common);
    Ok(config)
}

fn parse_list<T: std::str::FromStr>(raw: &str, field: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| CliError::Usage(format!("invalid {field} entry: {s}")))
        })
        .collect()
}

fn sweep_configs(args: &SweepArgs) -> Result<Vec<RunConfig>, CliError> {
    if let Some(path) = &args.config {
        let mut configs = load_sweep_configs(path)?;
        for c in &mut configs {
            if let Some(dir) = &args.out_dir {
                c.out_dir = Some(dir.clone());
            }
            if args.lemma1 {
                c.certificates.lemma1 = true;
            }
        }
        return Ok(configs);
    }
    let problem = args
        .problem
        .clone()
        .ok_or_else(|| CliError::Usage("either --config or --problem is required".into()))?;
    let algorithm = args
        .algorithm
        .as_deref()
        .ok_or_else(|| CliError::Usage("--algorithm is required".into()))
        .and_then(parse_algorithm)?;
    let eps_list: Vec<f64> = match &args.eps {
        Some(raw) => parse_list(raw, "eps")?,
        None => return Err(CliError::Usage("--eps is required".into())),
    };
    let noise_list: Vec<f64> = match &args.delta_noise {
        Some(raw) => parse_list(raw, "delta-noise")?,
        None => vec![0.0],
    };
    let seed_list: Vec<u64> = match &args.seed {
        Some(raw) => parse_list(raw, "seed")?,
        None => vec![0],
    };
    let mut configs = Vec::new();
    for &eps in &eps_list {
        for &noise in &noise_list {
            for &seed in &seed_list {
                let mut c = RunConfig::new(problem.clone(), algorithm, eps);
                c.delta_noise = noise;
                c.seed = seed;
                c.out_dir = args.out_dir.clone();
                if let Some(t) = args.tolerance {
                    c.tolerance = t;
                }
                if let Some(f) = args.max_iter_factor {
                    c.max_iter_factor = f;
                }
                if args.lemma1 {
                    c.certificates.lemma1 = true;
                }
                configs.push(c);
            }
        }
    }
    Ok(configs)
}

fn run_solve(args: &SolveArgs) -> Result<bool, CliError> {
    let config = solve_config(args)?;
    let outcome = run(&config)?;
    let r = &outcome.report;
    println!(
        "{} / {} / eps {} / noise {} / seed {}",
        r.problem, r.algorithm, r.eps, r.delta_noise, r.seed
    );
    println!(
        "stop: {} after {} iterations ({} productive, {} non-productive; bound {})",
        r.stop_reason, r.iterations, r.productive_count, r.nonproductive_count, r.iteration_bound
    );
    match r.f_gap {
        Some(gap) => println!("f gap: {gap}   g value: {}", r.g_value),
        None => println!("f estimate: {}   g value: {}", r.f_estimate, r.g_value),
    }
    let evaluable = r.certificates.iter().filter(|c| c.evaluable).count();
    let passed = r.certificates.iter().filter(|c| c.evaluable && c.satisfied).count();
    println!("certificates: {passed}/{evaluable} passed");
    for c in r.certificates.iter().filter(|c| c.is_failure()) {
        println!("  FAIL {}: lhs {} > rhs {}", c.label, c.lhs, c.rhs);
    }
    println!("trace:  {}", outcome.trace_path.display());
    println!("report: {}", outcome.report_path.display());
    Ok(outcome.all_passed)
}

fn run_sweep(args: &SweepArgs) -> Result<bool, CliError> {
    let configs = sweep_configs(args)?;
    let outcome = sweep(&configs)?;
    print!("{}", sweep_table(&outcome.rows));
    println!("summary: {}", outcome.summary_path.display());
    Ok(outcome.all_passed)
}

fn run_verify(report: &Path) -> Result<bool, CliError> {
    let outcome = verify(report)?;
    println!(
        "trace: {}  report: {}  certificates: {}",
        if outcome.trace_matches { "match" } else { "MISMATCH" },
        if outcome.report_matches { "match" } else { "MISMATCH" },
        if outcome.certificates_pass { "pass" } else { "FAIL" },
    );
    Ok(outcome.ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Catalog => {
            print!("{}", catalog_table());
            Ok(true)
        }
        Command::Verify { report } => run_verify(report),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

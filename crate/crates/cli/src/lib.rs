//! Execution engine behind the `imd` binary: run one configuration, sweep
//! a list of them, list the catalog, and re-verify recorded artifacts.
//!
//! Exit-code contract (mapped in `main`): 0 when every enabled certificate
//! passed, 2 when any certificate failed or a run ended at the iteration
//! cap, 1 on usage or configuration errors. Artifacts are written
//! atomically (write to a temporary name, then rename), and identical
//! config plus seed produces byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use imd_core::analysis::{
    check_corollary, check_lemma1, check_step_inequalities, check_terminal_guarantees,
    estimate_omega, Certificate,
};
use imd_core::oracle::{max_constraint, perturbed_oracle, ConvexFn};
use imd_core::problems::builtin_catalog;
use imd_core::solver::{solve, Problem, SolveResult, SolverOptions, StopReason};

pub mod config;
pub mod report;

pub use config::{parse_algorithm, CertificateToggles, RunConfig};
pub use report::{report_to_json, trace_to_csv, RunReport};

/// Default output root when neither the config nor `IMD_OUT_DIR` says
/// otherwise.
pub const DEFAULT_OUT_DIR: &str = "imd-out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("solver error: {0}")]
    Solve(#[from] imd_core::solver::SolveError),
    #[error("certificate error: {0}")]
    Analysis(#[from] imd_core::analysis::AnalysisError),
    #[error("problem error: {0}")]
    Problems(#[from] imd_core::problems::ProblemsError),
    #[error("malformed JSON in {path}: {message}")]
    Json { path: PathBuf, message: String },
}

/// A finished run before any files are written.
#[derive(Debug, Clone)]
pub struct ExecutedRun {
    pub config: RunConfig,
    pub problem: Problem,
    pub result: SolveResult,
    pub certificates: Vec<Certificate>,
    pub all_passed: bool,
}

/// Solve and evaluate certificates for one configuration.
pub fn execute(config: &RunConfig) -> Result<ExecutedRun, CliError> {
    config.validate()?;
    let spec = config.problem_spec()?;
    let mut problem = spec.build()?;
    if config.delta_noise > 0.0 {
        let diameter = problem.setup.feasible_set().diameter(problem.setup.norm_kind());
        problem.objective = perturbed_oracle(
            problem.objective.clone(),
            config.delta_noise,
            diameter,
            config.seed,
            problem.setup.norm_kind(),
        )
        .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let options = SolverOptions { max_iter_factor: config.max_iter_factor };
    let result = solve(&problem, config.algorithm, config.eps, &options)?;

    let mut certificates = Vec::new();
    let toggles = config.certificates;
    if let Some(reference) = problem.reference.clone() {
        if toggles.step {
            certificates.extend(check_step_inequalities(
                &result.trace,
                result.algorithm,
                &reference.point,
                &problem.setup,
                config.tolerance,
            ));
        }
        if toggles.terminal && result.stop_reason == StopReason::CriterionMet {
            certificates.extend(check_terminal_guarantees(
                &result,
                &problem,
                config.eps,
                config.tolerance,
            )?);
        }
        if toggles.lemma1 {
            let diameter = problem.setup.feasible_set().diameter(problem.setup.norm_kind());
            let tau_grid: Vec<f64> = (0..=80).map(|i| i as f64 * diameter / 80.0).collect();
            let modulus = estimate_omega(&problem, &reference.point, reference.value, &tau_grid)?;
            certificates.extend(check_lemma1(
                &problem,
                &result.trace,
                &modulus,
                config.tolerance,
            )?);
        }
        let is_smooth_max = matches!(problem.objective.base_fn(), Some(ConvexFn::MaxOf(_)));
        if toggles.corollary && is_smooth_max && result.productive_count > 0 {
            certificates.push(check_corollary(
                &problem,
                &result,
                config.eps,
                None,
                config.tolerance,
            )?);
        }
    }

    // an iteration-cap exit is an uncertified run regardless of certificates
    let all_passed = certificates.iter().all(|c| !c.is_failure())
        && result.stop_reason != StopReason::IterationCap;

    Ok(ExecutedRun { config: config.clone(), problem, result, certificates, all_passed })
}

/// Artifacts of a written run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trace_path: PathBuf,
    pub report_path: PathBuf,
    pub all_passed: bool,
}

fn resolve_out_dir(config: &RunConfig) -> PathBuf {
    config
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("IMD_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| CliError::Io { path: tmp.clone(), source: e })?;
    fs::rename(&tmp, path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

/// Build the report for an executed run.
pub fn build_report(run: &ExecutedRun, trace_file: &str) -> RunReport {
    let result = &run.result;
    let problem = &run.problem;
    let f_estimate = problem.objective.value(&result.output_point);
    let (g_value, _, _) = max_constraint(&problem.constraints, &result.output_point, 0.0)
        .expect("validated problems have constraints");
    let f_gap = problem.reference.as_ref().map(|r| f_estimate - r.value);
    let problem_name = run
        .config
        .problem
        .clone()
        .or_else(|| run.config.problem_inline.as_ref().map(|s| s.name.clone()))
        .unwrap_or_default();
    RunReport {
        problem: problem_name,
        algorithm: run.config.algorithm.as_str().to_string(),
        eps: run.config.eps,
        delta_noise: run.config.delta_noise,
        seed: run.config.seed,
        stop_reason: report::stop_reason_str(result.stop_reason).to_string(),
        output_rule: report::output_rule_str(result).to_string(),
        iterations: result.iterations,
        productive_count: result.productive_count,
        nonproductive_count: result.nonproductive_count,
        iteration_bound: result.iteration_bound,
        output_point: result.output_point.coords().to_vec(),
        f_estimate,
        g_value,
        f_gap,
        delta_max_objective: result.max_productive_delta(),
        delta_max_constraint: result.trace.iter().map(|r| r.g_delta).fold(0.0, f64::max),
        max_constraint_sub_norm: result.max_constraint_sub_norm(),
        trace_file: trace_file.to_string(),
        certificates: run.certificates.clone(),
        all_passed: run.all_passed,
        config: run.config.clone(),
    }
}

/// Execute one configuration and write its trace and report files.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let executed = execute(config)?;
    let out_dir = resolve_out_dir(config);
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io { path: out_dir.clone(), source: e })?;
    let stem = config.file_stem();
    let trace_name = format!("{stem}.trace.csv");
    let report_name = format!("{stem}.report.json");
    let trace_path = out_dir.join(&trace_name);
    let report_path = out_dir.join(&report_name);

    let trace_csv = trace_to_csv(&executed.result.trace);
    let report = build_report(&executed, &trace_name);
    write_atomic(&trace_path, &trace_csv)?;
    write_atomic(&report_path, &report_to_json(&report))?;

    Ok(RunOutcome { all_passed: executed.all_passed, report, trace_path, report_path })
}

/// One row of a sweep table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub problem: String,
    pub algorithm: String,
    pub eps: f64,
    pub delta_noise: f64,
    pub seed: u64,
    pub iterations: usize,
    pub bound: u64,
    pub f_gap: Option<f64>,
    pub g_value: f64,
    pub certificates_passed: usize,
    pub certificates_total: usize,
    pub all_passed: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub all_passed: bool,
    pub summary_path: PathBuf,
}

/// Run every configuration and write an aggregate table. All configs are
/// validated up front; any config error aborts before the first solve.
pub fn sweep(configs: &[RunConfig]) -> Result<SweepOutcome, CliError> {
    if configs.is_empty() {
        return Err(CliError::Usage("sweep needs at least one run configuration".into()));
    }
    for (i, c) in configs.iter().enumerate() {
        c.validate()
            .map_err(|e| CliError::Usage(format!("config #{}: {e}", i + 1)))?;
        c.problem_spec()
            .map_err(|e| CliError::Usage(format!("config #{}: {e}", i + 1)))?;
    }
    let mut rows = Vec::with_capacity(configs.len());
    for config in configs {
        let outcome = run(config)?;
        let r = &outcome.report;
        let evaluable = r.certificates.iter().filter(|c| c.evaluable).count();
        let passed = r.certificates.iter().filter(|c| c.evaluable && c.satisfied).count();
        rows.push(SweepRow {
            problem: r.problem.clone(),
            algorithm: r.algorithm.clone(),
            eps: r.eps,
            delta_noise: r.delta_noise,
            seed: r.seed,
            iterations: r.iterations,
            bound: r.iteration_bound,
            f_gap: r.f_gap,
            g_value: r.g_value,
            certificates_passed: passed,
            certificates_total: evaluable,
            all_passed: outcome.all_passed,
        });
    }
    let all_passed = rows.iter().all(|r| r.all_passed);
    let out_dir = resolve_out_dir(&configs[0]);
    let summary_path = out_dir.join("sweep_summary.csv");
    write_atomic(&summary_path, &sweep_csv(&rows))?;
    Ok(SweepOutcome { rows, all_passed, summary_path })
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "problem,algorithm,eps,delta_noise,seed,iterations,bound,f_gap,g_value,certs_passed,certs_total,status\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.problem,
            r.algorithm,
            r.eps,
            r.delta_noise,
            r.seed,
            r.iterations,
            r.bound,
            r.f_gap.map(|v| format!("{v}")).unwrap_or_default(),
            r.g_value,
            r.certificates_passed,
            r.certificates_total,
            if r.all_passed { "ok" } else { "FAIL" },
        ));
    }
    out
}

/// Human-readable sweep table.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{:<20} {:<8} {:>6} {:>7} {:>6} {:>7} {:>7} {:>12} {:>12} {:>7} {:>6}\n",
        "problem", "algo", "eps", "noise", "seed", "iters", "bound", "f_gap", "g_value", "certs", "status"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<20} {:<8} {:>6} {:>7} {:>6} {:>7} {:>7} {:>12} {:>12} {:>3}/{:<3} {:>6}\n",
            r.problem,
            r.algorithm,
            r.eps,
            r.delta_noise,
            r.seed,
            r.iterations,
            r.bound,
            r.f_gap.map(|v| format!("{v:.6}")).unwrap_or_default(),
            format!("{:.6}", r.g_value),
            r.certificates_passed,
            r.certificates_total,
            if r.all_passed { "ok" } else { "FAIL" },
        ));
    }
    out
}

/// Catalog listing for the `catalog` verb.
pub fn catalog_table() -> String {
    let mut out = format!(
        "{:<20} {:>3} {:<16} {:>8} {:>10} {:>10} {:<12}\n",
        "name", "dim", "setup", "m_g", "theta0_sq", "f_star", "reference"
    );
    for spec in builtin_catalog() {
        let setup = match spec.setup.norm_kind() {
            imd_core::NormKind::L2 => match spec.setup.feasible_set() {
                imd_core::FeasibleSet::Box { .. } => "euclidean-box",
                imd_core::FeasibleSet::Ball { .. } => "euclidean-ball",
                imd_core::FeasibleSet::Simplex { .. } => "euclidean",
            },
            imd_core::NormKind::L1 => "entropy-simplex",
        };
        let (f_star, source) = match &spec.reference {
            Some(r) => (
                format!("{:.6}", r.value),
                match r.source {
                    imd_core::solver::ReferenceSource::Analytic => "analytic".to_string(),
                    imd_core::solver::ReferenceSource::GridSearch { resolution } => {
                        format!("grid({resolution})")
                    }
                },
            ),
            None => ("-".into(), "-".into()),
        };
        out.push_str(&format!(
            "{:<20} {:>3} {:<16} {:>8.4} {:>10.6} {:>10} {:<12}\n",
            spec.name,
            spec.dimension,
            setup,
            spec.m_g,
            spec.theta0_sq,
            f_star,
            source,
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub trace_matches: bool,
    pub report_matches: bool,
    pub certificates_pass: bool,
}

impl VerifyOutcome {
    pub fn ok(&self) -> bool {
        self.trace_matches && self.report_matches && self.certificates_pass
    }
}

/// Re-execute the run a report describes and check that the stored trace
/// and report are exactly what the deterministic re-run produces.
pub fn verify(report_path: &Path) -> Result<VerifyOutcome, CliError> {
    let raw = fs::read_to_string(report_path)
        .map_err(|e| CliError::Io { path: report_path.to_path_buf(), source: e })?;
    let stored: RunReport = serde_json::from_str(&raw).map_err(|e| CliError::Json {
        path: report_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let executed = execute(&stored.config)?;
    let recomputed_trace = trace_to_csv(&executed.result.trace);
    let recomputed_report = build_report(&executed, &stored.trace_file);

    let dir = report_path.parent().unwrap_or_else(|| Path::new("."));
    let trace_path = dir.join(&stored.trace_file);
    let stored_trace = fs::read_to_string(&trace_path)
        .map_err(|e| CliError::Io { path: trace_path.clone(), source: e })?;

    Ok(VerifyOutcome {
        trace_matches: stored_trace == recomputed_trace,
        report_matches: raw == report_to_json(&recomputed_report),
        certificates_pass: executed.all_passed,
    })
}

/// Load a list of run configurations from a JSON file: either a bare array
/// or an object with a `runs` array.
pub fn load_sweep_configs(path: &Path) -> Result<Vec<RunConfig>, CliError> {
    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum SweepFile {
        Bare(Vec<RunConfig>),
        Wrapped { runs: Vec<RunConfig> },
    }
    let raw = fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let parsed: SweepFile = serde_json::from_str(&raw).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(match parsed {
        SweepFile::Bare(v) => v,
        SweepFile::Wrapped { runs } => runs,
    })
}

/// Load a single run configuration from JSON.
pub fn load_run_config(path: &Path) -> Result<RunConfig, CliError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    serde_json::from_str(&raw).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

//! Run configuration: the single self-describing artifact behind every
//! solve, loadable from JSON and echoed verbatim into the summary report.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use imd_core::problems::ProblemSpec;
use imd_core::solver::Algorithm;

use crate::CliError;

/// Which certificate families to evaluate and gate the exit code on.
///
/// The growth-modulus (`lemma1`) family is opt-in: its right-hand side is
/// a sampled estimate whose feasible-witness assumption does not hold on
/// every geometry, so it is reported only when asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertificateToggles {
    pub step: bool,
    pub terminal: bool,
    pub lemma1: bool,
    pub corollary: bool,
}

impl Default for CertificateToggles {
    fn default() -> Self {
        Self { step: true, terminal: true, lemma1: false, corollary: true }
    }
}

fn default_tolerance() -> f64 {
    imd_core::DEFAULT_TOLERANCE
}

fn default_max_iter_factor() -> f64 {
    50.0
}

/// One solve: a problem (catalog name or inline spec), an algorithm, the
/// accuracy knobs, and output options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_inline: Option<ProblemSpec>,
    pub algorithm: Algorithm,
    pub eps: f64,
    /// Dual-norm magnitude of the objective-oracle perturbation; the
    /// reported inexactness is `delta_noise * diameter(Q)`.
    #[serde(default)]
    pub delta_noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub certificates: CertificateToggles,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter_factor")]
    pub max_iter_factor: f64,
}

impl RunConfig {
    pub fn new(problem: impl Into<String>, algorithm: Algorithm, eps: f64) -> Self {
        Self {
            problem: Some(problem.into()),
            problem_inline: None,
            algorithm,
            eps,
            delta_noise: 0.0,
            seed: 0,
            out_dir: None,
            certificates: CertificateToggles::default(),
            tolerance: default_tolerance(),
            max_iter_factor: default_max_iter_factor(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.eps <= 0.0 || self.eps.is_nan() {
            return Err(CliError::Usage(format!("eps must be positive, got {}", self.eps)));
        }
        if self.delta_noise < 0.0 {
            return Err(CliError::Usage(format!(
                "delta-noise must be nonnegative, got {}",
                self.delta_noise
            )));
        }
        if self.tolerance < 0.0 || self.tolerance.is_nan() {
            return Err(CliError::Usage(format!(
                "tolerance must be nonnegative, got {}",
                self.tolerance
            )));
        }
        if self.max_iter_factor < 1.0 || self.max_iter_factor.is_nan() {
            return Err(CliError::Usage(format!(
                "max-iter-factor must be at least 1, got {}",
                self.max_iter_factor
            )));
        }
        match (&self.problem, &self.problem_inline) {
            (None, None) => {
                Err(CliError::Usage("either problem or problem_inline is required".into()))
            }
            (Some(_), Some(_)) => {
                Err(CliError::Usage("problem and problem_inline are mutually exclusive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Resolve the problem spec this config refers to.
    pub fn problem_spec(&self) -> Result<ProblemSpec, CliError> {
        match (&self.problem, &self.problem_inline) {
            (Some(name), None) => {
                imd_core::problems::catalog_problem(name).map_err(|e| CliError::Usage(e.to_string()))
            }
            (None, Some(spec)) => Ok(spec.clone()),
            _ => Err(CliError::Usage("either problem or problem_inline is required".into())),
        }
    }

    /// Deterministic artifact file stem for this config.
    pub fn file_stem(&self) -> String {
        let problem = match (&self.problem, &self.problem_inline) {
            (Some(name), _) => name.clone(),
            (None, Some(spec)) => format!("inline-{}", spec.name),
            _ => "unknown".into(),
        };
        format!(
            "{problem}_{}_eps{}_noise{}_seed{}",
            self.algorithm.as_str(),
            self.eps,
            self.delta_noise,
            self.seed
        )
    }
}

pub fn parse_algorithm(s: &str) -> Result<Algorithm, CliError> {
    match s {
        "weighted" => Ok(Algorithm::Weighted),
        "adaptive" => Ok(Algorithm::Adaptive),
        "fixed" => Ok(Algorithm::FixedBudget),
        other => Err(CliError::Usage(format!(
            "algorithm must be one of weighted|adaptive|fixed, got {other}"
        ))),
    }
}

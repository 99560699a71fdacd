//! Certificate engine: turns the per-step and terminal inequalities of the
//! convergence analysis into machine-checkable verdicts on recorded traces.
//!
//! Every certificate is the instance of one inequality with its left- and
//! right-hand sides evaluated on concrete run data:
//!
//! * `Lemma2Step`: the mirror-step inequality
//!   `h <p, x - z> <= h^2/2 ||p||_*^2 + V(z, x) - V(z, y)` at `z = x*`,
//!   checked on every step of every variant,
//! * `NonproductiveDrop`: `eps^2/2 < V(x*, x^k) - V(x*, x^{k+1})` on the
//!   non-productive steps of the weighted variant,
//! * `Lemma1`: `f(x^k) - f* <= omega(v(x^k, x*)) + delta` with the growth
//!   modulus `omega` estimated by dense sampling,
//! * `Theorem1/2/3`: the terminal guarantees of the three variants,
//! * `IterationBound`: `N <= ceil(2 max{1, M_g^2} Theta0^2 / eps^2)`,
//! * `CorollarySmoothMax`: the smooth-max bound
//!   `min_I f(x^k) - f* <= ||grad f(x*)||_* eps + L/2 eps^2 + delta`.
//!
//! Checkers are pure functions of `(trace, problem, eps)`: recomputation
//! yields bit-identical verdicts. `omega` is a sampled lower envelope, so
//! `Lemma1` right-hand sides carry an explicit pad (`M_f` times the mesh
//! diagonal); a failure only counts as a violation if the left side clears
//! the pad as well.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{max_constraint, DeltaSubgradient};
use crate::proximal::{dot, DualVector, Point, ProximalSetup};
use crate::solver::{Algorithm, IterationRecord, Problem, SolveResult, StopReason};

/// Absolute tolerance all certificates use unless overridden.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("the problem carries no reference optimum")]
    MissingReference,
    #[error("terminal guarantees require stop reason CriterionMet, got {0:?}")]
    StopReasonNotCriterion(StopReason),
    #[error("the objective is not a max of smooth components")]
    UnsupportedObjective,
    #[error("tau grid must be nondecreasing and nonnegative")]
    InvalidTauGrid,
    #[error("oracle error: {0}")]
    Oracle(#[from] crate::oracle::OracleError),
    #[error("proximal error: {0}")]
    Proximal(#[from] crate::proximal::ProximalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateName {
    Lemma1,
    Lemma2Step,
    NonproductiveDrop,
    Theorem1,
    Theorem2,
    Theorem3,
    CorollarySmoothMax,
    IterationBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertContext {
    Iteration(usize),
    Terminal,
}

/// One checked inequality instance. `satisfied` holds exactly when
/// `lhs <= rhs + tolerance` and the certificate was evaluable; an
/// unevaluable certificate (for example `v` beyond the sampled `omega`
/// range) is reported with `evaluable = false` and does not count as a
/// violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: CertificateName,
    pub label: String,
    pub satisfied: bool,
    pub evaluable: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub context: CertContext,
}

impl Certificate {
    fn evaluated(
        name: CertificateName,
        label: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
        context: CertContext,
    ) -> Self {
        Self {
            name,
            label: label.into(),
            satisfied: lhs <= rhs + tolerance,
            evaluable: true,
            lhs,
            rhs,
            slack: rhs - lhs,
            context,
        }
    }

    fn unevaluable(
        name: CertificateName,
        label: impl Into<String>,
        lhs: f64,
        rhs: f64,
        context: CertContext,
    ) -> Self {
        Self {
            name,
            label: label.into(),
            satisfied: false,
            evaluable: false,
            lhs,
            rhs,
            slack: rhs - lhs,
            context,
        }
    }

    pub fn is_failure(&self) -> bool {
        self.evaluable && !self.satisfied
    }
}

/// The normalized-subgradient gap
/// `v(x, x*) = < p / ||p||_*, x - x* >`, zero when `p = 0`.
pub fn v_delta(
    setup: &ProximalSetup,
    sub: &DeltaSubgradient,
    x: &Point,
    x_star: &Point,
) -> f64 {
    v_delta_vector(setup, &sub.vector, x, x_star)
}

/// [`v_delta`] on a bare dual vector.
pub fn v_delta_vector(
    setup: &ProximalSetup,
    vector: &DualVector,
    x: &Point,
    x_star: &Point,
) -> f64 {
    let norm = setup.dual_norm(vector);
    if norm == 0.0 {
        return 0.0;
    }
    let diff: Vec<f64> = x
        .coords()
        .iter()
        .zip(x_star.coords())
        .map(|(a, b)| a - b)
        .collect();
    dot(vector.coords(), &diff) / norm
}

/// How a growth modulus was sampled, and the resulting uncertainty pad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub method: String,
    pub samples: usize,
    /// Per-axis mesh width of the sample grid.
    pub mesh: f64,
    /// `M_f * mesh * sqrt(dim)`: how far the sampled maximum may sit below
    /// the true one.
    pub pad: f64,
}

/// Sampled growth modulus `omega(tau) = max { f(x) - f* : x in Q,
/// ||x - x*|| <= tau }`, a certified lower envelope of the true modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthModulus {
    pub tau_grid: Vec<f64>,
    pub omega_values: Vec<f64>,
    pub sampling_spec: SamplingSpec,
}

impl GrowthModulus {
    /// Monotone step-up evaluation: the sampled value at the first grid
    /// node `>= tau`. `None` when `tau` exceeds the grid range.
    pub fn eval_upper(&self, tau: f64) -> Option<f64> {
        if tau <= 0.0 {
            return Some(0.0);
        }
        self.tau_grid
            .iter()
            .position(|&t| t >= tau)
            .map(|i| self.omega_values[i])
    }

    pub fn pad(&self) -> f64 {
        self.sampling_spec.pad
    }
}

const OMEGA_GRID_RESOLUTION: usize = 101;
const OMEGA_QUASI_SAMPLES: usize = 100_000;

/// Estimate the growth modulus around `x_star` by deterministic dense
/// sampling: a tensor grid with 101 nodes per axis for `dim <= 3`, a
/// quasi-random (Kronecker sequence) sweep of `10^5` points otherwise.
///
/// The sampled maximum underestimates the true one by at most
/// `M_f * mesh * sqrt(dim)`, recorded as the pad in `sampling_spec`;
/// `M_f` is the objective's Lipschitz bound, falling back to the largest
/// sampled subgradient norm when no bound is declared.
pub fn estimate_omega(
    problem: &Problem,
    x_star: &Point,
    f_star: f64,
    tau_grid: &[f64],
) -> Result<GrowthModulus, AnalysisError> {
    if tau_grid.is_empty()
        || tau_grid.windows(2).any(|w| w[1] < w[0])
        || tau_grid.iter().any(|&t| t < 0.0 || !t.is_finite())
    {
        return Err(AnalysisError::InvalidTauGrid);
    }
    let setup = &problem.setup;
    let dim = setup.dim();
    let tau_max = *tau_grid.last().unwrap();

    let (points, method, mesh): (Vec<Point>, String, f64) = if dim <= 3 {
        let nodes = setup.feasible_set().grid_nodes(OMEGA_GRID_RESOLUTION);
        let mesh = setup.feasible_set().grid_spacing(OMEGA_GRID_RESOLUTION);
        (nodes, format!("tensor-grid-{OMEGA_GRID_RESOLUTION}"), mesh)
    } else {
        let nodes = kronecker_ball_samples(setup, x_star, tau_max, OMEGA_QUASI_SAMPLES);
        // heuristic covering width of N quasi-random points in a cube
        let mesh = 2.0 * tau_max / (OMEGA_QUASI_SAMPLES as f64).powf(1.0 / dim as f64);
        (nodes, format!("kronecker-{OMEGA_QUASI_SAMPLES}"), mesh)
    };

    let mut max_sub_norm = 0.0_f64;
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for p in &points {
        let eval = problem.objective.eval(p);
        max_sub_norm = max_sub_norm.max(setup.dual_norm(&eval.vector));
        samples.push((setup.distance(p, x_star), eval.value - f_star));
    }
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let lipschitz = problem.objective.lipschitz_bound().unwrap_or(max_sub_norm);
    let pad = lipschitz * mesh * (dim as f64).sqrt();

    let mut omega_values = Vec::with_capacity(tau_grid.len());
    let mut idx = 0;
    let mut running = 0.0_f64; // omega(tau) >= 0 always
    for &tau in tau_grid {
        while idx < samples.len() && samples[idx].0 <= tau {
            running = running.max(samples[idx].1);
            idx += 1;
        }
        omega_values.push(running);
    }

    Ok(GrowthModulus {
        tau_grid: tau_grid.to_vec(),
        omega_values,
        sampling_spec: SamplingSpec { method, samples: points.len(), mesh, pad },
    })
}

/// Deterministic Kronecker (additive-recurrence) samples in the primal
/// ball of radius `tau` around `center`, filtered to `Q`.
fn kronecker_ball_samples(
    setup: &ProximalSetup,
    center: &Point,
    tau: f64,
    count: usize,
) -> Vec<Point> {
    let dim = setup.dim();
    // generalized golden ratio: unique positive root of x^(d+1) = x + 1
    let mut phi = 1.5_f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    let alphas: Vec<f64> = (1..=dim).map(|i| (1.0 / phi.powi(i as i32)).fract()).collect();
    let mut out = Vec::new();
    let mut u = vec![0.5; dim];
    for _ in 0..count {
        for (ui, a) in u.iter_mut().zip(&alphas) {
            *ui = (*ui + a).fract();
        }
        let coords: Vec<f64> = u
            .iter()
            .zip(center.coords())
            .map(|(ui, c)| c + (2.0 * ui - 1.0) * tau)
            .collect();
        let p = match Point::new(coords) {
            Ok(p) => p,
            Err(_) => continue,
        };
        if setup.distance(&p, center) <= tau && setup.feasible_set().contains(&p, 0.0) {
            out.push(p);
        }
    }
    out
}

/// One `Lemma1` certificate per productive iterate:
/// `f(x^k) - f* <= omega(v(x^k, x*)) + delta_k + pad`.
pub fn check_lemma1(
    problem: &Problem,
    trace: &[IterationRecord],
    modulus: &GrowthModulus,
    tolerance: f64,
) -> Result<Vec<Certificate>, AnalysisError> {
    let reference = problem.reference.as_ref().ok_or(AnalysisError::MissingReference)?;
    let setup = &problem.setup;
    let mut certs = Vec::new();
    for r in trace.iter().filter(|r| r.productive) {
        let v = v_delta_vector(setup, &r.direction, &r.x, &reference.point);
        let lhs = r.f_value_estimate - reference.value;
        let context = CertContext::Iteration(r.k);
        match modulus.eval_upper(v) {
            Some(om) => {
                let rhs = om + r.delta_reported + modulus.pad();
                certs.push(Certificate::evaluated(
                    CertificateName::Lemma1,
                    format!("lemma1.k{}", r.k),
                    lhs,
                    rhs,
                    tolerance,
                    context,
                ));
            }
            None => {
                certs.push(Certificate::unevaluable(
                    CertificateName::Lemma1,
                    format!("lemma1.k{} (v={v} beyond sampled range)", r.k),
                    lhs,
                    v,
                    context,
                ));
            }
        }
    }
    Ok(certs)
}

/// Per-step certificates against the reference point `z = x*`:
/// a `Lemma2Step` for every record and, for the weighted variant, a
/// `NonproductiveDrop` for every non-productive record. The drop threshold
/// `eps^2/2` is recovered from the step-size law `eps = h ||grad g||_*`.
pub fn check_step_inequalities(
    trace: &[IterationRecord],
    algorithm: Algorithm,
    x_star: &Point,
    setup: &ProximalSetup,
    tolerance: f64,
) -> Vec<Certificate> {
    let mut certs = Vec::new();
    for r in trace {
        let context = CertContext::Iteration(r.k);
        let (v_before, v_after) =
            match (setup.bregman(x_star, &r.x), setup.bregman(x_star, &r.x_next)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => {
                    certs.push(Certificate::unevaluable(
                        CertificateName::Lemma2Step,
                        format!("lemma2.k{} (bregman undefined)", r.k),
                        f64::MAX,
                        f64::MAX,
                        context,
                    ));
                    continue;
                }
            };
        let diff: Vec<f64> = r
            .x
            .coords()
            .iter()
            .zip(x_star.coords())
            .map(|(a, b)| a - b)
            .collect();
        let lhs = r.h * dot(r.direction.coords(), &diff);
        let rhs = r.h * r.h / 2.0 * (r.sub_norm * r.sub_norm) + v_before - v_after;
        certs.push(Certificate::evaluated(
            CertificateName::Lemma2Step,
            format!("lemma2.k{}", r.k),
            lhs,
            rhs,
            tolerance,
            context,
        ));

        if algorithm == Algorithm::Weighted && !r.productive {
            let eps_step = r.h * r.sub_norm;
            certs.push(Certificate::evaluated(
                CertificateName::NonproductiveDrop,
                format!("drop.k{}", r.k),
                eps_step * eps_step / 2.0,
                v_before - v_after,
                tolerance,
                context,
            ));
        }
    }
    certs
}

/// Terminal guarantees of the variant that produced `result`. Where the
/// underlying bound carries a `delta`, the largest per-step reported value
/// of the relevant oracle is used.
pub fn check_terminal_guarantees(
    result: &SolveResult,
    problem: &Problem,
    eps: f64,
    tolerance: f64,
) -> Result<Vec<Certificate>, AnalysisError> {
    if result.stop_reason != StopReason::CriterionMet {
        return Err(AnalysisError::StopReasonNotCriterion(result.stop_reason));
    }
    let reference = problem.reference.as_ref().ok_or(AnalysisError::MissingReference)?;
    let mut certs = Vec::new();
    match result.algorithm {
        Algorithm::Weighted => {
            let f_hat = problem.objective.value(&result.output_point);
            let lhs = f_hat - reference.value;
            let rhs = eps + result.max_productive_delta() + reference.error_bound;
            certs.push(Certificate::evaluated(
                CertificateName::Theorem1,
                "theorem1.f_gap",
                lhs,
                rhs,
                tolerance,
                CertContext::Terminal,
            ));
            let (g_hat, _, _) = max_constraint(&problem.constraints, &result.output_point, 0.0)?;
            certs.push(Certificate::evaluated(
                CertificateName::Theorem1,
                "theorem1.g_value",
                g_hat,
                eps * problem.m_g + result.max_productive_g_delta(),
                tolerance,
                CertContext::Terminal,
            ));
        }
        Algorithm::Adaptive | Algorithm::FixedBudget => {
            let name = if result.algorithm == Algorithm::Adaptive {
                CertificateName::Theorem2
            } else {
                CertificateName::Theorem3
            };
            let tag = if result.algorithm == Algorithm::Adaptive { "theorem2" } else { "theorem3" };
            let min_v = result
                .productive_records()
                .map(|r| v_delta_vector(&problem.setup, &r.direction, &r.x, &reference.point))
                .fold(f64::INFINITY, f64::min);
            certs.push(Certificate::evaluated(
                name,
                format!("{tag}.min_v"),
                min_v,
                eps,
                tolerance,
                CertContext::Terminal,
            ));
            let max_g = result
                .productive_records()
                .map(|r| r.g_value)
                .fold(f64::NEG_INFINITY, f64::max);
            let g_rhs = match result.algorithm {
                Algorithm::Adaptive => eps + result.max_productive_g_delta(),
                _ => problem.m_g * eps + result.max_productive_g_delta(),
            };
            certs.push(Certificate::evaluated(
                name,
                format!("{tag}.max_g"),
                max_g,
                g_rhs,
                tolerance,
                CertContext::Terminal,
            ));
            if result.algorithm == Algorithm::Adaptive {
                certs.push(Certificate::evaluated(
                    CertificateName::IterationBound,
                    "iteration_bound",
                    result.iterations as f64,
                    result.iteration_bound as f64,
                    0.0,
                    CertContext::Terminal,
                ));
            }
        }
    }
    Ok(certs)
}

/// Smooth-max corollary on a finished run:
/// `min_I f(x^k) - f* <= ||grad f(x*)||_* eps + L/2 eps^2 + delta` with
/// `L = max_i L_i`. The witness norm defaults to the exact subgradient
/// selection at `x*` (gradient of the smallest-index maximizing component).
pub fn check_corollary(
    problem: &Problem,
    result: &SolveResult,
    eps: f64,
    grad_at_star_norm: Option<f64>,
    tolerance: f64,
) -> Result<Certificate, AnalysisError> {
    let reference = problem.reference.as_ref().ok_or(AnalysisError::MissingReference)?;
    let max_of = match problem.objective.base_fn() {
        Some(crate::oracle::ConvexFn::MaxOf(m)) => m,
        _ => return Err(AnalysisError::UnsupportedObjective),
    };
    let lipschitz = max_of.max_lipschitz();
    let witness = grad_at_star_norm.unwrap_or_else(|| {
        let f = crate::oracle::ConvexFn::MaxOf(max_of.clone());
        problem.setup.dual_norm(&f.subgradient(&reference.point))
    });
    let lhs = result
        .productive_records()
        .map(|r| r.f_value_estimate)
        .fold(f64::INFINITY, f64::min)
        - reference.value;
    let rhs = witness * eps + 0.5 * lipschitz * eps * eps + result.max_productive_delta();
    Ok(Certificate::evaluated(
        CertificateName::CorollarySmoothMax,
        "corollary.smooth_max",
        lhs,
        rhs,
        tolerance,
        CertContext::Terminal,
    ))
}

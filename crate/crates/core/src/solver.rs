//! The three adaptive mirror-descent methods with productive and
//! non-productive steps.
//!
//! All three iterate from `x0 = argmin_Q d`, query the aggregated
//! constraint `g = max_i g_i` and the objective `f` through their
//! delta-subgradient oracles, and branch on a productivity test:
//!
//! | variant       | productive when                     | productive step        | non-productive step    | stops when                                                   |
//! |---------------|-------------------------------------|------------------------|------------------------|--------------------------------------------------------------|
//! | `Weighted`    | `g <= eps ||grad g||_* + delta`     | `h = eps/||grad f||^2` | `h = eps/||grad g||`   | `2 Theta0^2/eps^2 <= sum_I 1/||grad f||^2 + |J|`             |
//! | `Adaptive`    | `g <= eps + delta`                  | `h = eps/||grad f||`   | `h = eps/||grad g||^2` | `Theta0^2 <= eps^2/2 (|I| + sum_J 1/||grad g||^2)`           |
//! | `FixedBudget` | `g <= eps ||grad g||_* + delta`     | `h = eps/||grad f||`   | `h = eps/||grad g||`   | after exactly `ceil(2 Theta0^2/eps^2)` iterations            |
//!
//! Norms are dual norms of the setup. `Weighted` returns the step-weighted
//! average of productive iterates; the other two return the productive
//! iterate with the smallest objective estimate.
//!
//! Stopping criteria are evaluated after the `k -> k+1` increment, so at
//! least one iteration always runs. A hard cap of `max_iter_factor` times
//! the `Adaptive` iteration bound guards against bad inputs (for example a
//! wrong `theta0_sq`); only `CriterionMet` is a certified exit.
//!
//! A single solve is strictly sequential. Distinct solves over distinct
//! problems may run concurrently; results are immutable once returned.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{max_constraint, DeltaSubgradient, Oracle};
use crate::proximal::{DualVector, Point, ProximalSetup, MEMBERSHIP_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("eps must be positive, got {0}")]
    NonPositiveEps(f64),
    #[error("problem has no constraints; use a constant -1 surrogate for unconstrained runs")]
    NoConstraints,
    #[error("m_g must be positive, got {0}")]
    NonPositiveMg(f64),
    #[error("theta0_sq must be positive, got {0}")]
    NonPositiveTheta(f64),
    #[error("reference optimum violates d(x*) <= theta0_sq: d = {d}, theta0_sq = {theta}")]
    ThetaTooSmall { d: f64, theta: f64 },
    #[error("reference point is outside the feasible set")]
    ReferenceOutsideFeasibleSet,
    #[error("constraint reports a zero subgradient while violated by more than its delta; the problem is infeasible")]
    InfeasibleConstraint,
    #[error("no productive steps recorded where the analysis guarantees at least one")]
    EmptyProductiveSet,
    #[error("oracle error: {0}")]
    Oracle(#[from] crate::oracle::OracleError),
    #[error("proximal error: {0}")]
    Proximal(#[from] crate::proximal::ProximalError),
}

/// Which of the three methods to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Weighted-average output, squared-norm productive steps.
    Weighted,
    /// Argmin output, bounded iteration count.
    Adaptive,
    /// Fixed iteration budget `ceil(2 Theta0^2 / eps^2)`.
    #[serde(rename = "fixed")]
    FixedBudget,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Weighted => "weighted",
            Algorithm::Adaptive => "adaptive",
            Algorithm::FixedBudget => "fixed",
        }
    }
}

/// Where the reference optimum came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReferenceSource {
    Analytic,
    GridSearch { resolution: usize },
}

/// A known (or independently computed) optimum used by the certificate
/// engine. `error_bound` is zero for analytic references and the grid
/// oracle's `M_f * h * sqrt(dim)` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptimum {
    pub point: Point,
    pub value: f64,
    pub source: ReferenceSource,
    pub error_bound: f64,
}

/// A constrained problem: objective and constraint oracles over a proximal
/// setup, plus the two constants every method requires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub objective: Oracle,
    pub constraints: Vec<Oracle>,
    pub setup: ProximalSetup,
    /// Uniform dual-norm bound on constraint subgradients.
    pub m_g: f64,
    /// Known bound with `d(x*) <= theta0_sq`.
    pub theta0_sq: f64,
    pub reference: Option<ReferenceOptimum>,
}

impl Problem {
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.constraints.is_empty() {
            return Err(SolveError::NoConstraints);
        }
        if self.m_g <= 0.0 || self.m_g.is_nan() {
            return Err(SolveError::NonPositiveMg(self.m_g));
        }
        if self.theta0_sq <= 0.0 || self.theta0_sq.is_nan() {
            return Err(SolveError::NonPositiveTheta(self.theta0_sq));
        }
        if let Some(r) = &self.reference {
            if !self.setup.feasible_set().contains(&r.point, MEMBERSHIP_TOL) {
                return Err(SolveError::ReferenceOutsideFeasibleSet);
            }
            let d = self.setup.prox_value(&r.point)?;
            if d > self.theta0_sq + 1e-9 {
                return Err(SolveError::ThetaTooSmall { d, theta: self.theta0_sq });
            }
        }
        Ok(())
    }

    /// `ceil(2 max{1, M_g^2} Theta0^2 / eps^2)`: the iteration bound of the
    /// `Adaptive` method, also used to size the hard cap for all variants.
    pub fn iteration_bound(&self, eps: f64) -> u64 {
        let m = self.m_g * self.m_g;
        let bound = 2.0 * m.max(1.0) * self.theta0_sq / (eps * eps);
        bound.ceil() as u64
    }

    /// `ceil(2 Theta0^2 / eps^2)`: the fixed budget of `FixedBudget`.
    pub fn fixed_budget(&self, eps: f64) -> u64 {
        (2.0 * self.theta0_sq / (eps * eps)).ceil() as u64
    }
}

/// One solver step. `x` is the iterate the step was taken from, `x_next`
/// the produced iterate, `direction` the dual vector the mirror step used
/// (objective subgradient on productive steps, constraint subgradient
/// otherwise). `delta_reported` is the inexactness of `direction`'s oracle;
/// `g_delta` and `g_sub_norm` always refer to the aggregated constraint at
/// `x`, whichever branch was taken.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub productive: bool,
    pub h: f64,
    pub x: Point,
    pub sub_norm: f64,
    pub delta_reported: f64,
    pub g_value: f64,
    pub f_value_estimate: f64,
    pub bregman_to_ref: Option<f64>,
    pub direction: DualVector,
    pub x_next: Point,
    pub g_delta: f64,
    pub g_sub_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputRule {
    WeightedAverage,
    ArgminProductive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// The variant's stopping criterion fired; guarantees apply.
    CriterionMet,
    /// A productive step met a zero objective subgradient: that iterate is
    /// a delta-minimizer (`f(y) >= f(x) - delta` for all `y in Q`).
    ZeroObjectiveSubgradient,
    /// Hard cap reached, or the fixed budget elapsed with no productive
    /// step; no guarantee is certified.
    IterationCap,
}

/// Terminal output of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub algorithm: Algorithm,
    pub eps: f64,
    pub output_point: Point,
    pub output_rule: OutputRule,
    pub iterations: usize,
    pub productive_count: usize,
    pub nonproductive_count: usize,
    pub stop_reason: StopReason,
    pub trace: Vec<IterationRecord>,
    /// The `Adaptive` iteration bound for this run's inputs.
    pub iteration_bound: u64,
}

impl SolveResult {
    pub fn productive_records(&self) -> impl Iterator<Item = &IterationRecord> {
        self.trace.iter().filter(|r| r.productive)
    }

    /// Largest inexactness reported by the step oracle over productive
    /// steps (the objective oracle's delta).
    pub fn max_productive_delta(&self) -> f64 {
        self.productive_records().map(|r| r.delta_reported).fold(0.0, f64::max)
    }

    /// Largest constraint-oracle inexactness observed on productive steps.
    pub fn max_productive_g_delta(&self) -> f64 {
        self.productive_records().map(|r| r.g_delta).fold(0.0, f64::max)
    }

    /// Largest constraint subgradient dual norm seen anywhere in the run;
    /// must not exceed the problem's `m_g`.
    pub fn max_constraint_sub_norm(&self) -> f64 {
        self.trace.iter().map(|r| r.g_sub_norm).fold(0.0, f64::max)
    }
}

/// Options shared by all variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// The hard cap is `max_iter_factor` times the `Adaptive` bound.
    pub max_iter_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iter_factor: 50.0 }
    }
}

/// The algorithm-specific productivity test.
///
/// `Weighted` and `FixedBudget` accept a step as productive when
/// `g(x) <= eps ||grad g(x)||_* + delta`; `Adaptive` when
/// `g(x) <= eps + delta`. `delta` is the inexactness reported by the
/// constraint oracle at this query.
pub fn productivity_test(
    algorithm: Algorithm,
    g_value: f64,
    g_sub: &DeltaSubgradient,
    setup: &ProximalSetup,
    eps: f64,
) -> bool {
    match algorithm {
        Algorithm::Weighted | Algorithm::FixedBudget => {
            g_value <= eps * setup.dual_norm(&g_sub.vector) + g_sub.delta
        }
        Algorithm::Adaptive => g_value <= eps + g_sub.delta,
    }
}

/// Step-weighted average of the productive iterates,
/// `sum_I h_k x^k / sum_I h_k`. Errors when no productive step exists.
pub fn assemble_weighted_average(trace: &[IterationRecord]) -> Result<Point, SolveError> {
    let total: f64 = trace.iter().filter(|r| r.productive).map(|r| r.h).sum();
    if total == 0.0 {
        return Err(SolveError::EmptyProductiveSet);
    }
    let dim = trace[0].x.dim();
    let mut acc = vec![0.0; dim];
    for r in trace.iter().filter(|r| r.productive) {
        let w = r.h / total;
        for (a, c) in acc.iter_mut().zip(r.x.coords()) {
            *a += w * c;
        }
    }
    Point::new(acc).map_err(SolveError::from)
}

fn argmin_productive(trace: &[IterationRecord]) -> Option<Point> {
    trace
        .iter()
        .filter(|r| r.productive)
        .min_by(|a, b| {
            a.f_value_estimate
                .partial_cmp(&b.f_value_estimate)
                .expect("oracle values are finite")
        })
        .map(|r| r.x.clone())
}

/// Algorithm with weighted-average output (productive `h = eps/||.||^2`).
pub fn solve_weighted(problem: &Problem, eps: f64) -> Result<SolveResult, SolveError> {
    solve(problem, Algorithm::Weighted, eps, &SolverOptions::default())
}

/// Algorithm with the `ceil(2 max{1, M_g^2} Theta0^2 / eps^2)` bound.
pub fn solve_adaptive(problem: &Problem, eps: f64) -> Result<SolveResult, SolveError> {
    solve(problem, Algorithm::Adaptive, eps, &SolverOptions::default())
}

/// Algorithm running exactly `ceil(2 Theta0^2 / eps^2)` iterations.
pub fn solve_fixed_budget(problem: &Problem, eps: f64) -> Result<SolveResult, SolveError> {
    solve(problem, Algorithm::FixedBudget, eps, &SolverOptions::default())
}

/// Run one of the three methods.
pub fn solve(
    problem: &Problem,
    algorithm: Algorithm,
    eps: f64,
    options: &SolverOptions,
) -> Result<SolveResult, SolveError> {
    if eps <= 0.0 || eps.is_nan() {
        return Err(SolveError::NonPositiveEps(eps));
    }
    problem.validate()?;

    let setup = &problem.setup;
    let iteration_bound = problem.iteration_bound(eps);
    let cap = ((iteration_bound as f64) * options.max_iter_factor).ceil() as u64;
    let budget = problem.fixed_budget(eps);

    let mut x = setup.prox_center();
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut k: usize = 0;

    // stop-rule accumulators
    let mut sum_inv_f_sq = 0.0_f64; // Weighted: sum_I 1/||grad f||^2
    let mut sum_inv_g_sq = 0.0_f64; // Adaptive: sum_J 1/||grad g||^2
    let mut productive_count: usize = 0;
    let mut nonproductive_count: usize = 0;

    let stop_reason = loop {
        let (g_value, g_sub, _g_index) = max_constraint(&problem.constraints, &x, 0.0)?;
        let g_sub_norm = setup.dual_norm(&g_sub.vector);
        let f_sub = problem.objective.eval(&x);
        let bregman_to_ref = match &problem.reference {
            Some(r) => Some(setup.bregman(&r.point, &x)?),
            None => None,
        };

        let productive = productivity_test(algorithm, g_value, &g_sub, setup, eps);

        let (h, direction, sub_norm, delta_reported) = if productive {
            let nf = setup.dual_norm(&f_sub.vector);
            if nf == 0.0 {
                // f_sub certifies f(y) >= f(x) - delta for all y: stop here.
                break StopReason::ZeroObjectiveSubgradient;
            }
            let h = match algorithm {
                Algorithm::Weighted => eps / (nf * nf),
                Algorithm::Adaptive | Algorithm::FixedBudget => eps / nf,
            };
            sum_inv_f_sq += 1.0 / (nf * nf);
            productive_count += 1;
            (h, f_sub.vector.clone(), nf, f_sub.delta)
        } else {
            let ng = g_sub_norm;
            if ng == 0.0 {
                // violated constraint with zero subgradient: g(y) >= g(x) - delta > 0 everywhere
                return Err(SolveError::InfeasibleConstraint);
            }
            let h = match algorithm {
                Algorithm::Weighted | Algorithm::FixedBudget => eps / ng,
                Algorithm::Adaptive => eps / (ng * ng),
            };
            sum_inv_g_sq += 1.0 / (ng * ng);
            nonproductive_count += 1;
            (h, g_sub.vector.clone(), ng, g_sub.delta)
        };

        let x_next = setup.mirror_step(&x, &direction, h);
        trace.push(IterationRecord {
            k,
            productive,
            h,
            x: x.clone(),
            sub_norm,
            delta_reported,
            g_value,
            f_value_estimate: f_sub.value,
            bregman_to_ref,
            direction,
            x_next: x_next.clone(),
            g_delta: g_sub.delta,
            g_sub_norm,
        });
        k += 1;
        x = x_next;

        let criterion_met = match algorithm {
            Algorithm::Weighted => {
                2.0 * problem.theta0_sq / (eps * eps)
                    <= sum_inv_f_sq + nonproductive_count as f64
            }
            Algorithm::Adaptive => {
                problem.theta0_sq
                    <= eps * eps / 2.0 * (productive_count as f64 + sum_inv_g_sq)
            }
            Algorithm::FixedBudget => k as u64 >= budget,
        };
        if criterion_met {
            break StopReason::CriterionMet;
        }
        if k as u64 >= cap {
            break StopReason::IterationCap;
        }
    };

    let output_rule = match algorithm {
        Algorithm::Weighted => OutputRule::WeightedAverage,
        Algorithm::Adaptive | Algorithm::FixedBudget => OutputRule::ArgminProductive,
    };

    let (output_point, stop_reason) = match stop_reason {
        StopReason::ZeroObjectiveSubgradient => (x, StopReason::ZeroObjectiveSubgradient),
        StopReason::CriterionMet => match output_rule {
            OutputRule::WeightedAverage => {
                // Theorem guarantees a nonempty productive set at the criterion.
                (assemble_weighted_average(&trace)?, StopReason::CriterionMet)
            }
            OutputRule::ArgminProductive => match argmin_productive(&trace) {
                Some(p) => (p, StopReason::CriterionMet),
                // FixedBudget may exhaust its budget without a productive
                // step; report the uncertified state instead of a guarantee.
                None if algorithm == Algorithm::FixedBudget => (x, StopReason::IterationCap),
                None => return Err(SolveError::EmptyProductiveSet),
            },
        },
        StopReason::IterationCap => {
            let best_effort = match output_rule {
                OutputRule::WeightedAverage => assemble_weighted_average(&trace).ok(),
                OutputRule::ArgminProductive => argmin_productive(&trace),
            };
            (best_effort.unwrap_or(x), StopReason::IterationCap)
        }
    };

    debug_assert!(problem
        .setup
        .feasible_set()
        .contains(&output_point, MEMBERSHIP_TOL));

    Ok(SolveResult {
        algorithm,
        eps,
        output_point,
        output_rule,
        iterations: k,
        productive_count,
        nonproductive_count,
        stop_reason,
        trace,
        iteration_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ConvexFn;
    use crate::proximal::FeasibleSet;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    fn box_setup(lo: f64, hi: f64, center: Vec<f64>) -> ProximalSetup {
        let dim = center.len();
        ProximalSetup::euclidean(
            FeasibleSet::Box { lower: vec![lo; dim], upper: vec![hi; dim] },
            center,
        )
        .unwrap()
    }

    /// f = ||x - (1,1)||_1, g = ||x||_inf - 1 on [-1,1]^2; x* = (1,1), f* = 0.
    fn l1_box_problem() -> Problem {
        Problem {
            objective: Oracle::exact_with_lipschitz(
                crate::problems::l1_distance_as_max(&[1.0, 1.0]),
                2.0_f64.sqrt(),
            ),
            constraints: vec![Oracle::exact_with_lipschitz(ConvexFn::SupNorm { level: 1.0 }, 1.0)],
            setup: box_setup(-1.0, 1.0, vec![0.0, 0.0]),
            m_g: 1.0,
            theta0_sq: 1.0,
            reference: Some(ReferenceOptimum {
                point: pt(&[1.0, 1.0]),
                value: 0.0,
                source: ReferenceSource::Analytic,
                error_bound: 0.0,
            }),
        }
    }

    #[test]
    fn productivity_test_boundary_cases() {
        let setup = box_setup(-1.0, 1.0, vec![0.0, 0.0]);
        let sub = |v: &[f64], delta: f64| DeltaSubgradient {
            vector: DualVector::new(v.to_vec()).unwrap(),
            delta,
            value: 0.0,
        };
        // A: g = 0.15, ||grad g|| = 1, delta = 0.05, eps = 0.1 -> true (boundary)
        assert!(productivity_test(
            Algorithm::Weighted,
            0.15,
            &sub(&[1.0, 0.0], 0.05),
            &setup,
            0.1
        ));
        // B: g = 0.2, delta = 0, eps = 0.1 -> false
        assert!(!productivity_test(
            Algorithm::Adaptive,
            0.2,
            &sub(&[1.0, 0.0], 0.0),
            &setup,
            0.1
        ));
        // C: g = 0.5, ||grad g|| = 2, delta = 0.1, eps = 0.1 -> false (0.5 > 0.3)
        assert!(!productivity_test(
            Algorithm::FixedBudget,
            0.5,
            &sub(&[2.0, 0.0], 0.1),
            &setup,
            0.1
        ));
    }

    fn record(k: usize, h: f64, x: &[f64]) -> IterationRecord {
        IterationRecord {
            k,
            productive: true,
            h,
            x: pt(x),
            sub_norm: 1.0,
            delta_reported: 0.0,
            g_value: -1.0,
            f_value_estimate: 0.0,
            bregman_to_ref: None,
            direction: DualVector::zero(x.len()),
            x_next: pt(x),
            g_delta: 0.0,
            g_sub_norm: 0.0,
        }
    }

    #[test]
    fn weighted_average_single_iterate() {
        let trace = vec![record(0, 0.7, &[0.3, 0.7])];
        let avg = assemble_weighted_average(&trace).unwrap();
        assert_eq!(avg.coords(), &[0.3, 0.7]);
    }

    #[test]
    fn weighted_average_two_iterates() {
        let trace = vec![record(0, 1.0, &[0.0, 0.0]), record(1, 3.0, &[1.0, 1.0])];
        let avg = assemble_weighted_average(&trace).unwrap();
        assert!((avg.coords()[0] - 0.75).abs() < 1e-15);
        assert!((avg.coords()[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn weighted_average_scale_invariant() {
        let trace = vec![record(0, 1.0, &[0.0, 0.2]), record(1, 3.0, &[1.0, 0.4])];
        let scaled: Vec<IterationRecord> = trace
            .iter()
            .map(|r| IterationRecord { h: r.h * 17.0, ..r.clone() })
            .collect();
        assert_eq!(
            assemble_weighted_average(&trace).unwrap(),
            assemble_weighted_average(&scaled).unwrap()
        );
    }

    #[test]
    fn weighted_average_empty_productive_errors() {
        let mut r = record(0, 1.0, &[0.0, 0.0]);
        r.productive = false;
        assert_eq!(
            assemble_weighted_average(&[r]).unwrap_err(),
            SolveError::EmptyProductiveSet
        );
    }

    #[test]
    fn weighted_solve_meets_theorem_bounds_on_l1_box() {
        let p = l1_box_problem();
        let eps = 0.2;
        let res = solve_weighted(&p, eps).unwrap();
        assert_eq!(res.stop_reason, StopReason::CriterionMet);
        assert!(res.productive_count >= 1);
        let f_hat = p.objective.value(&res.output_point);
        assert!(f_hat <= eps + 1e-9, "f gap {f_hat}");
        let g_hat = p.constraints[0].value(&res.output_point);
        assert!(g_hat <= eps * p.m_g + 1e-9, "g value {g_hat}");
    }

    #[test]
    fn weighted_solve_with_perturbed_oracle_keeps_widened_bound() {
        let mut p = l1_box_problem();
        let diam = p.setup.feasible_set().diameter(p.setup.norm_kind());
        let noise = 0.05 / diam;
        p.objective = crate::oracle::perturbed_oracle(
            p.objective.clone(),
            noise,
            diam,
            11,
            p.setup.norm_kind(),
        )
        .unwrap();
        let eps = 0.2;
        let res = solve_weighted(&p, eps).unwrap();
        assert_eq!(res.stop_reason, StopReason::CriterionMet);
        let delta_max = res.max_productive_delta();
        assert!(delta_max <= 0.05 + 1e-12);
        let f_hat = p.objective.value(&res.output_point);
        assert!(f_hat <= eps + 0.05 + 1e-9, "f gap {f_hat}");
    }

    /// With g = -1 (zero subgradient) every step is productive and the
    /// weighted method reduces to plain mirror descent.
    #[test]
    fn unconstrained_surrogate_matches_plain_mirror_descent() {
        let setup = box_setup(-2.0, 2.0, vec![1.0, 0.0]);
        let p = Problem {
            objective: Oracle::exact(ConvexFn::HalfSqNorm { center: vec![0.0, 0.0] }),
            constraints: vec![Oracle::exact(ConvexFn::Constant { value: -1.0 })],
            setup: setup.clone(),
            m_g: 1.0,
            theta0_sq: 0.5,
            reference: Some(ReferenceOptimum {
                point: pt(&[0.0, 0.0]),
                value: 0.0,
                source: ReferenceSource::Analytic,
                error_bound: 0.0,
            }),
        };
        let eps = 0.1;
        let res = solve_weighted(&p, eps).unwrap();
        assert_eq!(res.nonproductive_count, 0);

        // plain mirror-descent reference loop, same step law
        let mut x = setup.prox_center();
        assert_eq!(x.coords(), &[1.0, 0.0]);
        for rec in &res.trace {
            assert_eq!(rec.x, x);
            let grad = DualVector::new(x.coords().to_vec()).unwrap();
            let n = setup.dual_norm(&grad);
            let h = eps / (n * n);
            assert_eq!(rec.h, h);
            x = setup.mirror_step(&x, &grad, h);
            assert_eq!(rec.x_next, x);
        }
    }

    #[test]
    fn adaptive_solve_respects_iteration_bound_and_v_certificate() {
        let p = l1_box_problem();
        let eps = 0.2;
        let res = solve_adaptive(&p, eps).unwrap();
        assert_eq!(res.stop_reason, StopReason::CriterionMet);
        assert_eq!(res.iteration_bound, 50);
        assert!(res.iterations as u64 <= 50);
        let x_star = &p.reference.as_ref().unwrap().point;
        let min_v = res
            .productive_records()
            .map(|r| crate::analysis::v_delta_vector(&p.setup, &r.direction, &r.x, x_star))
            .fold(f64::INFINITY, f64::min);
        assert!(min_v <= eps + 1e-9, "min v = {min_v}");
    }

    #[test]
    fn adaptive_bound_holds_with_scaled_constraint_over_seeds() {
        // g scaled by 2 -> M_g = 2, bound 2*4*1/0.04 = 200
        let mut p = l1_box_problem();
        p.constraints = vec![Oracle::exact_with_lipschitz(
            ConvexFn::Scaled {
                factor: 2.0,
                inner: Box::new(ConvexFn::SupNorm { level: 1.0 }),
            },
            2.0,
        )];
        p.m_g = 2.0;
        let eps = 0.2;
        assert_eq!(p.iteration_bound(eps), 200);
        let diam = p.setup.feasible_set().diameter(p.setup.norm_kind());
        for seed in 0..20 {
            let mut q = p.clone();
            q.objective = crate::oracle::perturbed_oracle(
                q.objective.clone(),
                0.02,
                diam,
                seed,
                q.setup.norm_kind(),
            )
            .unwrap();
            let res = solve_adaptive(&q, eps).unwrap();
            assert_eq!(res.stop_reason, StopReason::CriterionMet);
            assert!(res.iterations as u64 <= 200, "seed {seed}: {}", res.iterations);
        }
    }

    #[test]
    fn adaptive_all_productive_runs_exact_count() {
        // g = -1: stopping reduces to |I| = ceil(2 Theta0^2 / eps^2)
        let p = Problem {
            objective: Oracle::exact(crate::problems::l1_distance_as_max(&[1.0, 1.0])),
            constraints: vec![Oracle::exact(ConvexFn::Constant { value: -1.0 })],
            setup: box_setup(-1.0, 1.0, vec![0.0, 0.0]),
            m_g: 1.0,
            theta0_sq: 1.0,
            reference: None,
        };
        let eps = 0.25;
        let res = solve_adaptive(&p, eps).unwrap();
        let expected = (2.0 * 1.0 / (eps * eps)).ceil() as usize;
        assert_eq!(res.productive_count, expected);
        assert_eq!(res.nonproductive_count, 0);
        assert_eq!(res.iterations, expected);
    }

    #[test]
    fn fixed_budget_runs_exactly_budget_iterations() {
        let p = l1_box_problem();
        let res = solve_fixed_budget(&p, 0.2).unwrap();
        assert_eq!(res.iterations, 50);
        assert_eq!(res.stop_reason, StopReason::CriterionMet);
    }

    #[test]
    fn fixed_budget_large_eps_single_iteration() {
        let p = l1_box_problem();
        let res = solve_fixed_budget(&p, 2.0).unwrap();
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn fixed_budget_constraint_delta_widens_g_bound() {
        let mut p = l1_box_problem();
        let diam = p.setup.feasible_set().diameter(p.setup.norm_kind());
        let noise = 0.1 / diam;
        p.constraints = vec![crate::oracle::perturbed_oracle(
            p.constraints[0].clone(),
            noise,
            diam,
            3,
            p.setup.norm_kind(),
        )
        .unwrap()];
        let eps = 0.2;
        let res = solve_fixed_budget(&p, eps).unwrap();
        assert_eq!(res.stop_reason, StopReason::CriterionMet);
        let max_g = res
            .productive_records()
            .map(|r| r.g_value)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(max_g <= p.m_g * eps + 0.1 + 1e-9, "max productive g = {max_g}");
    }

    #[test]
    fn zero_objective_subgradient_terminates_with_minimizer() {
        // f = 1/2 ||x||^2 minimized exactly at the prox center
        let p = Problem {
            objective: Oracle::exact(ConvexFn::HalfSqNorm { center: vec![0.0, 0.0] }),
            constraints: vec![Oracle::exact(ConvexFn::Constant { value: -1.0 })],
            setup: box_setup(-1.0, 1.0, vec![0.0, 0.0]),
            m_g: 1.0,
            theta0_sq: 1.0,
            reference: None,
        };
        let res = solve_weighted(&p, 0.1).unwrap();
        assert_eq!(res.stop_reason, StopReason::ZeroObjectiveSubgradient);
        assert_eq!(res.output_point.coords(), &[0.0, 0.0]);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn infeasible_constraint_detected() {
        let p = Problem {
            objective: Oracle::exact(ConvexFn::l1_distance(vec![0.0, 0.0])),
            constraints: vec![Oracle::exact(ConvexFn::Constant { value: 1.0 })],
            setup: box_setup(-1.0, 1.0, vec![0.0, 0.0]),
            m_g: 1.0,
            theta0_sq: 1.0,
            reference: None,
        };
        assert_eq!(
            solve_weighted(&p, 0.1).unwrap_err(),
            SolveError::InfeasibleConstraint
        );
    }

    #[test]
    fn rejects_nonpositive_eps() {
        let p = l1_box_problem();
        assert!(matches!(
            solve_weighted(&p, -1.0).unwrap_err(),
            SolveError::NonPositiveEps(_)
        ));
    }

    #[test]
    fn step_size_laws_hold_exactly() {
        let p = l1_box_problem();
        for (alg, res) in [
            (Algorithm::Weighted, solve_weighted(&p, 0.1).unwrap()),
            (Algorithm::Adaptive, solve_adaptive(&p, 0.1).unwrap()),
            (Algorithm::FixedBudget, solve_fixed_budget(&p, 0.1).unwrap()),
        ] {
            for r in &res.trace {
                let lhs = match (alg, r.productive) {
                    (Algorithm::Weighted, true) => r.h * r.sub_norm * r.sub_norm,
                    (Algorithm::Weighted, false) => r.h * r.sub_norm,
                    (Algorithm::Adaptive, true) => r.h * r.sub_norm,
                    (Algorithm::Adaptive, false) => r.h * r.sub_norm * r.sub_norm,
                    (Algorithm::FixedBudget, _) => r.h * r.sub_norm,
                };
                assert!((lhs - 0.1).abs() <= 4.0 * f64::EPSILON * 0.1, "{alg:?} k={}", r.k);
            }
        }
    }

    #[test]
    fn iterates_stay_feasible() {
        let p = l1_box_problem();
        let res = solve_adaptive(&p, 0.1).unwrap();
        for r in &res.trace {
            assert!(p.setup.feasible_set().contains(&r.x, 1e-10));
            assert!(p.setup.feasible_set().contains(&r.x_next, 1e-10));
        }
        assert!(p.setup.feasible_set().contains(&res.output_point, 1e-10));
    }

    #[test]
    fn multiple_constraints_descend_the_violated_one() {
        // start at (0.9, 0.9) violating both caps; the aggregator picks a
        // violated component each non-productive step
        let m = crate::oracle::MaxOfFunctions::new(vec![
            crate::oracle::SmoothComponent::Affine { coeffs: vec![1.0, 0.0], intercept: 0.0 },
            crate::oracle::SmoothComponent::Affine { coeffs: vec![-1.0, 0.0], intercept: 0.0 },
        ]);
        let p = Problem {
            objective: Oracle::exact_with_lipschitz(ConvexFn::MaxOf(m), 1.0),
            constraints: vec![
                Oracle::exact_with_lipschitz(
                    ConvexFn::Affine { coeffs: vec![1.0, 0.0], intercept: -0.5 },
                    1.0,
                ),
                Oracle::exact_with_lipschitz(
                    ConvexFn::Affine { coeffs: vec![0.0, 1.0], intercept: -0.5 },
                    1.0,
                ),
            ],
            setup: box_setup(-1.0, 1.0, vec![0.9, 0.9]),
            m_g: 1.0,
            theta0_sq: 0.85,
            reference: Some(ReferenceOptimum {
                point: pt(&[0.0, 0.0]),
                value: 0.0,
                source: ReferenceSource::Analytic,
                error_bound: 0.0,
            }),
        };
        let eps = 0.1;
        let res = solve_adaptive(&p, eps).unwrap();
        assert_eq!(res.stop_reason, StopReason::CriterionMet);
        assert!(res.nonproductive_count > 0);
        for r in res.productive_records() {
            assert!(r.g_value <= eps + 1e-12);
        }
        let g_max = p
            .constraints
            .iter()
            .map(|c| c.value(&res.output_point))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(g_max <= eps + 1e-9);
    }

    #[test]
    fn iteration_cap_returns_partial_trace() {
        // the weighted stop rule on p3-like problems needs far more than the
        // adaptive bound; a cap factor of 1 forces an uncertified exit
        let p = Problem {
            objective: Oracle::exact_with_lipschitz(
                ConvexFn::Affine { coeffs: vec![1.0, 2.0, 3.0], intercept: 0.0 },
                3.0,
            ),
            constraints: vec![Oracle::exact(ConvexFn::Constant { value: -1.0 })],
            setup: ProximalSetup::entropy_simplex(3).unwrap(),
            m_g: 1.0,
            theta0_sq: 3.0_f64.ln(),
            reference: None,
        };
        let res = solve(&p, Algorithm::Weighted, 0.1, &SolverOptions { max_iter_factor: 1.0 })
            .unwrap();
        assert_eq!(res.stop_reason, StopReason::IterationCap);
        assert_eq!(res.iterations as u64, p.iteration_bound(0.1));
        assert_eq!(res.trace.len(), res.iterations);
        assert_eq!(res.productive_count + res.nonproductive_count, res.iterations);
    }

    #[test]
    fn counts_are_consistent_with_trace() {
        let p = l1_box_problem();
        let res = solve_adaptive(&p, 0.1).unwrap();
        assert_eq!(res.trace.len(), res.iterations);
        assert_eq!(res.productive_count + res.nonproductive_count, res.iterations);
        assert_eq!(res.productive_records().count(), res.productive_count);
    }

    #[test]
    fn theta_check_rejects_bad_reference() {
        let mut p = l1_box_problem();
        p.theta0_sq = 0.5; // d((1,1)) = 1 > 0.5
        assert!(matches!(
            solve_weighted(&p, 0.1).unwrap_err(),
            SolveError::ThetaTooSmall { .. }
        ));
    }
}

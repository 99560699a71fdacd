//! Built-in benchmark problems with independently computed reference
//! optima, plus a brute-force grid oracle for small instances.
//!
//! The catalog covers both norm geometries, constraint regimes from
//! vacuous to active-at-optimum, and a smooth-max objective for the
//! corollary checker:
//!
//! | name              | objective            | constraint        | setup          | regime                      |
//! |-------------------|----------------------|-------------------|----------------|-----------------------------|
//! | `p1-l1-box`       | `\|\|x-(1,1)\|\|_1`  | `\|\|x\|\|_inf-1` | Euclidean box  | constraint vacuous on Q     |
//! | `p2-maxaffine-box`| `max(x1,-x1)`        | `x2 - 0.5`        | Euclidean box  | infeasible start            |
//! | `p3-linear-simplex`| `<(1,2,3), x>`      | `x3 - 0.8`        | entropy simplex| constraint inactive         |
//! | `p4-maxquad-box`  | max of two quadratics| `x1 + x2 - 1.5`   | Euclidean box  | smooth max, `M_g > 1`       |
//! | `p5-capped-simplex`| `<(1,2,3), x>`      | `x1 - 0.6`        | entropy simplex| constraint active at optimum|
//! | `p6-l1-ball`      | `\|\|x-(1,1)\|\|_1`  | `x1 + x2 - 1.2`   | Euclidean ball | constraint active at optimum|

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{ConvexFn, MaxOfFunctions, Oracle, SmoothComponent};
use crate::proximal::{FeasibleSet, Point, ProxFunction, ProximalSetup};
use crate::solver::{Problem, ReferenceOptimum, ReferenceSource};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemsError {
    #[error("grid search supports dimension <= 3, got {0}")]
    DimensionTooLarge(usize),
    #[error("grid resolution must be >= 11, got {0}")]
    ResolutionTooSmall(usize),
    #[error("no grid node satisfies the constraints; the problem looks infeasible at this resolution")]
    InfeasibleGrid,
    #[error("unknown problem name: {0}")]
    UnknownProblem(String),
    #[error("solver error: {0}")]
    Solve(#[from] crate::solver::SolveError),
    #[error("proximal error: {0}")]
    Proximal(#[from] crate::proximal::ProximalError),
}

/// Declarative description of a benchmark problem; [`ProblemSpec::build`]
/// turns it into a runnable [`Problem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub dimension: usize,
    pub objective: ConvexFn,
    /// Dual-norm bound on objective subgradients over `Q` (used for
    /// sampling pads and grid error bounds).
    pub objective_lipschitz: f64,
    pub constraints: Vec<ConvexFn>,
    pub setup: ProximalSetup,
    pub m_g: f64,
    pub theta0_sq: f64,
    pub reference: Option<ReferenceSpec>,
}

/// Stored reference optimum of a spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpec {
    pub point: Vec<f64>,
    pub value: f64,
    pub source: ReferenceSource,
}

impl ProblemSpec {
    /// Instantiate oracles and validate the problem invariants.
    pub fn build(&self) -> Result<Problem, ProblemsError> {
        let reference = match &self.reference {
            Some(r) => {
                let error_bound = match r.source {
                    ReferenceSource::Analytic => 0.0,
                    ReferenceSource::GridSearch { resolution } => {
                        grid_error_bound(self, resolution)
                    }
                };
                Some(ReferenceOptimum {
                    point: Point::new(r.point.clone())?,
                    value: r.value,
                    source: r.source.clone(),
                    error_bound,
                })
            }
            None => None,
        };
        let problem = Problem {
            objective: Oracle::exact_with_lipschitz(
                self.objective.clone(),
                self.objective_lipschitz,
            ),
            constraints: self
                .constraints
                .iter()
                .map(|c| Oracle::exact_with_lipschitz(c.clone(), self.m_g))
                .collect(),
            setup: self.setup.clone(),
            m_g: self.m_g,
            theta0_sq: self.theta0_sq,
            reference,
        };
        problem.validate()?;
        Ok(problem)
    }
}

fn grid_error_bound(spec: &ProblemSpec, resolution: usize) -> f64 {
    let h = spec.setup.feasible_set().grid_spacing(resolution);
    spec.objective_lipschitz * h * (spec.dimension as f64).sqrt()
}

fn euclidean_box(lower: Vec<f64>, upper: Vec<f64>, center: Vec<f64>) -> ProximalSetup {
    ProximalSetup::new(FeasibleSet::Box { lower, upper }, ProxFunction::Euclidean { center })
        .expect("catalog setups are well formed")
}

/// `||x - target||_1` written as the max of its 2^dim sign-pattern affines,
/// all-negative pattern first. Values match the plain l1 distance; the
/// subgradient at a full kink (x = target) is the nonzero all-negative
/// pattern instead of the zero vector, so iterates parked on the target
/// keep stepping until the stopping criterion fires.
pub fn l1_distance_as_max(target: &[f64]) -> ConvexFn {
    let dim = target.len();
    let mut components = Vec::with_capacity(1 << dim);
    for mask in 0..(1usize << dim) {
        let signs: Vec<f64> = (0..dim)
            .map(|i| if mask & (1 << i) == 0 { -1.0 } else { 1.0 })
            .collect();
        let intercept: f64 = -signs.iter().zip(target).map(|(s, t)| s * t).sum::<f64>();
        components.push(SmoothComponent::Affine { coeffs: signs, intercept });
    }
    ConvexFn::MaxOf(MaxOfFunctions::new(components))
}

/// The shipped benchmark problems.
pub fn builtin_catalog() -> Vec<ProblemSpec> {
    let sqrt2 = 2.0_f64.sqrt();
    vec![
        ProblemSpec {
            name: "p1-l1-box".into(),
            dimension: 2,
            objective: l1_distance_as_max(&[1.0, 1.0]),
            objective_lipschitz: sqrt2,
            constraints: vec![ConvexFn::SupNorm { level: 1.0 }],
            setup: euclidean_box(vec![-1.0, -1.0], vec![1.0, 1.0], vec![0.0, 0.0]),
            m_g: 1.0,
            theta0_sq: 1.0,
            reference: Some(ReferenceSpec {
                point: vec![1.0, 1.0],
                value: 0.0,
                source: ReferenceSource::Analytic,
            }),
        },
        ProblemSpec {
            name: "p2-maxaffine-box".into(),
            dimension: 2,
            objective: ConvexFn::MaxOf(MaxOfFunctions::new(vec![
                SmoothComponent::Affine { coeffs: vec![1.0, 0.0], intercept: 0.0 },
                SmoothComponent::Affine { coeffs: vec![-1.0, 0.0], intercept: 0.0 },
            ])),
            objective_lipschitz: 1.0,
            constraints: vec![ConvexFn::Affine { coeffs: vec![0.0, 1.0], intercept: -0.5 }],
            setup: euclidean_box(vec![-1.0, -1.0], vec![1.0, 1.0], vec![0.0, 1.0]),
            m_g: 1.0,
            theta0_sq: 0.5,
            reference: Some(ReferenceSpec {
                point: vec![0.0, 0.0],
                value: 0.0,
                source: ReferenceSource::Analytic,
            }),
        },
        ProblemSpec {
            name: "p3-linear-simplex".into(),
            dimension: 3,
            objective: ConvexFn::Affine { coeffs: vec![1.0, 2.0, 3.0], intercept: 0.0 },
            objective_lipschitz: 3.0,
            constraints: vec![ConvexFn::Affine { coeffs: vec![0.0, 0.0, 1.0], intercept: -0.8 }],
            setup: ProximalSetup::entropy_simplex(3).expect("catalog setups are well formed"),
            m_g: 1.0,
            theta0_sq: 3.0_f64.ln(),
            reference: Some(ReferenceSpec {
                point: vec![1.0, 0.0, 0.0],
                value: 1.0,
                source: ReferenceSource::Analytic,
            }),
        },
        ProblemSpec {
            name: "p4-maxquad-box".into(),
            dimension: 2,
            objective: ConvexFn::MaxOf(MaxOfFunctions::new(vec![
                SmoothComponent::Quadratic {
                    curvature: 1.0,
                    center: vec![0.5, 0.0],
                    offset: 0.0,
                },
                SmoothComponent::Quadratic {
                    curvature: 1.0,
                    center: vec![-0.5, 0.0],
                    offset: 0.0,
                },
            ])),
            // max over the box of ||x - (+-0.5, 0)||_2 = ||(1.5, 1)|| = sqrt(3.25)
            objective_lipschitz: 3.25_f64.sqrt(),
            constraints: vec![ConvexFn::Affine { coeffs: vec![1.0, 1.0], intercept: -1.5 }],
            setup: euclidean_box(vec![-1.0, -1.0], vec![1.0, 1.0], vec![0.8, 0.8]),
            m_g: sqrt2,
            theta0_sq: 1.0,
            reference: Some(ReferenceSpec {
                point: vec![0.0, 0.0],
                value: 0.125,
                source: ReferenceSource::GridSearch { resolution: 201 },
            }),
        },
        ProblemSpec {
            name: "p5-capped-simplex".into(),
            dimension: 3,
            objective: ConvexFn::Affine { coeffs: vec![1.0, 2.0, 3.0], intercept: 0.0 },
            objective_lipschitz: 3.0,
            constraints: vec![ConvexFn::Affine { coeffs: vec![1.0, 0.0, 0.0], intercept: -0.6 }],
            setup: ProximalSetup::entropy_simplex(3).expect("catalog setups are well formed"),
            m_g: 1.0,
            theta0_sq: 3.0_f64.ln(),
            reference: Some(ReferenceSpec {
                point: vec![0.6, 0.4, 0.0],
                value: 1.4,
                source: ReferenceSource::Analytic,
            }),
        },
        ProblemSpec {
            name: "p6-l1-ball".into(),
            dimension: 2,
            objective: ConvexFn::l1_distance(vec![1.0, 1.0]),
            objective_lipschitz: sqrt2,
            constraints: vec![ConvexFn::Affine { coeffs: vec![1.0, 1.0], intercept: -1.2 }],
            setup: ProximalSetup::new(
                FeasibleSet::Ball { center: vec![0.0, 0.0], radius: 1.0 },
                ProxFunction::Euclidean { center: vec![0.0, 0.0] },
            )
            .expect("catalog setups are well formed"),
            m_g: sqrt2,
            theta0_sq: 0.5,
            reference: Some(ReferenceSpec {
                point: vec![0.6, 0.6],
                value: 0.8,
                source: ReferenceSource::Analytic,
            }),
        },
    ]
}

/// Look a catalog problem up by name.
pub fn catalog_problem(name: &str) -> Result<ProblemSpec, ProblemsError> {
    builtin_catalog()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| ProblemsError::UnknownProblem(name.to_string()))
}

/// Result of a brute-force grid scan.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub point: Point,
    pub value: f64,
    /// `M_f * h * sqrt(dim)` for grid spacing `h`.
    pub error_bound: f64,
    pub feasible_nodes: usize,
}

/// Exhaustively scan the feasible grid (constraint-satisfying nodes only)
/// and return the best node. The independent ground-truth oracle for every
/// stored reference optimum.
pub fn grid_optimum(spec: &ProblemSpec, resolution: usize) -> Result<GridOptimum, ProblemsError> {
    if spec.dimension > 3 {
        return Err(ProblemsError::DimensionTooLarge(spec.dimension));
    }
    if resolution < 11 {
        return Err(ProblemsError::ResolutionTooSmall(resolution));
    }
    let nodes = spec.setup.feasible_set().grid_nodes(resolution);
    let mut best: Option<(Point, f64)> = None;
    let mut feasible_nodes = 0usize;
    for node in nodes {
        if spec.constraints.iter().any(|g| g.value(&node) > 1e-10) {
            continue;
        }
        feasible_nodes += 1;
        let value = spec.objective.value(&node);
        match &best {
            Some((_, b)) if *b <= value => {}
            _ => best = Some((node, value)),
        }
    }
    let (point, value) = best.ok_or(ProblemsError::InfeasibleGrid)?;
    Ok(GridOptimum {
        point,
        value,
        error_bound: grid_error_bound(spec, resolution),
        feasible_nodes,
    })
}
